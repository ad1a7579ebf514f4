#include "fpscan/pipeline/names.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace fpscan::pipeline {

namespace {

constexpr std::size_t kMaxNameLength = 253;
constexpr std::size_t kMaxLabelLength = 63;

constexpr std::string_view kBuiltinRules = R"(
ac ad ae af ag ai al am ao aq ar as at au aw ax az ba bb bd be bf bg bh bi bj bm bn bo br bs
bt bw by bz ca cc cd cf cg ch ci cl cm cn co cr cu cv cw cx cy cz de dj dk dm do dz ec ee eg
es et eu fi fj fm fo fr ga gd ge gf gg gh gi gl gm gn gp gq gr gs gt gu gw gy hk hm hn hr ht
hu id ie il im in io iq ir is it je jm jo jp ke kg kh ki km kn kp kr kw ky kz la lb lc li lk
lr ls lt lu lv ly ma mc md me mg mh mk ml mm mn mo mp mq mr ms mt mu mv mw mx my mz na nc ne
nf ng ni nl no np nr nu nz om pa pe pf pg ph pk pl pm pn pr ps pt pw py qa re ro rs ru rw sa
sb sc sd se sg sh si sk sl sm sn so sr st su sv sx sy sz tc td tf tg th tj tk tl tm tn to tr
tt tv tw tz ua ug uk us uy uz va vc ve vg vi vn vu wf ws ye yt za zm zw
com net org edu gov mil int arpa info biz name pro mobi aero coop museum xyz app dev io
ac.uk co.uk gov.uk ltd.uk me.uk net.uk nhs.uk org.uk plc.uk police.uk sch.uk
com.au net.au org.au edu.au gov.au asn.au id.au
ac.jp ad.jp co.jp ed.jp go.jp gr.jp lg.jp ne.jp or.jp
ac.nz co.nz geek.nz gen.nz govt.nz net.nz org.nz school.nz
com.br net.br org.br gov.br edu.br
ac.za co.za gov.za net.za org.za web.za
com.cn net.cn org.cn gov.cn edu.cn ac.cn
com.tw net.tw org.tw edu.tw gov.tw idv.tw
ac.kr co.kr go.kr ne.kr or.kr re.kr
co.in net.in org.in firm.in gen.in ind.in ac.in edu.in gov.in
com.mx net.mx org.mx gob.mx edu.mx
com.ar net.ar org.ar gob.ar edu.ar
com.tr net.tr org.tr gov.tr edu.tr
ac.il co.il org.il net.il gov.il muni.il
com.sg net.sg org.sg edu.sg gov.sg
com.hk net.hk org.hk edu.hk gov.hk idv.hk
com.ru net.ru org.ru
com.ua net.ua org.ua
co.at or.at ac.at gv.at
com.pl net.pl org.pl
com.es nom.es org.es gob.es edu.es
com.pt org.pt edu.pt gov.pt
co.id or.id ac.id go.id web.id
com.my net.my org.my edu.my gov.my
com.ph net.ph org.ph edu.ph gov.ph
com.vn net.vn org.vn edu.vn gov.vn
co.th in.th ac.th go.th or.th
github.io gitlab.io blogspot.com herokuapp.com appspot.com netlify.app vercel.app
pages.dev workers.dev cloudfront.net azurewebsites.net s3.amazonaws.com
*.ck !www.ck *.kawasaki.jp !city.kawasaki.jp *.compute.amazonaws.com
)";

std::vector<std::string_view> split_labels(std::string_view name) {
  std::vector<std::string_view> labels;
  std::size_t start = 0;
  for (;;) {
    const auto dot = name.find('.', start);
    labels.push_back(name.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return labels;
}

bool label_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
}

}  // namespace

std::string normalize_domain(std::string_view name) {
  std::string out(name);
  if (!out.empty() && out.back() == '.') out.pop_back();
  if (out.empty()) throw InvalidName("empty domain name");
  if (out.size() > kMaxNameLength) throw InvalidName("domain name longer than 253 octets");
  for (char& c : out) {
    if (static_cast<unsigned char>(c) >= 0x80) {
      throw InvalidName("non-ASCII domain name (use punycode): " + std::string(name));
    }
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  const auto labels = split_labels(out);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto label = labels[i];
    if (label.empty()) throw InvalidName("empty label in '" + std::string(name) + "'");
    if (label.size() > kMaxLabelLength) throw InvalidName("label longer than 63 octets");
    if (label == "*" && i == 0) continue;
    for (char c : label) {
      if (!label_char(c)) {
        throw InvalidName("invalid character in '" + std::string(name) + "'");
      }
    }
  }
  return out;
}

bool is_wildcard(std::string_view name) { return name == "*" || name.starts_with("*."); }

PublicSuffixList PublicSuffixList::parse(std::istream& in) {
  PublicSuffixList psl;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string rule;
    if (!(fields >> rule) || rule.starts_with("//")) continue;
    psl.add_rule(rule);
  }
  return psl;
}

PublicSuffixList PublicSuffixList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open public suffix list '" + path + "'");
  return parse(in);
}

const PublicSuffixList& PublicSuffixList::builtin() {
  static const PublicSuffixList psl = [] {
    PublicSuffixList p;
    std::istringstream in{std::string(kBuiltinRules)};
    std::string rule;
    while (in >> rule) p.add_rule(rule);
    return p;
  }();
  return psl;
}

void PublicSuffixList::add_rule(std::string_view rule) {
  std::string r(rule);
  for (char& c : r) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  if (r.starts_with("!")) {
    exceptions_.insert(r.substr(1));
  } else if (r.starts_with("*.")) {
    wildcards_.insert(r.substr(2));
  } else if (!r.empty()) {
    rules_.insert(r);
  }
}

std::string PublicSuffixList::public_suffix(std::string_view name) const {
  const auto labels = split_labels(name);
  const std::size_t n = labels.size();
  // suffix(k) = the rightmost k labels joined.
  auto suffix = [&](std::size_t k) {
    std::string s;
    for (std::size_t i = n - k; i < n; ++i) {
      if (!s.empty()) s.push_back('.');
      s += labels[i];
    }
    return s;
  };

  std::size_t best = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::string s = suffix(k);
    if (exceptions_.contains(s)) return suffix(k - 1);
    if (rules_.contains(s)) best = k;
    if (k >= 2 && wildcards_.contains(suffix(k - 1))) best = k;
  }
  return suffix(best);
}

std::optional<std::string> PublicSuffixList::registrable_domain(std::string_view name) const {
  if (name.empty() || is_wildcard(name)) return std::nullopt;
  const std::string ps = public_suffix(name);
  if (ps.size() >= name.size()) return std::nullopt;
  const std::string_view head = name.substr(0, name.size() - ps.size() - 1);
  const auto dot = head.rfind('.');
  const std::string_view label = dot == std::string_view::npos ? head : head.substr(dot + 1);
  return std::string(label) + "." + ps;
}

}  // namespace fpscan::pipeline
