#include "fpscan/dns/message.hpp"

#include <algorithm>
#include <cctype>

namespace fpscan::dns {

namespace {

constexpr std::size_t kMaxNameWire = 255;
constexpr int kMaxPointerHops = 64;

void put16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put32(Bytes& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v));
}

class Reader {
 public:
  explicit Reader(ByteView wire) : wire_(wire) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }

  std::uint8_t u8() {
    need(1);
    return wire_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>((wire_[pos_] << 8) | wire_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    const std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  Bytes bytes(std::size_t n) {
    need(n);
    Bytes out(wire_.begin() + static_cast<std::ptrdiff_t>(pos_),
              wire_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  std::string name() {
    std::string out;
    std::size_t wire_len = 1;
    std::size_t cursor = pos_;
    std::optional<std::size_t> resume;
    int hops = 0;
    for (;;) {
      if (cursor >= wire_.size()) throw MessageError("name runs past end of message");
      const std::uint8_t len = wire_[cursor];
      if ((len & 0xc0) == 0xc0) {
        if (cursor + 1 >= wire_.size()) throw MessageError("truncated compression pointer");
        if (++hops > kMaxPointerHops) throw MessageError("compression pointer loop");
        if (!resume) resume = cursor + 2;
        const std::size_t target = static_cast<std::size_t>(((len & 0x3f) << 8) | wire_[cursor + 1]);
        if (target >= cursor) throw MessageError("forward compression pointer");
        cursor = target;
        continue;
      }
      if ((len & 0xc0) != 0) throw MessageError("unsupported label type");
      if (len == 0) {
        ++cursor;
        break;
      }
      if (cursor + 1 + len > wire_.size()) throw MessageError("label runs past end of message");
      wire_len += len + 1u;
      if (wire_len > kMaxNameWire) throw MessageError("name longer than 255 octets");
      if (!out.empty()) out.push_back('.');
      out.append(reinterpret_cast<const char*>(wire_.data() + cursor + 1), len);
      cursor += 1u + len;
    }
    pos_ = resume.value_or(cursor);
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > wire_.size()) throw MessageError("message truncated");
  }

  ByteView wire_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> labels_of(std::string_view name) {
  std::vector<std::string_view> labels;
  if (name.empty()) return labels;
  std::size_t start = 0;
  for (;;) {
    const auto dot = name.find('.', start);
    labels.push_back(name.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return labels;
}

ResourceRecord read_rr(Reader& r) {
  ResourceRecord rr;
  rr.name = r.name();
  rr.type = r.u16();
  rr.klass = r.u16();
  rr.ttl = r.u32();
  const std::uint16_t rdlen = r.u16();
  const std::size_t rdata_start = r.pos();
  rr.rdata = r.bytes(rdlen);
  if (rr.type == rrtype::kCname || rr.type == rrtype::kNs) {
    const std::size_t after = r.pos();
    r.seek(rdata_start);
    rr.target = r.name();
    if (r.pos() != after) throw MessageError("name RDATA length mismatch");
  }
  return rr;
}

void write_rr(Bytes& out, const ResourceRecord& rr) {
  const Bytes name = encode_name(rr.name);
  out.insert(out.end(), name.begin(), name.end());
  put16(out, rr.type);
  put16(out, rr.klass);
  put32(out, rr.ttl);
  Bytes rdata = rr.rdata;
  if (rdata.empty() && (rr.type == rrtype::kCname || rr.type == rrtype::kNs)) {
    rdata = encode_name(rr.target);
  }
  if (rdata.size() > 0xffff) throw MessageError("RDATA too long");
  put16(out, static_cast<std::uint16_t>(rdata.size()));
  out.insert(out.end(), rdata.begin(), rdata.end());
}

}  // namespace

const ResourceRecord* Message::opt() const {
  for (const auto& rr : additional) {
    if (rr.type == rrtype::kOpt) return &rr;
  }
  return nullptr;
}

bool is_valid_name(std::string_view name) {
  if (name.empty()) return true;
  std::size_t wire_len = 1;
  for (auto label : labels_of(name)) {
    if (label.empty() || label.size() > 63) return false;
    wire_len += label.size() + 1;
  }
  return wire_len <= kMaxNameWire;
}

bool names_equal(std::string_view a, std::string_view b) {
  auto strip = [](std::string_view s) {
    if (!s.empty() && s.back() == '.') s.remove_suffix(1);
    return s;
  };
  a = strip(a);
  b = strip(b);
  return std::ranges::equal(a, b, [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) ==
           std::tolower(static_cast<unsigned char>(y));
  });
}

Bytes encode_name(std::string_view name) {
  if (!name.empty() && name.back() == '.') name.remove_suffix(1);
  if (!is_valid_name(name)) throw MessageError("invalid domain name: '" + std::string(name) + "'");
  Bytes out;
  for (auto label : labels_of(name)) {
    out.push_back(static_cast<std::uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  out.push_back(0);
  return out;
}

Bytes encode(const Message& message) {
  Bytes out;
  put16(out, message.header.id);
  put16(out, message.header.flags);
  put16(out, static_cast<std::uint16_t>(message.questions.size()));
  put16(out, static_cast<std::uint16_t>(message.answers.size()));
  put16(out, static_cast<std::uint16_t>(message.authority.size()));
  put16(out, static_cast<std::uint16_t>(message.additional.size()));
  for (const auto& q : message.questions) {
    const Bytes name = encode_name(q.name);
    out.insert(out.end(), name.begin(), name.end());
    put16(out, q.type);
    put16(out, q.klass);
  }
  for (const auto& rr : message.answers) write_rr(out, rr);
  for (const auto& rr : message.authority) write_rr(out, rr);
  for (const auto& rr : message.additional) write_rr(out, rr);
  return out;
}

Bytes encode_query(std::uint16_t id, std::string_view name, std::uint16_t qtype,
                   bool dnssec_ok, std::uint16_t udp_size) {
  Message m;
  m.header.id = id;
  m.header.flags = flags::kRd;
  m.questions.push_back(Question{std::string(name), qtype, kClassIn});
  if (dnssec_ok) {
    ResourceRecord opt;
    opt.type = rrtype::kOpt;
    opt.klass = udp_size;
    opt.ttl = kEdnsDoBit;
    m.additional.push_back(std::move(opt));
  }
  return encode(m);
}

Header decode_header(ByteView wire) {
  if (wire.size() < 12) throw MessageError("message shorter than header");
  Reader r(wire);
  Header h;
  h.id = r.u16();
  h.flags = r.u16();
  return h;
}

Message decode(ByteView wire) {
  Reader r(wire);
  Message m;
  m.header.id = r.u16();
  m.header.flags = r.u16();
  const std::uint16_t qd = r.u16();
  const std::uint16_t an = r.u16();
  const std::uint16_t ns = r.u16();
  const std::uint16_t ar = r.u16();
  for (int i = 0; i < qd; ++i) {
    Question q;
    q.name = r.name();
    q.type = r.u16();
    q.klass = r.u16();
    m.questions.push_back(std::move(q));
  }
  for (int i = 0; i < an; ++i) m.answers.push_back(read_rr(r));
  for (int i = 0; i < ns; ++i) m.authority.push_back(read_rr(r));
  for (int i = 0; i < ar; ++i) m.additional.push_back(read_rr(r));
  return m;
}

}  // namespace fpscan::dns
