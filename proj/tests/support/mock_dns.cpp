#include "mock_dns.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <stdexcept>

#include "fpscan/dns/message.hpp"

namespace fpscan::testing {

namespace {

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

sockaddr_in make_addr(const std::string& address, std::uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (inet_pton(AF_INET, address.c_str(), &sa.sin_addr) != 1) {
    throw std::invalid_argument("bad mock address " + address);
  }
  return sa;
}

bool read_full(int fd, std::uint8_t* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    pollfd p{fd, POLLIN, 0};
    if (poll(&p, 1, 2000) <= 0) return false;
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

MockDnsServer::MockDnsServer(Mode mode, const std::string& address)
    : mode_(mode), address_(address) {
  for (int attempt = 0; attempt < 20 && tcp_fd_ < 0; ++attempt) {
    udp_fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    sockaddr_in sa = make_addr(address, 0);
    if (::bind(udp_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
      throw std::runtime_error("mock DNS: cannot bind UDP");
    }
    socklen_t len = sizeof sa;
    ::getsockname(udp_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
    tcp_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(tcp_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(tcp_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 ||
        ::listen(tcp_fd_, 64) != 0) {
      ::close(tcp_fd_);
      ::close(udp_fd_);
      tcp_fd_ = udp_fd_ = -1;
    }
  }
  if (tcp_fd_ < 0) throw std::runtime_error("mock DNS: cannot bind TCP");
  // The root answers so the startup probe succeeds.
  zone_[""] = ZoneEntry{};
  udp_thread_ = std::thread([this] { udp_loop(); });
  tcp_thread_ = std::thread([this] { tcp_loop(); });
}

MockDnsServer::~MockDnsServer() {
  stop_ = true;
  udp_thread_.join();
  tcp_thread_.join();
  ::close(udp_fd_);
  ::close(tcp_fd_);
}

void MockDnsServer::set(const std::string& name, ZoneEntry entry) {
  std::lock_guard lock(mutex_);
  zone_[lower(name)] = std::move(entry);
}

std::vector<QueryLogEntry> MockDnsServer::queries() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t MockDnsServer::query_count() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

void MockDnsServer::clear_log() {
  std::lock_guard lock(mutex_);
  log_.clear();
}

std::optional<Bytes> MockDnsServer::respond(ByteView query, bool tcp) {
  dns::Message q;
  try {
    q = dns::decode(query);
  } catch (const dns::MessageError&) {
    return std::nullopt;
  }
  if (q.questions.size() != 1) return std::nullopt;
  const auto& question = q.questions.front();
  const auto* opt = q.opt();
  const bool dnssec_ok = opt != nullptr && (opt->ttl & dns::kEdnsDoBit) != 0;
  const std::size_t udp_limit = opt != nullptr ? std::max<std::size_t>(512, opt->klass) : 512;

  std::lock_guard lock(mutex_);
  log_.push_back({lower(question.name), question.type, dnssec_ok, tcp});
  if (blackhole_) return std::nullopt;

  dns::Message r;
  r.header.id = q.header.id;
  r.header.flags = dns::flags::kQr | dns::flags::kRd | dns::flags::kRa;
  r.questions = q.questions;
  if (opt != nullptr) {
    dns::ResourceRecord o;
    o.type = dns::rrtype::kOpt;
    o.klass = 1232;
    o.ttl = dnssec_ok ? dns::kEdnsDoBit : 0;
    r.additional.push_back(o);
  }

  int rcode = dns::rcode::kNoError;
  bool secure = true;
  std::string name = lower(question.name);
  for (int hops = 0; hops < 8; ++hops) {
    auto it = zone_.find(name);
    if (it == zone_.end()) {
      rcode = dns::rcode::kNxDomain;
      secure = false;
      break;
    }
    const ZoneEntry& e = it->second;
    if (e.drop) return std::nullopt;
    if (e.garbage) return Bytes{0x13, 0x37, 0x00};
    if (e.rcode) {
      rcode = *e.rcode;
      break;
    }
    if (mode_ == Mode::kValidating && e.bogus) {
      rcode = dns::rcode::kServFail;
      break;
    }
    secure = secure && e.secure;
    if (!e.cname.empty()) {
      dns::ResourceRecord cname;
      cname.name = name;
      cname.type = dns::rrtype::kCname;
      cname.ttl = 300;
      cname.target = e.cname;
      r.answers.push_back(cname);
      name = lower(e.cname);
      continue;
    }
    auto add = [&](std::uint16_t type, Bytes rdata) {
      dns::ResourceRecord rr;
      rr.name = name;
      rr.type = type;
      rr.ttl = 300;
      rr.rdata = std::move(rdata);
      r.answers.push_back(std::move(rr));
    };
    if (question.type == dns::rrtype::kSshfp) {
      for (const auto& rec : e.sshfp) add(dns::rrtype::kSshfp, sshfp::to_rdata(rec));
    } else if (question.type == dns::rrtype::kA) {
      for (const auto& a : e.a) {
        Bytes raw(4);
        inet_pton(AF_INET, a.c_str(), raw.data());
        add(dns::rrtype::kA, std::move(raw));
      }
    } else if (question.type == dns::rrtype::kAaaa) {
      for (const auto& a : e.aaaa) {
        Bytes raw(16);
        inet_pton(AF_INET6, a.c_str(), raw.data());
        add(dns::rrtype::kAaaa, std::move(raw));
      }
    }
    break;
  }
  r.header.flags |= static_cast<std::uint16_t>(rcode);
  if (rcode != dns::rcode::kNoError) r.answers.clear();
  if (mode_ == Mode::kValidating && dnssec_ok && secure && rcode == dns::rcode::kNoError) {
    r.header.flags |= dns::flags::kAd;
  }

  Bytes wire = dns::encode(r);
  if (!tcp && wire.size() > udp_limit) {
    r.answers.clear();
    r.header.flags |= dns::flags::kTc;
    wire = dns::encode(r);
  }
  return wire;
}

void MockDnsServer::udp_loop() {
  std::uint8_t buf[4096];
  while (!stop_) {
    pollfd p{udp_fd_, POLLIN, 0};
    if (poll(&p, 1, 50) <= 0) continue;
    sockaddr_in from{};
    socklen_t len = sizeof from;
    const ssize_t n =
        ::recvfrom(udp_fd_, buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &len);
    if (n <= 0) continue;
    auto reply = respond(ByteView(buf, static_cast<std::size_t>(n)), false);
    if (reply) {
      ::sendto(udp_fd_, reply->data(), reply->size(), 0, reinterpret_cast<sockaddr*>(&from), len);
    }
  }
}

void MockDnsServer::tcp_loop() {
  while (!stop_) {
    pollfd p{tcp_fd_, POLLIN, 0};
    if (poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept(tcp_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    for (;;) {
      std::uint8_t len_buf[2];
      if (!read_full(fd, len_buf, 2)) break;
      const std::size_t len = (std::size_t{len_buf[0]} << 8) | len_buf[1];
      Bytes msg(len);
      if (!read_full(fd, msg.data(), len)) break;
      auto reply = respond(msg, true);
      if (!reply) break;
      Bytes framed{static_cast<std::uint8_t>(reply->size() >> 8),
                   static_cast<std::uint8_t>(reply->size())};
      framed.insert(framed.end(), reply->begin(), reply->end());
      if (::send(fd, framed.data(), framed.size(), MSG_NOSIGNAL) < 0) break;
    }
    ::close(fd);
  }
}

}  // namespace fpscan::testing
