#include "fpscan/dns/client.hpp"

#include <arpa/inet.h>
#include <sys/socket.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <stdexcept>

#include "fpscan/dns/message.hpp"

namespace fpscan::dns {

namespace {

constexpr std::size_t kMaxUdpReply = 65535;
constexpr int kMaxCnameHops = 16;

std::uint16_t qtype_code(QueryType qtype) {
  return qtype == QueryType::kSshfp ? rrtype::kSshfp : rrtype::kA;
}

bool question_matches(const Message& m, std::string_view name, std::uint16_t qtype) {
  if (m.questions.size() != 1) return false;
  const auto& q = m.questions.front();
  return q.type == qtype && q.klass == kClassIn && names_equal(q.name, name);
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kNoError:
      return "NOERROR";
    case Outcome::kNxDomain:
      return "NXDOMAIN";
    case Outcome::kServFail:
      return "SERVFAIL";
    case Outcome::kTimeout:
      return "TIMEOUT";
    case Outcome::kBroken:
      return "BROKEN";
  }
  return "BROKEN";
}

std::optional<Outcome> outcome_from_string(std::string_view s) {
  for (auto o : {Outcome::kNoError, Outcome::kNxDomain, Outcome::kServFail, Outcome::kTimeout,
                 Outcome::kBroken}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

std::string_view to_string(QueryType qtype) { return qtype == QueryType::kSshfp ? "SSHFP" : "A"; }

std::optional<QueryType> query_type_from_string(std::string_view s) {
  if (s == "SSHFP") return QueryType::kSshfp;
  if (s == "A") return QueryType::kA;
  return std::nullopt;
}

void ResolverConfig::validate() const {
  if (timeout.count() <= 0) throw std::invalid_argument("resolver timeout must be positive");
  if (retries < 1) throw std::invalid_argument("resolver retries must be at least 1");
  if (plain_resolver == validating_resolver && !allow_same_endpoint) {
    throw std::invalid_argument("plain and validating resolver are both " +
                                plain_resolver.to_string() +
                                "; set allow_same_endpoint to permit this");
  }
}

Outcome classify_rcode(int rcode) {
  switch (rcode) {
    case rcode::kNoError:
      return Outcome::kNoError;
    case rcode::kServFail:
      return Outcome::kServFail;
    case rcode::kNxDomain:
      return Outcome::kNxDomain;
    default:
      return Outcome::kBroken;
  }
}

Outcome classify_response(std::optional<ByteView> reply) {
  if (!reply) return Outcome::kTimeout;
  try {
    const Message m = decode(*reply);
    if (!m.header.has(flags::kQr)) return Outcome::kBroken;
    return classify_rcode(m.header.rcode());
  } catch (const MessageError&) {
    return Outcome::kBroken;
  }
}

Client::Client(Endpoint resolver, std::chrono::milliseconds timeout, int retries)
    : resolver_(std::move(resolver)),
      timeout_(timeout),
      retries_(retries),
      udp_(net::connect_udp(resolver_)),
      rng_(std::random_device{}()) {
  if (timeout_.count() <= 0) throw std::invalid_argument("timeout must be positive");
  if (retries_ < 1) throw std::invalid_argument("retries must be at least 1");
}

std::optional<Bytes> Client::exchange_tcp(ByteView query, std::uint16_t id,
                                          net::Deadline deadline, std::string& error) {
  try {
    net::Socket sock = net::connect_tcp(resolver_, deadline);
    Bytes framed;
    framed.push_back(static_cast<std::uint8_t>(query.size() >> 8));
    framed.push_back(static_cast<std::uint8_t>(query.size()));
    framed.insert(framed.end(), query.begin(), query.end());
    sock.send_all(framed, deadline);
    std::array<std::uint8_t, 2> len_buf{};
    sock.recv_exact(len_buf, deadline);
    Bytes reply(static_cast<std::size_t>((len_buf[0] << 8) | len_buf[1]));
    sock.recv_exact(reply, deadline);
    if (reply.size() < 12 || decode_header(reply).id != id) {
      error = "TCP reply with mismatched id";
      return std::nullopt;
    }
    return reply;
  } catch (const net::NetError& e) {
    error = std::string("TCP fallback: ") + e.what();
    return std::nullopt;
  }
}

Client::Exchange Client::exchange(std::string_view name, std::uint16_t qtype, bool dnssec_ok) {
  Exchange ex;
  for (int attempt = 0; attempt < retries_; ++attempt) {
    const auto id = static_cast<std::uint16_t>(rng_());
    const Bytes query = encode_query(id, name, qtype, dnssec_ok);
    const net::Deadline deadline = net::Clock::now() + timeout_;
    try {
      udp_.send_all(query, deadline);
    } catch (const net::NetError& e) {
      ex.error = e.what();
      continue;
    }

    Bytes buf(kMaxUdpReply);
    while (net::Clock::now() < deadline) {
      std::size_t n = 0;
      try {
        if (!udp_.wait_readable(deadline)) break;
        n = udp_.recv_some(buf, deadline);
      } catch (const net::TimeoutError&) {
        break;
      } catch (const net::NetError& e) {
        // ICMP unreachable on the connected socket; nothing more will arrive.
        ex.error = e.what();
        break;
      }
      ByteView datagram(buf.data(), n);
      if (n < 12) {
        ex.saw_broken = true;
        ex.error = "short reply";
        continue;
      }
      if (decode_header(datagram).id != id) continue;  // stale reply from an earlier attempt

      Message m;
      try {
        m = decode(datagram);
      } catch (const MessageError& e) {
        ex.saw_broken = true;
        ex.error = e.what();
        continue;
      }
      if (!m.header.has(flags::kQr) || !question_matches(m, name, qtype)) {
        ex.saw_broken = true;
        ex.error = "reply does not answer the question";
        continue;
      }
      if (m.header.has(flags::kTc)) {
        ex.used_tcp = true;
        auto full = exchange_tcp(query, id, deadline, ex.error);
        if (full) {
          try {
            const Message tm = decode(*full);
            if (tm.header.has(flags::kQr) && question_matches(tm, name, qtype)) {
              ex.reply = std::move(full);
              return ex;
            }
            ex.error = "TCP reply does not answer the question";
          } catch (const MessageError& e) {
            ex.error = e.what();
          }
          ex.saw_broken = true;
        }
        break;
      }
      ex.reply = Bytes(datagram.begin(), datagram.end());
      return ex;
    }
    if (ex.error.empty()) ex.error = "no reply within timeout";
  }
  return ex;
}

DnsLookupResult Client::lookup(std::string_view domain, QueryType qtype, bool want_dnssec) {
  if (!is_valid_name(domain) || domain.empty()) {
    throw std::invalid_argument("invalid domain name: '" + std::string(domain) + "'");
  }
  const auto start = net::Clock::now();
  DnsLookupResult result;
  result.domain = std::string(domain);
  result.canonical_name = result.domain;
  result.qtype = qtype;
  result.validating = want_dnssec;

  const std::uint16_t code = qtype_code(qtype);
  Exchange ex = exchange(domain, code, want_dnssec);
  result.used_tcp = ex.used_tcp;

  if (!ex.reply) {
    result.outcome = ex.saw_broken ? Outcome::kBroken : Outcome::kTimeout;
    result.error = ex.error;
  } else {
    const Message m = decode(*ex.reply);
    result.outcome = classify_rcode(m.header.rcode());
    result.ad_flag = want_dnssec && m.header.has(flags::kAd);
    if (result.outcome == Outcome::kNoError) {
      std::string owner = result.domain;
      for (int hop = 0; hop < kMaxCnameHops; ++hop) {
        auto it = std::ranges::find_if(m.answers, [&](const ResourceRecord& rr) {
          return rr.type == rrtype::kCname && names_equal(rr.name, owner);
        });
        if (it == m.answers.end()) break;
        owner = it->target;
      }
      result.canonical_name = owner;
      try {
        for (const auto& rr : m.answers) {
          if (rr.type != code || rr.klass != kClassIn || !names_equal(rr.name, owner)) continue;
          if (qtype == QueryType::kSshfp) {
            result.records.push_back(sshfp::parse_rdata(rr.rdata));
          } else {
            if (rr.rdata.size() != 4) throw sshfp::ParseError("A RDATA is not 4 bytes");
            char text[INET_ADDRSTRLEN] = {};
            ::inet_ntop(AF_INET, rr.rdata.data(), text, sizeof(text));
            std::string addr(text);
            if (std::ranges::find(result.addresses, addr) == result.addresses.end()) {
              result.addresses.push_back(std::move(addr));
            }
          }
        }
      } catch (const sshfp::ParseError& e) {
        result.outcome = Outcome::kBroken;
        result.error = e.what();
        result.records.clear();
        result.addresses.clear();
      }
    }
  }
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(net::Clock::now() - start);
  return result;
}

DnsLookupResult Client::query_sshfp(std::string_view domain, bool want_dnssec) {
  return lookup(domain, QueryType::kSshfp, want_dnssec);
}

DnsLookupResult Client::query_a(std::string_view domain) {
  return lookup(domain, QueryType::kA, false);
}

bool Client::probe() {
  const Exchange ex = exchange("", rrtype::kSoa, false);
  return ex.reply.has_value();
}

DnsLookupResult query_sshfp(std::string_view domain, const Endpoint& resolver, bool want_dnssec,
                            std::chrono::milliseconds timeout, int retries) {
  Client client(resolver, timeout, retries);
  return client.query_sshfp(domain, want_dnssec);
}

DnsLookupResult query_a(std::string_view domain, const Endpoint& resolver,
                        std::chrono::milliseconds timeout, int retries) {
  Client client(resolver, timeout, retries);
  return client.query_a(domain);
}

}  // namespace fpscan::dns
