#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/bytes.hpp"
#include "fpscan/net/socket.hpp"
#include "fpscan/sshfp.hpp"

namespace fpscan::dns {

using net::Endpoint;

enum class Outcome { kNoError, kNxDomain, kServFail, kTimeout, kBroken };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> outcome_from_string(std::string_view s);

enum class QueryType { kSshfp, kA };

std::string_view to_string(QueryType qtype);
std::optional<QueryType> query_type_from_string(std::string_view s);

struct DnsLookupResult {
  std::string domain;
  /// Owner name of the returned records after following CNAMEs.
  std::string canonical_name;
  QueryType qtype = QueryType::kSshfp;
  Outcome outcome = Outcome::kTimeout;
  std::vector<sshfp::SshfpRecord> records;  // SSHFP answers
  std::vector<std::string> addresses;       // A answers, dotted quad
  bool ad_flag = false;
  /// Answered through the DNSSEC-validating path (DO bit requested).
  bool validating = false;
  bool used_tcp = false;
  std::chrono::milliseconds elapsed{0};
  /// Human-readable detail for TIMEOUT/BROKEN outcomes.
  std::string error;
};

struct ResolverConfig {
  Endpoint plain_resolver;
  Endpoint validating_resolver;
  std::chrono::milliseconds timeout{5000};
  /// Total attempts per query; the wall-time bound is attempts x timeout.
  int retries = 2;
  bool allow_same_endpoint = false;

  /// Throws std::invalid_argument on a non-positive timeout/retry count, or
  /// identical endpoints without allow_same_endpoint.
  void validate() const;
};

/// Total mapping of a raw exchange result: nullopt means no reply arrived.
Outcome classify_response(std::optional<ByteView> reply);

/// 0 -> NOERROR, 2 -> SERVFAIL, 3 -> NXDOMAIN, anything else BROKEN.
Outcome classify_rcode(int rcode);

/// Stub resolver handle bound to one resolver endpoint. Not thread-safe;
/// each worker owns its own.
class Client {
 public:
  Client(Endpoint resolver, std::chrono::milliseconds timeout, int retries);

  DnsLookupResult query_sshfp(std::string_view domain, bool want_dnssec);
  DnsLookupResult query_a(std::string_view domain);

  /// Reachability probe (root SOA). True when any well-formed reply arrives.
  bool probe();

  const Endpoint& resolver() const { return resolver_; }

 private:
  struct Exchange {
    std::optional<Bytes> reply;
    bool saw_broken = false;
    bool used_tcp = false;
    std::string error;
  };

  Exchange exchange(std::string_view name, std::uint16_t qtype, bool dnssec_ok);
  std::optional<Bytes> exchange_tcp(ByteView query, std::uint16_t id, net::Deadline deadline,
                                    std::string& error);
  DnsLookupResult lookup(std::string_view domain, QueryType qtype, bool want_dnssec);

  Endpoint resolver_;
  std::chrono::milliseconds timeout_;
  int retries_;
  net::Socket udp_;
  std::mt19937 rng_;
};

DnsLookupResult query_sshfp(std::string_view domain, const Endpoint& resolver, bool want_dnssec,
                            std::chrono::milliseconds timeout = std::chrono::seconds(5),
                            int retries = 2);

DnsLookupResult query_a(std::string_view domain, const Endpoint& resolver,
                        std::chrono::milliseconds timeout = std::chrono::seconds(5),
                        int retries = 2);

}  // namespace fpscan::dns
