#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/dns/client.hpp"
#include "fpscan/pipeline/result.hpp"
#include "fpscan/sshfp.hpp"

namespace fpscan::analysis {

enum class MatchKind { kFull, kPartial, kNone };

std::string_view to_string(MatchKind kind);

/// matched/total of a domain's valid records that some host key matches.
struct MatchClass {
  std::size_t matched = 0;
  std::size_t total = 0;
  MatchKind kind = MatchKind::kNone;

  double ratio() const { return total == 0 ? 0.0 : static_cast<double>(matched) / total; }
  /// Reduced fraction, "1/2", "1/1", "0/1".
  std::string fraction() const;
  /// 0..9; ratio 1 falls in the last bin.
  int bin() const;
};

/// Throws std::invalid_argument when records is empty.
MatchClass classify_domain_match(std::span<const sshfp::SshfpRecord> records,
                                 std::span<const sshfp::HostKey> keys);

enum class DnssecStatus { kSecure, kInsecure, kBogus, kUnknown };

std::string_view to_string(DnssecStatus status);

DnssecStatus dnssec_status(const dns::DnsLookupResult& plain,
                           const dns::DnsLookupResult& validating);

enum class ChangeEvent {
  kUnchanged,
  kFullReplacement,
  kPartialRemoval,
  kPartialReplacement,
  kAddition,
};

std::string_view to_string(ChangeEvent event);

ChangeEvent diff_record_sets(const std::set<sshfp::SshfpRecord>& before,
                             const std::set<sshfp::SshfpRecord>& after);

struct FingerprintCluster {
  sshfp::HashType hash_type;
  Bytes fingerprint;
  std::set<std::string> domains;
};

/// Domains sharing an exact (hash type, fingerprint) pair; clusters of two
/// or more, largest first.
std::vector<FingerprintCluster> duplicate_fingerprint_clusters(
    std::span<const pipeline::DomainScanResult> log);

/// Per-domain view of one log line used by the report.
enum class DomainCategory {
  kFullMatch,
  kPartialMatch,
  kNoMatch,
  kNoSsh,
  kNoValidRecords,
  kNoSshfp,
  kNxDomain,
  kDnsError,
  kAError,
  kNoIpv4,
  kFilteredWildcard,
  kInvalidName,
};

std::string_view to_string(DomainCategory category);

DomainCategory categorize(const pipeline::DomainScanResult& result);

/// Valid decoded records of a result, deduplicated.
std::vector<sshfp::SshfpRecord> valid_records(const pipeline::DomainScanResult& result);

/// Distinct host keys over all addresses.
std::vector<sshfp::HostKey> all_host_keys(const pipeline::DomainScanResult& result);

/// DNSSEC status of a result; kUnknown when no validating lookup was made.
DnssecStatus dnssec_status(const pipeline::DomainScanResult& result);

}  // namespace fpscan::analysis
