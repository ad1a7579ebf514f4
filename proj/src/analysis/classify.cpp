#include "fpscan/analysis/classify.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace fpscan::analysis {

using pipeline::DomainScanResult;
using pipeline::ScanStatus;

std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::kFull:
      return "FULL";
    case MatchKind::kPartial:
      return "PARTIAL";
    case MatchKind::kNone:
      return "NONE";
  }
  return "NONE";
}

std::string MatchClass::fraction() const {
  if (total == 0) return "0/1";
  const std::size_t g = std::gcd(matched, total);
  return std::to_string(matched / g) + "/" + std::to_string(total / g);
}

int MatchClass::bin() const {
  if (total == 0) return 0;
  return static_cast<int>(std::min<std::size_t>(9, matched * 10 / total));
}

MatchClass classify_domain_match(std::span<const sshfp::SshfpRecord> records,
                                 std::span<const sshfp::HostKey> keys) {
  if (records.empty()) throw std::invalid_argument("match classification needs records");
  MatchClass mc;
  mc.total = records.size();
  for (const auto& record : records) {
    const bool hit = std::ranges::any_of(
        keys, [&](const sshfp::HostKey& key) { return sshfp::match_record(record, key).matched; });
    if (hit) ++mc.matched;
  }
  mc.kind = mc.matched == mc.total ? MatchKind::kFull
            : mc.matched == 0      ? MatchKind::kNone
                                   : MatchKind::kPartial;
  return mc;
}

std::string_view to_string(DnssecStatus status) {
  switch (status) {
    case DnssecStatus::kSecure:
      return "SECURE";
    case DnssecStatus::kInsecure:
      return "INSECURE";
    case DnssecStatus::kBogus:
      return "BOGUS";
    case DnssecStatus::kUnknown:
      return "UNKNOWN";
  }
  return "UNKNOWN";
}

DnssecStatus dnssec_status(const dns::DnsLookupResult& plain,
                           const dns::DnsLookupResult& validating) {
  if (validating.outcome == dns::Outcome::kNoError) {
    return validating.ad_flag ? DnssecStatus::kSecure : DnssecStatus::kInsecure;
  }
  if (validating.outcome == dns::Outcome::kServFail && plain.outcome == dns::Outcome::kNoError) {
    return DnssecStatus::kBogus;
  }
  return DnssecStatus::kUnknown;
}

std::string_view to_string(ChangeEvent event) {
  switch (event) {
    case ChangeEvent::kUnchanged:
      return "UNCHANGED";
    case ChangeEvent::kFullReplacement:
      return "FULL_REPLACEMENT";
    case ChangeEvent::kPartialRemoval:
      return "PARTIAL_REMOVAL";
    case ChangeEvent::kPartialReplacement:
      return "PARTIAL_REPLACEMENT";
    case ChangeEvent::kAddition:
      return "ADDITION";
  }
  return "UNCHANGED";
}

ChangeEvent diff_record_sets(const std::set<sshfp::SshfpRecord>& before,
                             const std::set<sshfp::SshfpRecord>& after) {
  if (before == after) return ChangeEvent::kUnchanged;
  if (std::ranges::includes(before, after)) return ChangeEvent::kPartialRemoval;
  if (std::ranges::includes(after, before)) return ChangeEvent::kAddition;
  const bool disjoint = std::ranges::none_of(before, [&](const auto& r) { return after.contains(r); });
  return disjoint ? ChangeEvent::kFullReplacement : ChangeEvent::kPartialReplacement;
}

std::vector<FingerprintCluster> duplicate_fingerprint_clusters(
    std::span<const DomainScanResult> log) {
  std::map<std::pair<std::uint8_t, Bytes>, std::set<std::string>> groups;
  for (const auto& result : log) {
    if (result.domain.empty()) continue;
    for (const auto& verdict : result.records) {
      groups[{verdict.record.hash_type.code(), verdict.record.fingerprint}].insert(result.domain);
    }
  }
  std::vector<FingerprintCluster> clusters;
  for (auto& [key, domains] : groups) {
    if (domains.size() < 2) continue;
    clusters.push_back({sshfp::HashType(key.first), key.second, std::move(domains)});
  }
  // groups is ordered by (hash, fingerprint), so a stable sort keeps ties
  // deterministic.
  std::ranges::stable_sort(clusters, [](const auto& a, const auto& b) {
    return a.domains.size() > b.domains.size();
  });
  return clusters;
}

std::string_view to_string(DomainCategory category) {
  switch (category) {
    case DomainCategory::kFullMatch:
      return "full_match";
    case DomainCategory::kPartialMatch:
      return "partial_match";
    case DomainCategory::kNoMatch:
      return "no_match";
    case DomainCategory::kNoSsh:
      return "no_ssh";
    case DomainCategory::kNoValidRecords:
      return "no_valid_records";
    case DomainCategory::kNoSshfp:
      return "no_sshfp";
    case DomainCategory::kNxDomain:
      return "nxdomain";
    case DomainCategory::kDnsError:
      return "dns_error";
    case DomainCategory::kAError:
      return "a_error";
    case DomainCategory::kNoIpv4:
      return "no_ipv4";
    case DomainCategory::kFilteredWildcard:
      return "filtered_wildcard";
    case DomainCategory::kInvalidName:
      return "invalid_name";
  }
  return "invalid_name";
}

std::vector<sshfp::SshfpRecord> valid_records(const DomainScanResult& result) {
  std::set<sshfp::SshfpRecord> out;
  for (const auto& v : result.records) {
    if (v.validity.valid()) out.insert(v.record);
  }
  return {out.begin(), out.end()};
}

std::vector<sshfp::HostKey> all_host_keys(const DomainScanResult& result) {
  std::set<sshfp::HostKey> out;
  for (const auto& host : result.hosts) out.insert(host.keys.begin(), host.keys.end());
  return {out.begin(), out.end()};
}

DnssecStatus dnssec_status(const DomainScanResult& result) {
  if (!result.sshfp_lookup || !result.validating_lookup) return DnssecStatus::kUnknown;
  return dnssec_status(*result.sshfp_lookup, *result.validating_lookup);
}

DomainCategory categorize(const DomainScanResult& result) {
  switch (result.status) {
    case ScanStatus::kComplete: {
      const auto keys = all_host_keys(result);
      const auto records = valid_records(result);
      if (keys.empty()) return DomainCategory::kNoSsh;
      if (records.empty()) return DomainCategory::kNoValidRecords;
      switch (classify_domain_match(records, keys).kind) {
        case MatchKind::kFull:
          return DomainCategory::kFullMatch;
        case MatchKind::kPartial:
          return DomainCategory::kPartialMatch;
        case MatchKind::kNone:
          return DomainCategory::kNoMatch;
      }
      return DomainCategory::kNoMatch;
    }
    case ScanStatus::kNoSshfp:
      return DomainCategory::kNoSshfp;
    case ScanStatus::kNxDomain:
      return DomainCategory::kNxDomain;
    case ScanStatus::kDnsError:
      return DomainCategory::kDnsError;
    case ScanStatus::kNoValidRecords:
      return DomainCategory::kNoValidRecords;
    case ScanStatus::kAError:
      return DomainCategory::kAError;
    case ScanStatus::kNoIpv4:
      return DomainCategory::kNoIpv4;
    case ScanStatus::kFilteredWildcard:
      return DomainCategory::kFilteredWildcard;
    case ScanStatus::kInvalidName:
      return DomainCategory::kInvalidName;
  }
  return DomainCategory::kInvalidName;
}

}  // namespace fpscan::analysis
