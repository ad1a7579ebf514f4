#pragma once

// Per-domain scan results and their JSON Lines encoding.

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fpscan/dns/client.hpp"
#include "fpscan/keyscan/keyscan.hpp"
#include "fpscan/sshfp.hpp"

namespace fpscan::pipeline {

inline constexpr std::string_view kResultSchema = "fpscan.result/1";

/// Where a domain left the pipeline. Only kComplete carries keyscan data.
enum class ScanStatus {
  kComplete,
  kNoSshfp,          // NOERROR, empty SSHFP set
  kNxDomain,
  kDnsError,         // SSHFP lookup SERVFAIL/TIMEOUT/BROKEN
  kNoValidRecords,   // records present, none valid
  kAError,           // A lookup failed
  kNoIpv4,
  kFilteredWildcard,
  kInvalidName,
};

std::string_view to_string(ScanStatus status);
std::optional<ScanStatus> scan_status_from_string(std::string_view s);

struct RecordVerdict {
  sshfp::SshfpRecord record;
  sshfp::Validity validity;
};

/// One cell of the record x key matrix for one address.
struct MatchEntry {
  std::string address;
  std::size_t record = 0;  // index into DomainScanResult::records
  std::size_t key = 0;     // index into that host's keys
  sshfp::MatchOutcome outcome;
};

struct DomainScanResult {
  std::string input;
  std::string domain;
  std::optional<std::string> registrable_domain;
  ScanStatus status = ScanStatus::kInvalidName;
  std::chrono::system_clock::time_point started_at;
  std::chrono::system_clock::time_point finished_at;
  std::optional<dns::DnsLookupResult> sshfp_lookup;
  std::vector<RecordVerdict> records;
  std::optional<dns::DnsLookupResult> a_lookup;
  std::vector<keyscan::KeyscanResult> hosts;
  std::vector<MatchEntry> matches;
  std::optional<dns::DnsLookupResult> validating_lookup;
  std::string error;

  bool keyscan_attempted() const { return !hosts.empty(); }
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json lookup_to_json(const dns::DnsLookupResult& lookup);
dns::DnsLookupResult lookup_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DomainScanResult& result);
/// Throws SchemaError on missing/ill-typed fields or a foreign schema tag.
DomainScanResult result_from_json(const nlohmann::json& j);

/// Single line without the trailing newline.
std::string to_json_line(const DomainScanResult& result);
DomainScanResult parse_json_line(std::string_view line);

std::string format_timestamp(std::chrono::system_clock::time_point t);
std::chrono::system_clock::time_point parse_timestamp(std::string_view text);

}  // namespace fpscan::pipeline
