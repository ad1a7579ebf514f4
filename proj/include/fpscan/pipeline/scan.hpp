#pragma once

// The scan pipeline: names -> normalize/filter/dedup -> SSHFP query ->
// record validation -> A lookup -> keyscan + validating re-query -> log.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/dns/client.hpp"
#include "fpscan/keyscan/keyscan.hpp"
#include "fpscan/pipeline/checkpoint.hpp"
#include "fpscan/pipeline/ingest.hpp"
#include "fpscan/pipeline/names.hpp"
#include "fpscan/pipeline/rate_limiter.hpp"
#include "fpscan/pipeline/result.hpp"

namespace fpscan::pipeline {

enum class DedupMode { kNone, kExactName, kRegistrable };

std::string_view to_string(DedupMode mode);
/// "none", "exact", "registrable".
std::optional<DedupMode> dedup_mode_from_string(std::string_view s);

struct ScanConfig {
  std::string input_path = "-";
  InputFormat input_format = InputFormat::kAuto;
  dns::ResolverConfig resolvers;
  int query_workers = 50;
  int ssh_workers = 50;
  double qps_limit = 200;
  DedupMode dedup = DedupMode::kExactName;
  std::string output_path;
  /// Empty: compiled-in snapshot.
  std::string psl_path;
  std::uint16_t ssh_port = 22;
  std::vector<std::string> key_types = keyscan::default_key_types();
  std::chrono::milliseconds ssh_timeout{5000};
  std::size_t per_host_cap = 4;
  std::string policy_url;
  bool resume = false;
  std::size_t queue_capacity = 1024;

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

struct ScanSummary {
  std::size_t names_read = 0;
  std::size_t emitted = 0;
  std::size_t duplicates = 0;
  std::size_t resumed = 0;
  std::size_t keyscanned = 0;
  std::map<ScanStatus, std::size_t> by_status;
};

/// Shared, internally synchronized services used by every worker.
struct ScanServices {
  RateLimiter* limiter = nullptr;
  keyscan::HostConnectionGate* gate = nullptr;
  const PublicSuffixList* psl = nullptr;
};

/// Normalizes and classifies a raw input name. The result has status
/// kInvalidName or kFilteredWildcard when it must not be queried, and
/// kComplete (provisional) otherwise.
DomainScanResult prepare_domain(std::string_view input, const PublicSuffixList& psl);

/// Per-worker scanning stages. Owns its DNS client handles; not
/// thread-safe.
class DomainScanner {
 public:
  DomainScanner(const ScanConfig& config, ScanServices services);

  /// SSHFP lookup, record validation and A lookup. Returns true when the
  /// domain qualifies for keyscan; otherwise the status is final.
  bool query_stage(DomainScanResult& result);
  /// Keyscan of every address, match matrix and validating re-query.
  void ssh_stage(DomainScanResult& result);
  /// All stages in sequence.
  DomainScanResult scan(std::string_view input);

 private:
  void throttle();

  const ScanConfig& config_;
  ScanServices services_;
  dns::Client plain_;
  dns::Client validating_;
};

/// Runs the pipeline over `reader`, appending JSON lines to `output`.
/// `resume` lists work already present in the log. Progress goes to
/// `progress` when non-null.
ScanSummary run_scan(const ScanConfig& config, NameReader& reader, std::ostream& output,
                     const ResumeState* resume = nullptr, std::ostream* progress = nullptr,
                     RateLimiter* limiter = nullptr);

/// File-level driver: opens input and output (truncating unless
/// config.resume), loads the PSL and runs the pipeline.
ScanSummary run_scan(const ScanConfig& config, std::ostream* progress = nullptr);

}  // namespace fpscan::pipeline
