#pragma once

// Aggregation of result logs into distributions, match classes, DNSSEC
// splits, duplicate clusters and record-set changes.

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpscan/analysis/classify.hpp"
#include "fpscan/pipeline/result.hpp"

namespace fpscan::analysis {

/// Counts per KEY-ALGO and HASH-TYPE column.
struct Histogram {
  /// RESERVED RSA DSA ECDSA ED25519 ED448 UNASSIGNED
  std::array<std::uint64_t, 7> key_algo{};
  /// RESERVED SHA1 SHA256 UNASSIGNED
  std::array<std::uint64_t, 4> hash_type{};
  std::uint64_t total = 0;

  static const std::array<std::string_view, 7>& key_algo_labels();
  static const std::array<std::string_view, 4>& hash_type_labels();
  static std::size_t key_algo_index(sshfp::KeyAlgo algo);
  static std::size_t hash_type_index(sshfp::HashType hash);

  void add(sshfp::KeyAlgo algo, sshfp::HashType hash);
  Histogram& operator+=(const Histogram& other);
  friend bool operator==(const Histogram&, const Histogram&) = default;
};

/// Counts indexed by DnssecStatus.
using DnssecSplit = std::array<std::uint64_t, 4>;

struct RecordSetChange {
  std::string domain;
  std::string before_at;  // timestamps of the two observations
  std::string after_at;
  ChangeEvent event = ChangeEvent::kUnchanged;
};

struct ScanReport {
  std::uint64_t log_lines = 0;
  std::uint64_t schema_errors = 0;
  std::uint64_t observations = 0;
  std::uint64_t queries = 0;
  /// Distinct domain names (first observation each).
  std::uint64_t domains = 0;
  std::map<std::string, std::uint64_t> categories;

  std::uint64_t domains_with_records = 0;
  std::uint64_t records_total = 0;
  std::uint64_t records_valid = 0;
  std::map<std::string, std::uint64_t> invalid_reasons;

  Histogram dns;
  Histogram ssh;
  Histogram matching;
  Histogram mismatching;
  std::map<std::string, std::uint64_t> near_misses;
  std::uint64_t unverified_signatures = 0;

  /// Domains with keys and valid records.
  std::array<std::uint64_t, 3> match_classes{};  // FULL PARTIAL NONE
  std::array<std::uint64_t, 10> ratio_bins{};
  std::map<std::string, std::uint64_t> exact_ratios;
  std::uint64_t domains_matching = 0;

  DnssecSplit dnssec_domains{};
  DnssecSplit dnssec_matching_domains{};
  DnssecSplit dnssec_records{};
  DnssecSplit dnssec_record_sets{};
  DnssecSplit dnssec_hosts{};
  std::array<DnssecSplit, 3> match_by_dnssec{};

  std::vector<FingerprintCluster> clusters;
  std::vector<RecordSetChange> changes;
  std::array<std::uint64_t, 5> change_counts{};

  /// matching + mismatching == ssh, column by column.
  bool reconciled() const;
};

/// Streaming fold over log lines. Domain-level figures use the first
/// observation of each domain name; queries and changes use every line.
class ReportBuilder {
 public:
  void add(const pipeline::DomainScanResult& result);
  /// Decodes one JSON line; schema violations are counted, not thrown.
  void add_line(std::string_view line);
  void add_stream(std::istream& in);
  ScanReport build() const;

 private:
  void add_first_observation(const pipeline::DomainScanResult& result);

  ScanReport report_;
  std::set<std::string> seen_;
  std::map<std::string, std::pair<std::string, std::set<sshfp::SshfpRecord>>> last_sets_;
  std::map<std::pair<std::uint8_t, Bytes>, std::set<std::string>> fingerprint_domains_;
  std::array<std::set<std::set<sshfp::SshfpRecord>>, 4> record_sets_;
};

ScanReport aggregate_stats(std::span<const pipeline::DomainScanResult> log);

/// Reads each path in order; throws std::runtime_error when one cannot be
/// opened.
ScanReport aggregate_logs(const std::vector<std::string>& paths);

nlohmann::json report_to_json(const ScanReport& report);
std::string render_text(const ScanReport& report);

/// Writes report.json and report.txt into dir (created if needed).
void write_report(const ScanReport& report, const std::string& dir);

}  // namespace fpscan::analysis
