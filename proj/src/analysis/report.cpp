#include "fpscan/analysis/report.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>

namespace fpscan::analysis {

using nlohmann::json;
using pipeline::DomainScanResult;

namespace {

constexpr std::array<sshfp::HashType, 2> kHashes = {sshfp::kHashSha1, sshfp::kHashSha256};
constexpr std::array<DnssecStatus, 4> kDnssecOrder = {DnssecStatus::kSecure, DnssecStatus::kInsecure,
                                                      DnssecStatus::kBogus, DnssecStatus::kUnknown};
constexpr std::array<MatchKind, 3> kMatchOrder = {MatchKind::kFull, MatchKind::kPartial,
                                                  MatchKind::kNone};
constexpr std::array<ChangeEvent, 5> kChangeOrder = {
    ChangeEvent::kUnchanged, ChangeEvent::kFullReplacement, ChangeEvent::kPartialRemoval,
    ChangeEvent::kPartialReplacement, ChangeEvent::kAddition};

std::size_t index_of(DnssecStatus s) { return static_cast<std::size_t>(s); }
std::size_t index_of(MatchKind k) { return static_cast<std::size_t>(k); }
std::size_t index_of(ChangeEvent e) { return static_cast<std::size_t>(e); }

json histogram_json(const Histogram& h) {
  json algos = json::object();
  for (std::size_t i = 0; i < h.key_algo.size(); ++i) {
    algos[std::string(Histogram::key_algo_labels()[i])] = h.key_algo[i];
  }
  json hashes = json::object();
  for (std::size_t i = 0; i < h.hash_type.size(); ++i) {
    hashes[std::string(Histogram::hash_type_labels()[i])] = h.hash_type[i];
  }
  return {{"key_algo", algos}, {"hash_type", hashes}, {"total", h.total}};
}

json split_json(const DnssecSplit& split) {
  json j = json::object();
  for (auto s : kDnssecOrder) j[std::string(to_string(s))] = split[index_of(s)];
  return j;
}

std::string percent(std::uint64_t part, std::uint64_t whole) {
  if (whole == 0) return "-";
  return fmt::format("{:.1f}%", 100.0 * static_cast<double>(part) / static_cast<double>(whole));
}

}  // namespace

const std::array<std::string_view, 7>& Histogram::key_algo_labels() {
  static const std::array<std::string_view, 7> labels = {
      "RESERVED", "RSA", "DSA", "ECDSA", "ED25519", "ED448", "UNASSIGNED"};
  return labels;
}

const std::array<std::string_view, 4>& Histogram::hash_type_labels() {
  static const std::array<std::string_view, 4> labels = {"RESERVED", "SHA1", "SHA256",
                                                         "UNASSIGNED"};
  return labels;
}

std::size_t Histogram::key_algo_index(sshfp::KeyAlgo algo) {
  if (algo.code() <= 4) return algo.code();
  return algo.code() == 6 ? 5 : 6;
}

std::size_t Histogram::hash_type_index(sshfp::HashType hash) {
  return hash.code() <= 2 ? hash.code() : 3;
}

void Histogram::add(sshfp::KeyAlgo algo, sshfp::HashType hash) {
  ++key_algo[key_algo_index(algo)];
  ++hash_type[hash_type_index(hash)];
  ++total;
}

Histogram& Histogram::operator+=(const Histogram& other) {
  for (std::size_t i = 0; i < key_algo.size(); ++i) key_algo[i] += other.key_algo[i];
  for (std::size_t i = 0; i < hash_type.size(); ++i) hash_type[i] += other.hash_type[i];
  total += other.total;
  return *this;
}

bool ScanReport::reconciled() const {
  Histogram sum = matching;
  sum += mismatching;
  return sum == ssh;
}

void ReportBuilder::add(const DomainScanResult& result) {
  ++report_.log_lines;
  ++report_.observations;
  if (result.sshfp_lookup) ++report_.queries;
  const std::string key = result.domain.empty() ? result.input : result.domain;

  for (const auto& verdict : result.records) {
    if (!result.domain.empty()) {
      fingerprint_domains_[{verdict.record.hash_type.code(), verdict.record.fingerprint}].insert(
          result.domain);
    }
  }

  if (result.sshfp_lookup && result.sshfp_lookup->outcome == dns::Outcome::kNoError &&
      !result.records.empty()) {
    std::set<sshfp::SshfpRecord> current;
    for (const auto& v : result.records) current.insert(v.record);
    const std::string at = pipeline::format_timestamp(result.started_at);
    auto it = last_sets_.find(key);
    if (it != last_sets_.end()) {
      const ChangeEvent event = diff_record_sets(it->second.second, current);
      ++report_.change_counts[index_of(event)];
      if (event != ChangeEvent::kUnchanged) {
        report_.changes.push_back({key, it->second.first, at, event});
      }
    }
    last_sets_[key] = {at, std::move(current)};
  }

  if (seen_.insert(key).second) add_first_observation(result);
}

void ReportBuilder::add_first_observation(const DomainScanResult& result) {
  ++report_.domains;
  ++report_.categories[std::string(to_string(categorize(result)))];

  std::set<sshfp::SshfpRecord> decoded;
  std::map<sshfp::SshfpRecord, sshfp::Validity> validity;
  for (const auto& v : result.records) {
    decoded.insert(v.record);
    validity[v.record] = v.validity;
  }
  if (!decoded.empty()) ++report_.domains_with_records;
  for (const auto& record : decoded) {
    ++report_.records_total;
    report_.dns.add(record.key_algo, record.hash_type);
    const auto& verdict = validity[record];
    if (verdict.valid()) {
      ++report_.records_valid;
    } else {
      ++report_.invalid_reasons[std::string(sshfp::to_string(*verdict.reason))];
    }
  }

  if (result.status != pipeline::ScanStatus::kComplete) return;

  const auto valid = valid_records(result);
  const DnssecStatus status = dnssec_status(result);
  const std::size_t si = index_of(status);

  for (const auto& host : result.hosts) {
    for (const auto& key : host.keys) {
      const auto algo = sshfp::key_algo_from_ssh_name(key.algo_name());
      if (!algo) continue;
      for (const auto hash : kHashes) {
        report_.ssh.add(*algo, hash);
        const Bytes fp = sshfp::compute_fingerprint(key.blob(), hash);
        const bool hit = std::ranges::any_of(valid, [&](const sshfp::SshfpRecord& r) {
          return r.key_algo == *algo && r.hash_type == hash && r.fingerprint == fp;
        });
        (hit ? report_.matching : report_.mismatching).add(*algo, hash);
      }
    }
    for (const auto& [algo, ok] : host.signature_verified) {
      if (!ok) ++report_.unverified_signatures;
    }
  }
  for (const auto& m : result.matches) {
    if (m.outcome.near_miss != sshfp::NearMiss::kNone) {
      ++report_.near_misses[std::string(sshfp::to_string(m.outcome.near_miss))];
    }
  }

  const auto keys = all_host_keys(result);
  if (!keys.empty() && !valid.empty()) {
    const MatchClass mc = classify_domain_match(valid, keys);
    ++report_.match_classes[index_of(mc.kind)];
    ++report_.ratio_bins[static_cast<std::size_t>(mc.bin())];
    ++report_.exact_ratios[mc.fraction()];
    ++report_.match_by_dnssec[index_of(mc.kind)][si];
    if (mc.matched > 0) {
      ++report_.domains_matching;
      ++report_.dnssec_matching_domains[si];
    }
  }

  if (result.validating_lookup) {
    ++report_.dnssec_domains[si];
    report_.dnssec_records[si] += valid.size();
    if (!valid.empty()) record_sets_[si].insert(std::set<sshfp::SshfpRecord>(valid.begin(), valid.end()));
    for (const auto& host : result.hosts) {
      if (!host.keys.empty()) ++report_.dnssec_hosts[si];
    }
  }
}

void ReportBuilder::add_line(std::string_view line) {
  if (line.find_first_not_of(" \t\r\n") == std::string_view::npos) return;
  try {
    add(pipeline::parse_json_line(line));
  } catch (const pipeline::SchemaError&) {
    ++report_.log_lines;
    ++report_.schema_errors;
  }
}

void ReportBuilder::add_stream(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) add_line(line);
}

ScanReport ReportBuilder::build() const {
  ScanReport out = report_;
  for (auto s : kDnssecOrder) out.dnssec_record_sets[index_of(s)] = record_sets_[index_of(s)].size();
  for (const auto& [key, domains] : fingerprint_domains_) {
    if (domains.size() < 2) continue;
    out.clusters.push_back({sshfp::HashType(key.first), key.second, domains});
  }
  std::ranges::stable_sort(out.clusters, [](const auto& a, const auto& b) {
    return a.domains.size() > b.domains.size();
  });
  return out;
}

ScanReport aggregate_stats(std::span<const DomainScanResult> log) {
  ReportBuilder builder;
  for (const auto& r : log) builder.add(r);
  return builder.build();
}

ScanReport aggregate_logs(const std::vector<std::string>& paths) {
  ReportBuilder builder;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read log '" + path + "'");
    builder.add_stream(in);
  }
  return builder.build();
}

json report_to_json(const ScanReport& r) {
  json classes = json::object();
  for (auto k : kMatchOrder) classes[std::string(to_string(k))] = r.match_classes[index_of(k)];
  json by_dnssec = json::object();
  for (auto k : kMatchOrder) by_dnssec[std::string(to_string(k))] = split_json(r.match_by_dnssec[index_of(k)]);
  json clusters = json::array();
  for (const auto& c : r.clusters) {
    clusters.push_back({{"hash_type", c.hash_type.code()},
                        {"fingerprint", to_hex(c.fingerprint)},
                        {"size", c.domains.size()},
                        {"domains", c.domains}});
  }
  json changes = json::array();
  for (const auto& c : r.changes) {
    changes.push_back({{"domain", c.domain},
                       {"before", c.before_at},
                       {"after", c.after_at},
                       {"event", to_string(c.event)}});
  }
  json change_counts = json::object();
  for (auto e : kChangeOrder) change_counts[std::string(to_string(e))] = r.change_counts[index_of(e)];

  return {
      {"schema", "fpscan.report/1"},
      {"population",
       {{"log_lines", r.log_lines},
        {"schema_errors", r.schema_errors},
        {"observations", r.observations},
        {"queries", r.queries},
        {"domains", r.domains},
        {"domains_with_records", r.domains_with_records},
        {"records_total", r.records_total},
        {"records_valid", r.records_valid},
        {"records_invalid", r.records_total - r.records_valid}}},
      {"categories", r.categories},
      {"invalid_reasons", r.invalid_reasons},
      {"histograms",
       {{"dns", histogram_json(r.dns)},
        {"ssh", histogram_json(r.ssh)},
        {"matching", histogram_json(r.matching)},
        {"mismatching", histogram_json(r.mismatching)}}},
      {"reconciled", r.reconciled()},
      {"near_misses", r.near_misses},
      {"unverified_signatures", r.unverified_signatures},
      {"match",
       {{"classes", classes},
        {"ratio_bins", r.ratio_bins},
        {"exact_ratios", r.exact_ratios},
        {"domains_matching", r.domains_matching},
        {"by_dnssec", by_dnssec}}},
      {"dnssec",
       {{"domains", split_json(r.dnssec_domains)},
        {"matching_domains", split_json(r.dnssec_matching_domains)},
        {"records", split_json(r.dnssec_records)},
        {"record_sets", split_json(r.dnssec_record_sets)},
        {"hosts", split_json(r.dnssec_hosts)}}},
      {"clusters", clusters},
      {"changes", {{"counts", change_counts}, {"events", changes}}},
  };
}

std::string render_text(const ScanReport& r) {
  std::string out;
  auto line = [&out](const std::string& s) {
    out += s;
    out += '\n';
  };

  line(fmt::format("Log lines: {} ({} schema errors), observations: {}, SSHFP queries: {}",
                   r.log_lines, r.schema_errors, r.observations, r.queries));
  line(fmt::format("Domains: {}, with SSHFP records: {}", r.domains, r.domains_with_records));
  line(fmt::format("Records: {} decoded, {} valid, {} invalid", r.records_total, r.records_valid,
                   r.records_total - r.records_valid));
  for (const auto& [reason, n] : r.invalid_reasons) line(fmt::format("  {:<24}{:>8}", reason, n));
  line("");

  const std::string header = fmt::format("{:<12}{:>10}{:>10}{:>10}{:>13}", "", "DNS", "SSH",
                                         "Matching", "Mismatching");
  line("KEY-ALGO");
  line(header);
  for (std::size_t i = 0; i < Histogram::key_algo_labels().size(); ++i) {
    line(fmt::format("{:<12}{:>10}{:>10}{:>10}{:>13}", Histogram::key_algo_labels()[i],
                     r.dns.key_algo[i], r.ssh.key_algo[i], r.matching.key_algo[i],
                     r.mismatching.key_algo[i]));
  }
  line(fmt::format("{:<12}{:>10}{:>10}{:>10}{:>13}", "Total", r.dns.total, r.ssh.total,
                   r.matching.total, r.mismatching.total));
  line("");
  line("HASH-TYPE");
  line(header);
  for (std::size_t i = 0; i < Histogram::hash_type_labels().size(); ++i) {
    line(fmt::format("{:<12}{:>10}{:>10}{:>10}{:>13}", Histogram::hash_type_labels()[i],
                     r.dns.hash_type[i], r.ssh.hash_type[i], r.matching.hash_type[i],
                     r.mismatching.hash_type[i]));
  }
  line(fmt::format("{:<12}{:>10}{:>10}{:>10}{:>13}", "Total", r.dns.total, r.ssh.total,
                   r.matching.total, r.mismatching.total));
  line(fmt::format("Matching + mismatching = SSH: {}", r.reconciled() ? "yes" : "NO"));
  line("");

  line("Domain categories");
  for (const auto& [name, n] : r.categories) {
    line(fmt::format("  {:<20}{:>8}{:>9}", name, n, percent(n, r.domains)));
  }
  line("");

  const std::uint64_t classified = r.match_classes[0] + r.match_classes[1] + r.match_classes[2];
  line(fmt::format("Match classes ({} domains with keys and valid records)", classified));
  for (auto k : kMatchOrder) {
    const auto n = r.match_classes[index_of(k)];
    line(fmt::format("  {:<20}{:>8}{:>9}", to_string(k), n, percent(n, classified)));
  }
  line("  Ratio bins");
  for (std::size_t i = 0; i < r.ratio_bins.size(); ++i) {
    line(fmt::format("    [{:>3}%,{:>4}%{} {:>8}", i * 10, (i + 1) * 10, i == 9 ? "]" : ")",
                     r.ratio_bins[i]));
  }
  line("  Exact ratios");
  for (const auto& [ratio, n] : r.exact_ratios) line(fmt::format("    {:<10}{:>8}", ratio, n));
  line("");

  line("DNSSEC");
  line(fmt::format("  {:<18}{:>10}{:>10}{:>10}{:>10}", "", "SECURE", "INSECURE", "BOGUS",
                   "UNKNOWN"));
  auto split_row = [&](std::string_view label, const DnssecSplit& s) {
    line(fmt::format("  {:<18}{:>10}{:>10}{:>10}{:>10}", label, s[0], s[1], s[2], s[3]));
  };
  split_row("domains", r.dnssec_domains);
  split_row("matching domains", r.dnssec_matching_domains);
  split_row("records", r.dnssec_records);
  split_row("record sets", r.dnssec_record_sets);
  split_row("hosts", r.dnssec_hosts);
  for (auto k : kMatchOrder) {
    split_row(fmt::format("{} match", to_string(k)), r.match_by_dnssec[index_of(k)]);
  }
  line("");

  line(fmt::format("Duplicate fingerprint clusters: {}", r.clusters.size()));
  for (const auto& c : r.clusters) {
    line(fmt::format("  {:>4} domains  {} {}", c.domains.size(), c.hash_type.code(),
                     to_hex(c.fingerprint)));
  }
  line("");
  line("Record-set changes");
  for (auto e : kChangeOrder) {
    line(fmt::format("  {:<22}{:>8}", to_string(e), r.change_counts[index_of(e)]));
  }
  if (!r.near_misses.empty()) {
    line("");
    line("Near misses");
    for (const auto& [kind, n] : r.near_misses) line(fmt::format("  {:<22}{:>8}", kind, n));
  }
  if (r.unverified_signatures > 0) {
    line(fmt::format("Unverified KEX signatures: {}", r.unverified_signatures));
  }
  return out;
}

void write_report(const ScanReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir);
  {
    std::ofstream out(base / "report.json", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (base / "report.json").string());
    out << report_to_json(report).dump(2) << '\n';
  }
  std::ofstream out(base / "report.txt", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (base / "report.txt").string());
  out << render_text(report);
}

}  // namespace fpscan::analysis
