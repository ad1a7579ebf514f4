#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fpscan/pipeline/checkpoint.hpp"
#include "fpscan/pipeline/scan.hpp"
#include "testbed.hpp"

namespace fpscan::pipeline {
namespace {

using namespace std::chrono_literals;
using testing::Testbed;

Testbed& testbed() {
  static Testbed tb;
  return tb;
}

ScanConfig config_for(Testbed& tb) {
  ScanConfig c;
  c.resolvers.plain_resolver = tb.plain_resolver();
  c.resolvers.validating_resolver = tb.validating_resolver();
  c.resolvers.timeout = 1s;
  c.ssh_port = tb.ssh_port();
  c.ssh_timeout = 2s;
  c.query_workers = 4;
  c.ssh_workers = 4;
  c.qps_limit = 1000;
  return c;
}

std::vector<DomainScanResult> scan_text(const ScanConfig& config, const std::string& names,
                                        ScanSummary* summary = nullptr,
                                        const ResumeState* resume = nullptr) {
  std::istringstream in(names);
  NameReader reader(in, InputFormat::kNames);
  std::ostringstream out;
  const auto s = run_scan(config, reader, out, resume);
  if (summary != nullptr) *summary = s;
  std::vector<DomainScanResult> results;
  std::istringstream lines(out.str());
  for (std::string line; std::getline(lines, line);) results.push_back(parse_json_line(line));
  return results;
}

std::map<std::string, DomainScanResult> by_domain(const std::vector<DomainScanResult>& rs) {
  std::map<std::string, DomainScanResult> m;
  for (const auto& r : rs) m.emplace(r.domain, r);
  return m;
}

TEST(Config, Validation) {
  ScanConfig c = config_for(testbed());
  EXPECT_NO_THROW(c.validate());
  c.query_workers = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = config_for(testbed());
  c.qps_limit = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(dedup_mode_from_string("registrable"), DedupMode::kRegistrable);
  EXPECT_FALSE(dedup_mode_from_string("fuzzy").has_value());
}

TEST(Prepare, FiltersBeforeQuerying) {
  const auto& psl = PublicSuffixList::builtin();
  EXPECT_EQ(prepare_domain("*.example.com", psl).status, ScanStatus::kFilteredWildcard);
  EXPECT_EQ(prepare_domain("bad..name", psl).status, ScanStatus::kInvalidName);
  const auto ok = prepare_domain("WWW.Example.co.uk.", psl);
  EXPECT_EQ(ok.status, ScanStatus::kComplete);
  EXPECT_EQ(ok.domain, "www.example.co.uk");
  EXPECT_EQ(ok.registrable_domain, "example.co.uk");
  EXPECT_EQ(ok.input, "WWW.Example.co.uk.");
}

TEST(Scan, TestbedStatuses) {
  auto& tb = testbed();
  std::string names;
  for (const auto& n : tb.names()) names += n + "\n";
  ScanSummary summary;
  const auto results = scan_text(config_for(tb), names, &summary);
  ASSERT_EQ(results.size(), 10u);
  EXPECT_EQ(summary.emitted, 10u);
  EXPECT_EQ(summary.keyscanned, 8u);

  const auto m = by_domain(results);
  for (int i = 1; i <= 3; ++i) {
    const auto& full = m.at("full" + std::to_string(i) + ".example");
    EXPECT_EQ(full.status, ScanStatus::kComplete);
    ASSERT_EQ(full.hosts.size(), 1u);
    EXPECT_EQ(full.hosts[0].keys.size(), 2u);
    EXPECT_TRUE(full.validating_lookup->ad_flag);
    EXPECT_EQ(full.matches.size(), 8u);

    const auto& partial = m.at("partial" + std::to_string(i) + ".example");
    EXPECT_EQ(partial.status, ScanStatus::kComplete);
    EXPECT_FALSE(partial.validating_lookup->ad_flag);
  }
  EXPECT_EQ(m.at("nossh1.example").hosts.at(0).keys.size(), 0u);
  EXPECT_EQ(m.at("invalid1.example").status, ScanStatus::kNoValidRecords);
  EXPECT_FALSE(m.at("invalid1.example").keyscan_attempted());
  EXPECT_FALSE(m.at("invalid1.example").a_lookup.has_value());
  EXPECT_EQ(m.at("missing.example").status, ScanStatus::kNxDomain);
  EXPECT_EQ(tb.tripwire().connections(), 0u);
}

TEST(Scan, EmptyInputEmitsNothing) {
  ScanSummary summary;
  EXPECT_TRUE(scan_text(config_for(testbed()), "", &summary).empty());
  EXPECT_EQ(summary.names_read, 0u);
  EXPECT_TRUE(scan_text(config_for(testbed()), "\n# only comments\n\n").empty());
}

TEST(Scan, DedupModes) {
  auto config = config_for(testbed());
  const std::string names = "missing.example\nMISSING.example.\nother.missing.example\n";
  ScanSummary summary;
  EXPECT_EQ(scan_text(config, names, &summary).size(), 2u);
  EXPECT_EQ(summary.duplicates, 1u);

  config.dedup = DedupMode::kNone;
  EXPECT_EQ(scan_text(config, names).size(), 3u);

  config.dedup = DedupMode::kRegistrable;
  EXPECT_EQ(scan_text(config, names).size(), 1u);
}

TEST(Scan, FilteredNamesAreLoggedNotQueried) {
  auto& tb = testbed();
  tb.plain_dns().clear_log();
  const auto results = scan_text(config_for(tb), "*.wild.example\nbad..name\n");
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(tb.plain_dns().query_count(), 0u);
  const auto m = by_domain(results);
  EXPECT_EQ(m.at("*.wild.example").status, ScanStatus::kFilteredWildcard);
}

TEST(Scan, ResumeSkipsFinishedInputs) {
  auto& tb = testbed();
  const std::string dir = ::testing::TempDir();
  auto config = config_for(tb);
  config.input_path = dir + "resume_names.txt";
  config.output_path = dir + "resume_out.jsonl";
  tb.write_names(config.input_path);

  // Pretend an earlier run finished the first three names and died mid-line.
  {
    std::istringstream in("full1.example\nfull2.example\nfull3.example\n");
    NameReader reader(in, InputFormat::kNames);
    std::ofstream out(config.output_path, std::ios::binary | std::ios::trunc);
    run_scan(config, reader, out);
    out << "{\"schema\":\"fpscan.res";
  }
  config.resume = true;
  const auto summary = run_scan(config);
  EXPECT_EQ(summary.resumed, 3u);
  EXPECT_EQ(summary.emitted, 7u);

  std::ifstream in(config.output_path);
  std::map<std::string, int> counts;
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line); ++lines) ++counts[parse_json_line(line).domain];
  EXPECT_EQ(lines, 10u);
  for (const auto& [d, n] : counts) EXPECT_EQ(n, 1) << d;
  std::filesystem::remove(config.output_path);
  std::filesystem::remove(config.input_path);
}

TEST(Scan, OutputTruncatedWithoutResume) {
  const std::string dir = ::testing::TempDir();
  auto config = config_for(testbed());
  config.input_path = dir + "trunc_names.txt";
  config.output_path = dir + "trunc_out.jsonl";
  std::ofstream(config.input_path) << "missing.example\n";
  std::ofstream(config.output_path) << "stale\nstale\n";
  run_scan(config);
  std::ifstream in(config.output_path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(parse_json_line(line).status, ScanStatus::kNxDomain);
  EXPECT_FALSE(std::getline(in, line));
}

}  // namespace
}  // namespace fpscan::pipeline
