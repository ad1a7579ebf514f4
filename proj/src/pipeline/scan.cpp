#include "fpscan/pipeline/scan.hpp"

#include <fmt/format.h>

#include <fstream>
#include <thread>
#include <unordered_set>

#include "fpscan/pipeline/bounded_queue.hpp"

namespace fpscan::pipeline {

namespace {

using SysClock = std::chrono::system_clock;

void finish(DomainScanResult& result, ScanStatus status) {
  result.status = status;
  result.finished_at = SysClock::now();
}

}  // namespace

std::string_view to_string(DedupMode mode) {
  switch (mode) {
    case DedupMode::kNone:
      return "none";
    case DedupMode::kExactName:
      return "exact";
    case DedupMode::kRegistrable:
      return "registrable";
  }
  return "exact";
}

std::optional<DedupMode> dedup_mode_from_string(std::string_view s) {
  if (s == "none") return DedupMode::kNone;
  if (s == "exact" || s == "exact_name") return DedupMode::kExactName;
  if (s == "registrable") return DedupMode::kRegistrable;
  return std::nullopt;
}

void ScanConfig::validate() const {
  resolvers.validate();
  if (query_workers < 1) throw std::invalid_argument("query workers must be at least 1");
  if (ssh_workers < 1) throw std::invalid_argument("ssh workers must be at least 1");
  if (!(qps_limit > 0)) throw std::invalid_argument("qps limit must be positive");
  if (ssh_timeout.count() <= 0) throw std::invalid_argument("ssh timeout must be positive");
  if (per_host_cap < 1) throw std::invalid_argument("per-host cap must be at least 1");
  if (key_types.empty()) throw std::invalid_argument("no host key types requested");
  if (ssh_port == 0) throw std::invalid_argument("ssh port must be non-zero");
}

DomainScanResult prepare_domain(std::string_view input, const PublicSuffixList& psl) {
  DomainScanResult result;
  result.input = std::string(input);
  result.started_at = SysClock::now();
  try {
    result.domain = normalize_domain(input);
  } catch (const InvalidName& e) {
    result.error = e.what();
    finish(result, ScanStatus::kInvalidName);
    return result;
  }
  if (is_wildcard(result.domain)) {
    finish(result, ScanStatus::kFilteredWildcard);
    return result;
  }
  result.registrable_domain = psl.registrable_domain(result.domain);
  result.status = ScanStatus::kComplete;
  return result;
}

DomainScanner::DomainScanner(const ScanConfig& config, ScanServices services)
    : config_(config),
      services_(services),
      plain_(config.resolvers.plain_resolver, config.resolvers.timeout, config.resolvers.retries),
      validating_(config.resolvers.validating_resolver, config.resolvers.timeout,
                  config.resolvers.retries) {}

void DomainScanner::throttle() {
  if (services_.limiter != nullptr) services_.limiter->acquire();
}

bool DomainScanner::query_stage(DomainScanResult& result) {
  throttle();
  result.sshfp_lookup = plain_.query_sshfp(result.domain, false);
  const auto& lookup = *result.sshfp_lookup;
  switch (lookup.outcome) {
    case dns::Outcome::kNoError:
      break;
    case dns::Outcome::kNxDomain:
      finish(result, ScanStatus::kNxDomain);
      return false;
    default:
      finish(result, ScanStatus::kDnsError);
      return false;
  }
  if (lookup.records.empty()) {
    finish(result, ScanStatus::kNoSshfp);
    return false;
  }

  bool any_valid = false;
  for (const auto& record : lookup.records) {
    RecordVerdict verdict{record, sshfp::validate_record(record)};
    any_valid = any_valid || verdict.validity.valid();
    result.records.push_back(std::move(verdict));
  }
  if (!any_valid) {
    finish(result, ScanStatus::kNoValidRecords);
    return false;
  }

  throttle();
  result.a_lookup = plain_.query_a(result.domain);
  if (result.a_lookup->outcome != dns::Outcome::kNoError) {
    finish(result, ScanStatus::kAError);
    return false;
  }
  if (result.a_lookup->addresses.empty()) {
    finish(result, ScanStatus::kNoIpv4);
    return false;
  }
  return true;
}

void DomainScanner::ssh_stage(DomainScanResult& result) {
  keyscan::KeyscanOptions options;
  options.handshake.policy_url = config_.policy_url;
  options.gate = services_.gate;
  options.before_connect = [this] { throttle(); };

  for (const auto& address : result.a_lookup->addresses) {
    keyscan::KeyscanTarget target;
    target.address = address;
    target.port = config_.ssh_port;
    target.algos = config_.key_types;
    target.timeout = config_.ssh_timeout;
    keyscan::KeyscanResult host = keyscan::collect_host_keys(target, options);
    for (std::size_t k = 0; k < host.keys.size(); ++k) {
      for (std::size_t r = 0; r < result.records.size(); ++r) {
        result.matches.push_back(
            {address, r, k, sshfp::match_record(result.records[r].record, host.keys[k])});
      }
    }
    result.hosts.push_back(std::move(host));
  }

  throttle();
  result.validating_lookup = validating_.query_sshfp(result.domain, true);
  finish(result, ScanStatus::kComplete);
}

DomainScanResult DomainScanner::scan(std::string_view input) {
  const PublicSuffixList& psl =
      services_.psl != nullptr ? *services_.psl : PublicSuffixList::builtin();
  DomainScanResult result = prepare_domain(input, psl);
  if (result.status != ScanStatus::kComplete) return result;
  if (query_stage(result)) ssh_stage(result);
  return result;
}

ScanSummary run_scan(const ScanConfig& config, NameReader& reader, std::ostream& output,
                     const ResumeState* resume, std::ostream* progress, RateLimiter* limiter) {
  config.validate();

  std::unique_ptr<RateLimiter> own_limiter;
  if (limiter == nullptr) {
    own_limiter = std::make_unique<RateLimiter>(config.qps_limit);
    limiter = own_limiter.get();
  }
  std::unique_ptr<PublicSuffixList> own_psl;
  if (!config.psl_path.empty()) {
    own_psl = std::make_unique<PublicSuffixList>(PublicSuffixList::load(config.psl_path));
  }
  const PublicSuffixList& psl = own_psl ? *own_psl : PublicSuffixList::builtin();
  keyscan::HostConnectionGate gate(config.per_host_cap);
  const ScanServices services{limiter, &gate, &psl};

  BoundedQueue<DomainScanResult> query_queue(config.queue_capacity);
  BoundedQueue<DomainScanResult> ssh_queue(config.queue_capacity);
  BoundedQueue<DomainScanResult> out_queue(config.queue_capacity);
  ScanSummary summary;

  std::thread writer([&] {
    while (auto result = out_queue.pop()) {
      output << to_json_line(*result) << '\n';
      output.flush();
      ++summary.emitted;
      ++summary.by_status[result->status];
      if (result->keyscan_attempted()) ++summary.keyscanned;
      if (progress != nullptr && summary.emitted % 1000 == 0) {
        *progress << fmt::format("fpscan: {} results written\n", summary.emitted);
      }
    }
  });

  std::vector<std::thread> ssh_pool;
  for (int i = 0; i < config.ssh_workers; ++i) {
    ssh_pool.emplace_back([&] {
      DomainScanner scanner(config, services);
      while (auto result = ssh_queue.pop()) {
        try {
          scanner.ssh_stage(*result);
        } catch (const std::exception& e) {
          result->error = e.what();
          finish(*result, ScanStatus::kComplete);
        }
        out_queue.push(std::move(*result));
      }
    });
  }

  std::vector<std::thread> query_pool;
  for (int i = 0; i < config.query_workers; ++i) {
    query_pool.emplace_back([&] {
      DomainScanner scanner(config, services);
      while (auto result = query_queue.pop()) {
        bool proceed = false;
        try {
          proceed = scanner.query_stage(*result);
        } catch (const std::exception& e) {
          result->error = e.what();
          finish(*result, ScanStatus::kDnsError);
        }
        if (proceed) {
          ssh_queue.push(std::move(*result));
        } else {
          out_queue.push(std::move(*result));
        }
      }
    });
  }

  std::unordered_set<std::string> seen;
  if (resume != nullptr) {
    const auto& keys = config.dedup == DedupMode::kRegistrable ? resume->registrables : resume->domains;
    seen.insert(keys.begin(), keys.end());
  }

  std::exception_ptr failure;
  try {
    while (auto name = reader.next()) {
      ++summary.names_read;
      if (resume != nullptr && resume->inputs.contains(*name)) {
        ++summary.resumed;
        continue;
      }
      DomainScanResult result = prepare_domain(*name, psl);
      if (result.status != ScanStatus::kComplete) {
        out_queue.push(std::move(result));
        continue;
      }
      if (config.dedup != DedupMode::kNone) {
        const std::string key = config.dedup == DedupMode::kRegistrable
                                    ? result.registrable_domain.value_or(result.domain)
                                    : result.domain;
        if (!seen.insert(key).second) {
          ++summary.duplicates;
          continue;
        }
      }
      query_queue.push(std::move(result));
    }
  } catch (...) {
    failure = std::current_exception();
  }

  query_queue.close();
  for (auto& t : query_pool) t.join();
  ssh_queue.close();
  for (auto& t : ssh_pool) t.join();
  out_queue.close();
  writer.join();

  if (failure) std::rethrow_exception(failure);
  if (progress != nullptr) {
    *progress << fmt::format(
        "fpscan: {} names read, {} results written, {} duplicates skipped, {} resumed, {} "
        "keyscanned\n",
        summary.names_read, summary.emitted, summary.duplicates, summary.resumed,
        summary.keyscanned);
  }
  return summary;
}

ScanSummary run_scan(const ScanConfig& config, std::ostream* progress) {
  config.validate();
  if (config.output_path.empty()) throw std::invalid_argument("no output path given");
  auto reader = NameReader::open(config.input_path, config.input_format);

  ResumeState state;
  if (config.resume) state = load_checkpoint(config.output_path);
  std::ofstream out(config.output_path,
                    config.resume ? std::ios::binary | std::ios::app : std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output '" + config.output_path + "'");
  if (progress != nullptr && state.truncated_bytes > 0) {
    *progress << fmt::format("fpscan: dropped {} bytes of incomplete output\n",
                             state.truncated_bytes);
  }
  return run_scan(config, *reader, out, config.resume ? &state : nullptr, progress);
}

}  // namespace fpscan::pipeline
