#include "cli.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <arpa/inet.h>
#include <sys/socket.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <sstream>

#include "fpscan/analysis/classify.hpp"
#include "fpscan/analysis/report.hpp"
#include "fpscan/dns/client.hpp"
#include "fpscan/keyscan/keyscan.hpp"
#include "fpscan/pipeline/scan.hpp"
#include "fpscan/sshfp.hpp"

namespace fpscan::cli {

namespace {

constexpr std::uint16_t kDnsPort = 53;

/// Thrown for problems that map to the usage exit code.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::chrono::milliseconds seconds_to_ms(double seconds) {
  return std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000.0 + 0.5));
}

struct ResolverFlags {
  std::string resolver;
  std::string validating_resolver;
  bool allow_same = false;
  double timeout = 5.0;
  int retries = 2;

  void attach(CLI::App& app) {
    app.add_option("--resolver", resolver, "Plain (non-validating) resolver HOST[:PORT]")
        ->envname("FPSCAN_RESOLVER");
    app.add_option("--validating-resolver", validating_resolver,
                   "DNSSEC-validating resolver HOST[:PORT]")
        ->envname("FPSCAN_VALIDATING_RESOLVER");
    app.add_flag("--allow-same-resolver", allow_same,
                 "Permit identical plain and validating resolvers");
    app.add_option("--timeout", timeout, "DNS timeout per attempt in seconds")
        ->capture_default_str();
    app.add_option("--retries", retries, "DNS attempts per query")->capture_default_str();
  }

  dns::ResolverConfig build() const {
    if (resolver.empty()) throw UsageError("no --resolver given");
    if (validating_resolver.empty()) throw UsageError("no --validating-resolver given");
    dns::ResolverConfig config;
    try {
      config.plain_resolver = net::Endpoint::parse(resolver, kDnsPort);
      config.validating_resolver = net::Endpoint::parse(validating_resolver, kDnsPort);
      config.timeout = seconds_to_ms(timeout);
      config.retries = retries;
      config.allow_same_endpoint = allow_same;
      config.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return config;
  }
};

struct KeyscanFlags {
  std::uint16_t port = 22;
  std::string types = "dsa,rsa,ecdsa,ed25519";
  double ssh_timeout = 5.0;
  std::string policy_url;

  void attach(CLI::App& app) {
    app.add_option("--port", port, "SSH port")->capture_default_str();
    app.add_option("--key-types", types, "Host key types (dsa,rsa,ecdsa,ed25519 or SSH names)")
        ->capture_default_str();
    app.add_option("--ssh-timeout", ssh_timeout, "Per-connection SSH timeout in seconds")
        ->capture_default_str();
    app.add_option("--policy-url", policy_url, "URL advertised in the SSH client version");
  }

  std::vector<std::string> key_types() const {
    try {
      return keyscan::expand_key_types(split_list(types));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

bool probe_resolvers(const dns::ResolverConfig& config, std::ostream& err) {
  bool ok = true;
  for (const auto& endpoint : {config.plain_resolver, config.validating_resolver}) {
    dns::Client client(endpoint, config.timeout, config.retries);
    if (!client.probe()) {
      err << fmt::format("fpscan: resolver {} is not answering\n", endpoint.to_string());
      ok = false;
    }
  }
  return ok;
}

int cmd_scan(const pipeline::ScanConfig& config, std::ostream& err) {
  if (config.input_path != "-" && !std::filesystem::is_regular_file(config.input_path)) {
    err << fmt::format("fpscan: input file '{}' not found\n", config.input_path);
    return kExitUsage;
  }
  if (!probe_resolvers(config.resolvers, err)) return kExitRuntime;
  pipeline::run_scan(config, &err);
  return kExitOk;
}

int cmd_verify(const std::string& domain, const dns::ResolverConfig& resolvers,
               const KeyscanFlags& ks, std::ostream& out, std::ostream& err) {
  pipeline::ScanConfig config;
  config.resolvers = resolvers;
  config.ssh_port = ks.port;
  config.key_types = ks.key_types();
  config.ssh_timeout = seconds_to_ms(ks.ssh_timeout);
  config.policy_url = ks.policy_url;

  pipeline::DomainScanner scanner(config, {});
  const pipeline::DomainScanResult r = scanner.scan(domain);

  if (r.status == pipeline::ScanStatus::kInvalidName ||
      r.status == pipeline::ScanStatus::kFilteredWildcard) {
    err << fmt::format("fpscan: cannot verify '{}': {}\n", domain,
                       r.error.empty() ? "wildcard name" : r.error);
    return kExitUsage;
  }
  out << fmt::format("domain: {}\n", r.domain);
  if (r.sshfp_lookup) {
    out << fmt::format("SSHFP lookup: {} ({} records)\n", dns::to_string(r.sshfp_lookup->outcome),
                       r.sshfp_lookup->records.size());
  }
  switch (r.status) {
    case pipeline::ScanStatus::kNxDomain:
    case pipeline::ScanStatus::kDnsError:
      out << "verdict: error (SSHFP lookup failed)\n";
      return kExitRuntime;
    case pipeline::ScanStatus::kNoSshfp:
      out << "verdict: fail (no SSHFP records)\n";
      return kExitNegative;
    case pipeline::ScanStatus::kNoValidRecords:
      for (const auto& v : r.records) {
        out << fmt::format("  record {}: INVALID {}\n", sshfp::serialize_record(v.record),
                           sshfp::to_string(*v.validity.reason));
      }
      out << "verdict: fail (no valid SSHFP records)\n";
      return kExitNegative;
    case pipeline::ScanStatus::kAError:
    case pipeline::ScanStatus::kNoIpv4:
      out << "verdict: error (no IPv4 address)\n";
      return kExitRuntime;
    default:
      break;
  }

  for (const auto& host : r.hosts) {
    out << fmt::format("host {}:{}\n", host.target.address, host.target.port);
    for (const auto& [algo, status] : host.per_algo_status) {
      out << fmt::format("  {:<22}{}\n", algo, keyscan::to_string(status));
    }
  }
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& v = r.records[i];
    std::string outcome = v.validity.valid() ? "NO_KEY" : std::string("INVALID ") +
                                                              std::string(sshfp::to_string(*v.validity.reason));
    for (const auto& m : r.matches) {
      if (m.record != i) continue;
      if (m.outcome.matched) {
        outcome = fmt::format("OK ({})", m.address);
        break;
      }
      if (v.validity.valid()) {
        outcome = std::string(sshfp::to_string(m.outcome.reason));
        if (m.outcome.near_miss != sshfp::NearMiss::kNone) {
          outcome += fmt::format(" [{}]", sshfp::to_string(m.outcome.near_miss));
        }
      }
    }
    out << fmt::format("  record {}: {}\n", sshfp::serialize_record(v.record), outcome);
  }

  const auto keys = analysis::all_host_keys(r);
  const auto valid = analysis::valid_records(r);
  const auto status = analysis::dnssec_status(r);
  out << fmt::format("DNSSEC: {}\n", analysis::to_string(status));
  if (keys.empty()) {
    out << "verdict: error (no host keys retrieved)\n";
    return kExitRuntime;
  }
  const auto mc = analysis::classify_domain_match(valid, keys);
  out << fmt::format("match: {} ({}/{})\n", analysis::to_string(mc.kind), mc.matched, mc.total);
  if (mc.matched == 0) {
    out << "verdict: fail (mismatch)\n";
    return kExitNegative;
  }
  switch (status) {
    case analysis::DnssecStatus::kSecure:
      out << "verdict: ok (matching fingerprint, DNSSEC secure)\n";
      return kExitOk;
    case analysis::DnssecStatus::kInsecure:
      out << "verdict: fail (insecure: records not DNSSEC-validated)\n";
      return kExitNegative;
    case analysis::DnssecStatus::kBogus:
      out << "verdict: fail (bogus: DNSSEC validation failed)\n";
      return kExitNegative;
    case analysis::DnssecStatus::kUnknown:
      break;
  }
  out << "verdict: error (DNSSEC status unknown)\n";
  return kExitRuntime;
}

std::vector<std::string> resolve_ipv4(const std::string& host) {
  if (net::is_ipv4_literal(host)) return {host};
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) return {};
  std::vector<std::string> out;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    char buf[INET_ADDRSTRLEN];
    const auto* sin = reinterpret_cast<const sockaddr_in*>(ai->ai_addr);
    if (inet_ntop(AF_INET, &sin->sin_addr, buf, sizeof buf) != nullptr) {
      if (std::ranges::find(out, buf) == out.end()) out.emplace_back(buf);
    }
  }
  freeaddrinfo(res);
  return out;
}

int cmd_gen(const std::string& host, const KeyscanFlags& ks, std::ostream& out, std::ostream& err) {
  const auto addresses = resolve_ipv4(host);
  if (addresses.empty()) {
    err << fmt::format("fpscan: cannot resolve '{}'\n", host);
    return kExitRuntime;
  }
  keyscan::KeyscanTarget target;
  target.address = addresses.front();
  target.port = ks.port;
  target.algos = ks.key_types();
  target.timeout = seconds_to_ms(ks.ssh_timeout);
  keyscan::KeyscanOptions options;
  options.handshake.policy_url = ks.policy_url;
  const auto result = keyscan::collect_host_keys(target, options);
  for (const auto& [algo, text] : result.errors) err << fmt::format("fpscan: {}: {}\n", algo, text);

  std::vector<sshfp::HostKey> usable;
  for (const auto& key : result.keys) {
    if (sshfp::key_algo_from_ssh_name(key.algo_name())) usable.push_back(key);
  }
  if (usable.empty()) {
    err << fmt::format("fpscan: no host keys retrieved from {}\n", host);
    return kExitRuntime;
  }
  const std::array<sshfp::HashType, 2> hashes = {sshfp::kHashSha1, sshfp::kHashSha256};
  for (const auto& record : sshfp::generate_records(usable, hashes)) {
    out << fmt::format("{} IN SSHFP {}\n", host, sshfp::serialize_record(record));
  }
  return kExitOk;
}

int cmd_analyze(const std::vector<std::string>& logs, const std::string& report_dir,
                std::ostream& out, std::ostream& err) {
  analysis::ScanReport report;
  try {
    report = analysis::aggregate_logs(logs);
  } catch (const std::runtime_error& e) {
    err << "fpscan: " << e.what() << '\n';
    return kExitRuntime;
  }
  if (report.schema_errors > 0) {
    err << fmt::format("fpscan: skipped {} undecodable log lines\n", report.schema_errors);
  }
  analysis::write_report(report, report_dir);
  out << analysis::render_text(report);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audit SSHFP records against live SSH host keys", "fpscan"};
  app.set_config("--config", "", "TOML/INI configuration file");
  app.set_version_flag("--version", "fpscan 0.1.0");
  app.require_subcommand(1);

  ResolverFlags scan_resolvers;
  KeyscanFlags scan_keyscan;
  pipeline::ScanConfig scan_config;
  std::string input_format = "auto";
  std::string dedup = "exact";
  double qps = scan_config.qps_limit;
  auto* scan = app.add_subcommand("scan", "Scan a list of domain names");
  scan->add_option("--input", scan_config.input_path, "Name list ('-' for standard input)")
      ->required();
  scan->add_option("--input-format", input_format, "names, ranked or auto")->capture_default_str();
  scan->add_option("--output", scan_config.output_path, "JSON Lines result log")->required();
  scan->add_option("--workers", scan_config.query_workers, "DNS query workers")
      ->capture_default_str();
  scan->add_option("--ssh-workers", scan_config.ssh_workers, "SSH workers")->capture_default_str();
  scan->add_option("--qps", qps, "Operations per second limit")->capture_default_str();
  scan->add_option("--dedup", dedup, "none, exact or registrable")->capture_default_str();
  scan->add_option("--psl", scan_config.psl_path, "Public suffix list snapshot");
  scan->add_option("--per-host-cap", scan_config.per_host_cap,
                   "Concurrent SSH connections per address")
      ->capture_default_str();
  scan->add_flag("--resume", scan_config.resume, "Continue an interrupted scan");
  scan_resolvers.attach(*scan);
  scan_keyscan.attach(*scan);

  ResolverFlags verify_resolvers;
  KeyscanFlags verify_keyscan;
  std::string verify_domain;
  auto* verify = app.add_subcommand("verify", "Check one domain against all matching conditions");
  verify->add_option("domain", verify_domain, "Domain name")->required();
  verify_resolvers.attach(*verify);
  verify_keyscan.attach(*verify);

  KeyscanFlags gen_keyscan;
  std::string gen_host;
  auto* gen = app.add_subcommand("gen", "Print SSHFP records for a server's host keys");
  gen->add_option("host", gen_host, "Host name or IPv4 address")->required();
  gen_keyscan.attach(*gen);
  gen->add_option("--types", gen_keyscan.types, "Alias of --key-types");

  std::vector<std::string> logs;
  std::string report_dir;
  auto* analyze = app.add_subcommand("analyze", "Aggregate result logs into a report");
  analyze->add_option("logs", logs, "Result logs, oldest first")->required();
  analyze->add_option("--report", report_dir, "Directory for report.json and report.txt")
      ->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*scan) {
      const auto format = pipeline::input_format_from_string(input_format);
      if (!format) throw UsageError("unknown --input-format '" + input_format + "'");
      const auto mode = pipeline::dedup_mode_from_string(dedup);
      if (!mode) throw UsageError("unknown --dedup '" + dedup + "'");
      scan_config.input_format = *format;
      scan_config.dedup = *mode;
      scan_config.qps_limit = qps;
      scan_config.resolvers = scan_resolvers.build();
      scan_config.ssh_port = scan_keyscan.port;
      scan_config.key_types = scan_keyscan.key_types();
      scan_config.ssh_timeout = seconds_to_ms(scan_keyscan.ssh_timeout);
      scan_config.policy_url = scan_keyscan.policy_url;
      try {
        scan_config.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      return cmd_scan(scan_config, err);
    }
    if (*verify) {
      const auto resolvers = verify_resolvers.build();
      return cmd_verify(verify_domain, resolvers, verify_keyscan, out, err);
    }
    if (*gen) return cmd_gen(gen_host, gen_keyscan, out, err);
    if (*analyze) return cmd_analyze(logs, report_dir, out, err);
  } catch (const UsageError& e) {
    err << "fpscan: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "fpscan: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace fpscan::cli
