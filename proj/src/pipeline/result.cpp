#include "fpscan/pipeline/result.hpp"

#include <fmt/format.h>

#include <array>
#include <cstdio>
#include <ctime>

namespace fpscan::pipeline {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ScanStatus, std::string_view>, 9> kStatusNames = {{
    {ScanStatus::kComplete, "complete"},
    {ScanStatus::kNoSshfp, "no_sshfp"},
    {ScanStatus::kNxDomain, "nxdomain"},
    {ScanStatus::kDnsError, "dns_error"},
    {ScanStatus::kNoValidRecords, "no_valid_records"},
    {ScanStatus::kAError, "a_error"},
    {ScanStatus::kNoIpv4, "no_ipv4"},
    {ScanStatus::kFilteredWildcard, "filtered_wildcard"},
    {ScanStatus::kInvalidName, "invalid_name"},
}};

template <typename T>
T require(std::optional<T> v, std::string_view what, std::string_view text) {
  if (!v) throw SchemaError(fmt::format("unknown {} '{}'", what, text));
  return *v;
}

json host_to_json(const keyscan::KeyscanResult& host) {
  json keys = json::array();
  for (const auto& key : host.keys) {
    keys.push_back({{"algo", key.algo_name()}, {"blob", to_base64(key.blob())}});
  }
  json status = json::object();
  for (const auto& [algo, st] : host.per_algo_status) status[algo] = keyscan::to_string(st);
  json verified = json::object();
  for (const auto& [algo, ok] : host.signature_verified) verified[algo] = ok;
  json errors = json::object();
  for (const auto& [algo, text] : host.errors) errors[algo] = text;
  return {{"address", host.target.address},
          {"port", host.target.port},
          {"timeout_ms", host.target.timeout.count()},
          {"algos", host.target.algos},
          {"keys", std::move(keys)},
          {"status", std::move(status)},
          {"signature_verified", std::move(verified)},
          {"errors", std::move(errors)}};
}

keyscan::KeyscanResult host_from_json(const json& j) {
  keyscan::KeyscanResult host;
  host.target.address = j.at("address").get<std::string>();
  host.target.port = j.at("port").get<std::uint16_t>();
  host.target.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<std::int64_t>());
  host.target.algos = j.at("algos").get<std::vector<std::string>>();
  for (const auto& k : j.at("keys")) {
    const std::string blob_text = k.at("blob").get<std::string>();
    auto blob = from_base64(blob_text);
    if (!blob) throw SchemaError("bad base64 host key blob");
    try {
      host.keys.emplace_back(k.at("algo").get<std::string>(), std::move(*blob));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what());
    }
  }
  for (const auto& [algo, st] : j.at("status").items()) {
    const auto text = st.get<std::string>();
    host.per_algo_status[algo] = require(keyscan::key_status_from_string(text), "key status", text);
  }
  for (const auto& [algo, ok] : j.at("signature_verified").items()) {
    host.signature_verified[algo] = ok.get<bool>();
  }
  for (const auto& [algo, text] : j.at("errors").items()) host.errors[algo] = text.get<std::string>();
  return host;
}

template <typename T>
json optional_to_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string_view to_string(ScanStatus status) {
  for (const auto& [s, name] : kStatusNames) {
    if (s == status) return name;
  }
  return "invalid_name";
}

std::optional<ScanStatus> scan_status_from_string(std::string_view s) {
  for (const auto& [status, name] : kStatusNames) {
    if (name == s) return status;
  }
  return std::nullopt;
}

json lookup_to_json(const dns::DnsLookupResult& lookup) {
  json j = {{"domain", lookup.domain},
            {"canonical_name", lookup.canonical_name},
            {"qtype", dns::to_string(lookup.qtype)},
            {"outcome", dns::to_string(lookup.outcome)},
            {"ad", lookup.ad_flag},
            {"validating", lookup.validating},
            {"used_tcp", lookup.used_tcp},
            {"elapsed_ms", lookup.elapsed.count()}};
  if (lookup.qtype == dns::QueryType::kSshfp) {
    json records = json::array();
    for (const auto& r : lookup.records) records.push_back(sshfp::serialize_record(r));
    j["records"] = std::move(records);
  } else {
    j["addresses"] = lookup.addresses;
  }
  if (!lookup.error.empty()) j["error"] = lookup.error;
  return j;
}

dns::DnsLookupResult lookup_from_json(const json& j) {
  dns::DnsLookupResult lookup;
  lookup.domain = j.at("domain").get<std::string>();
  lookup.canonical_name = j.at("canonical_name").get<std::string>();
  const auto qtype = j.at("qtype").get<std::string>();
  lookup.qtype = require(dns::query_type_from_string(qtype), "qtype", qtype);
  const auto outcome = j.at("outcome").get<std::string>();
  lookup.outcome = require(dns::outcome_from_string(outcome), "outcome", outcome);
  lookup.ad_flag = j.at("ad").get<bool>();
  lookup.validating = j.at("validating").get<bool>();
  lookup.used_tcp = j.at("used_tcp").get<bool>();
  lookup.elapsed = std::chrono::milliseconds(j.at("elapsed_ms").get<std::int64_t>());
  if (lookup.qtype == dns::QueryType::kSshfp) {
    for (const auto& r : j.at("records")) {
      try {
        lookup.records.push_back(sshfp::parse_record(r.get<std::string>()));
      } catch (const sshfp::ParseError& e) {
        throw SchemaError(e.what());
      }
    }
  } else {
    lookup.addresses = j.at("addresses").get<std::vector<std::string>>();
  }
  lookup.error = j.value("error", std::string());
  return lookup;
}

json to_json(const DomainScanResult& result) {
  json records = json::array();
  for (const auto& v : result.records) {
    records.push_back({{"rr", sshfp::serialize_record(v.record)},
                       {"validity", v.validity.valid() ? "VALID" : "INVALID"},
                       {"reason", v.validity.reason ? json(sshfp::to_string(*v.validity.reason))
                                                    : json(nullptr)}});
  }
  json hosts = json::array();
  for (const auto& h : result.hosts) hosts.push_back(host_to_json(h));
  json matches = json::array();
  for (const auto& m : result.matches) {
    matches.push_back({{"address", m.address},
                       {"record", m.record},
                       {"key", m.key},
                       {"outcome", sshfp::to_string(m.outcome.reason)},
                       {"near_miss", sshfp::to_string(m.outcome.near_miss)}});
  }
  json j = {{"schema", kResultSchema},
            {"input", result.input},
            {"domain", result.domain},
            {"registrable_domain", optional_to_json(result.registrable_domain)},
            {"status", to_string(result.status)},
            {"started_at", format_timestamp(result.started_at)},
            {"finished_at", format_timestamp(result.finished_at)},
            {"sshfp_lookup",
             result.sshfp_lookup ? lookup_to_json(*result.sshfp_lookup) : json(nullptr)},
            {"records", std::move(records)},
            {"a_lookup", result.a_lookup ? lookup_to_json(*result.a_lookup) : json(nullptr)},
            {"hosts", std::move(hosts)},
            {"matches", std::move(matches)},
            {"validating_lookup", result.validating_lookup
                                      ? lookup_to_json(*result.validating_lookup)
                                      : json(nullptr)}};
  if (!result.error.empty()) j["error"] = result.error;
  return j;
}

DomainScanResult result_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("schema", std::string()) != kResultSchema) {
      throw SchemaError("missing or unsupported schema tag");
    }
    DomainScanResult r;
    r.input = j.at("input").get<std::string>();
    r.domain = j.at("domain").get<std::string>();
    if (!j.at("registrable_domain").is_null()) {
      r.registrable_domain = j.at("registrable_domain").get<std::string>();
    }
    const auto status = j.at("status").get<std::string>();
    r.status = require(scan_status_from_string(status), "status", status);
    r.started_at = parse_timestamp(j.at("started_at").get<std::string>());
    r.finished_at = parse_timestamp(j.at("finished_at").get<std::string>());
    if (!j.at("sshfp_lookup").is_null()) r.sshfp_lookup = lookup_from_json(j.at("sshfp_lookup"));
    for (const auto& v : j.at("records")) {
      RecordVerdict verdict;
      try {
        verdict.record = sshfp::parse_record(v.at("rr").get<std::string>());
      } catch (const sshfp::ParseError& e) {
        throw SchemaError(e.what());
      }
      if (!v.at("reason").is_null()) {
        const auto reason = v.at("reason").get<std::string>();
        verdict.validity.reason =
            require(sshfp::invalid_reason_from_string(reason), "invalid reason", reason);
      }
      r.records.push_back(std::move(verdict));
    }
    if (!j.at("a_lookup").is_null()) r.a_lookup = lookup_from_json(j.at("a_lookup"));
    for (const auto& h : j.at("hosts")) r.hosts.push_back(host_from_json(h));
    for (const auto& m : j.at("matches")) {
      MatchEntry entry;
      entry.address = m.at("address").get<std::string>();
      entry.record = m.at("record").get<std::size_t>();
      entry.key = m.at("key").get<std::size_t>();
      const auto reason = m.at("outcome").get<std::string>();
      entry.outcome.reason = require(sshfp::match_reason_from_string(reason), "outcome", reason);
      entry.outcome.matched = entry.outcome.reason == sshfp::MatchReason::kOk;
      const auto near = m.at("near_miss").get<std::string>();
      entry.outcome.near_miss = require(sshfp::near_miss_from_string(near), "near miss", near);
      if (entry.record >= r.records.size()) throw SchemaError("match record index out of range");
      r.matches.push_back(std::move(entry));
    }
    if (!j.at("validating_lookup").is_null()) {
      r.validating_lookup = lookup_from_json(j.at("validating_lookup"));
    }
    r.error = j.value("error", std::string());
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(e.what());
  }
}

std::string to_json_line(const DomainScanResult& result) { return to_json(result).dump(); }

DomainScanResult parse_json_line(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) throw SchemaError("line is not valid JSON");
  return result_from_json(j);
}

std::string format_timestamp(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch());
  const std::time_t secs = static_cast<std::time_t>(ms.count() / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900,
                     tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                     ms.count() % 1000);
}

std::chrono::system_clock::time_point parse_timestamp(std::string_view text) {
  std::tm tm{};
  int millis = 0;
  const std::string s(text);
  char z = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d%c", &tm.tm_year, &tm.tm_mon,
                  &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &millis, &z) != 8 ||
      z != 'Z') {
    throw SchemaError("bad timestamp '" + s + "'");
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const std::time_t secs = timegm(&tm);
  return std::chrono::system_clock::time_point(std::chrono::seconds(secs)) +
         std::chrono::milliseconds(millis);
}

}  // namespace fpscan::pipeline
