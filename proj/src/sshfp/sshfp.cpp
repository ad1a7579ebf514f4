#include "fpscan/sshfp.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <openssl/evp.h>

namespace fpscan::sshfp {

namespace {

constexpr std::array<std::string_view, 7> kKeyAlgoNames = {
    "RESERVED", "RSA", "DSA", "ECDSA", "ED25519", "UNASSIGNED", "ED448"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> split_fields(std::string_view text) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) fields.push_back(text.substr(start, i - start));
  }
  return fields;
}

bool iequals(std::string_view a, std::string_view b) {
  return std::ranges::equal(a, b, [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) ==
           std::tolower(static_cast<unsigned char>(y));
  });
}

std::uint8_t parse_octet(std::string_view field, std::string_view what) {
  if (field.empty() || field.size() > 3 ||
      !std::ranges::all_of(field, [](char c) { return c >= '0' && c <= '9'; })) {
    throw ParseError("SSHFP " + std::string(what) + " is not a decimal integer: '" +
                     std::string(field) + "'");
  }
  int value = 0;
  for (char c : field) value = value * 10 + (c - '0');
  if (value > 255) {
    throw ParseError("SSHFP " + std::string(what) + " out of range 0-255: " +
                     std::string(field));
  }
  return static_cast<std::uint8_t>(value);
}

const EVP_MD* digest_for(HashType hash_type) {
  switch (hash_type.code()) {
    case 1:
      return EVP_sha1();
    case 2:
      return EVP_sha256();
    default:
      return nullptr;
  }
}

std::optional<HashType> other_hash(HashType h) {
  if (h == kHashSha1) return kHashSha256;
  if (h == kHashSha256) return kHashSha1;
  return std::nullopt;
}

}  // namespace

std::string_view KeyAlgo::name() const {
  if (code_ < kKeyAlgoNames.size()) return kKeyAlgoNames[code_];
  return "UNASSIGNED";
}

std::string_view HashType::name() const {
  switch (code_) {
    case 0:
      return "RESERVED";
    case 1:
      return "SHA1";
    case 2:
      return "SHA256";
    default:
      return "UNASSIGNED";
  }
}

std::optional<std::string> embedded_key_type(ByteView blob) {
  if (blob.size() < 4) return std::nullopt;
  const std::uint32_t len = (std::uint32_t{blob[0]} << 24) | (std::uint32_t{blob[1]} << 16) |
                            (std::uint32_t{blob[2]} << 8) | std::uint32_t{blob[3]};
  if (len == 0 || len > blob.size() - 4) return std::nullopt;
  return fpscan::to_string(blob.subspan(4, len));
}

HostKey::HostKey(std::string algo_name, Bytes blob)
    : algo_name_(std::move(algo_name)), blob_(std::move(blob)) {
  if (blob_.empty()) throw std::invalid_argument("host key blob is empty");
  const auto embedded = embedded_key_type(blob_);
  if (!embedded) throw std::invalid_argument("host key blob lacks a key type string");
  if (*embedded != algo_name_) {
    throw std::invalid_argument("host key blob type '" + *embedded +
                                "' does not match algorithm '" + algo_name_ + "'");
  }
}

HostKey HostKey::from_blob(Bytes blob) {
  auto embedded = embedded_key_type(blob);
  if (!embedded) throw std::invalid_argument("host key blob lacks a key type string");
  return HostKey(std::move(*embedded), std::move(blob));
}

std::string_view to_string(InvalidReason reason) {
  switch (reason) {
    case InvalidReason::kUnassignedKeyAlgo:
      return "UNASSIGNED_KEY_ALGO";
    case InvalidReason::kReservedKeyAlgo:
      return "RESERVED_KEY_ALGO";
    case InvalidReason::kUnassignedHashType:
      return "UNASSIGNED_HASH_TYPE";
    case InvalidReason::kReservedHashType:
      return "RESERVED_HASH_TYPE";
    case InvalidReason::kLengthMismatch:
      return "LENGTH_MISMATCH";
  }
  return "UNKNOWN";
}

std::optional<InvalidReason> invalid_reason_from_string(std::string_view s) {
  for (auto r : {InvalidReason::kUnassignedKeyAlgo, InvalidReason::kReservedKeyAlgo,
                 InvalidReason::kUnassignedHashType, InvalidReason::kReservedHashType,
                 InvalidReason::kLengthMismatch}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::string_view to_string(MatchReason reason) {
  switch (reason) {
    case MatchReason::kOk:
      return "OK";
    case MatchReason::kAlgoMismatch:
      return "ALGO_MISMATCH";
    case MatchReason::kDigestMismatch:
      return "DIGEST_MISMATCH";
    case MatchReason::kUnassignedField:
      return "UNASSIGNED_FIELD";
  }
  return "UNKNOWN";
}

std::optional<MatchReason> match_reason_from_string(std::string_view s) {
  for (auto r : {MatchReason::kOk, MatchReason::kAlgoMismatch, MatchReason::kDigestMismatch,
                 MatchReason::kUnassignedField}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::string_view to_string(NearMiss near_miss) {
  switch (near_miss) {
    case NearMiss::kNone:
      return "NONE";
    case NearMiss::kWrongKeyAlgo:
      return "WRONG_KEY_ALGO";
    case NearMiss::kWrongHashType:
      return "WRONG_HASH_TYPE";
  }
  return "UNKNOWN";
}

std::optional<NearMiss> near_miss_from_string(std::string_view s) {
  for (auto n : {NearMiss::kNone, NearMiss::kWrongKeyAlgo, NearMiss::kWrongHashType}) {
    if (to_string(n) == s) return n;
  }
  return std::nullopt;
}

SshfpRecord parse_record(std::string_view text) {
  auto fields = split_fields(text);
  std::size_t first = 0;
  if (!fields.empty() && iequals(fields[0], "SSHFP")) first = 1;
  if (fields.size() < first + 3) {
    throw ParseError("SSHFP record needs algorithm, hash type and fingerprint: '" +
                     std::string(text) + "'");
  }

  SshfpRecord record;
  record.key_algo = KeyAlgo(parse_octet(fields[first], "key algorithm"));
  record.hash_type = HashType(parse_octet(fields[first + 1], "hash type"));

  std::string hex;
  for (std::size_t i = first + 2; i < fields.size(); ++i) hex.append(fields[i]);
  auto digest = from_hex(hex);
  if (!digest) throw ParseError("SSHFP fingerprint is not valid hex: '" + hex + "'");
  record.fingerprint = std::move(*digest);
  return record;
}

SshfpRecord parse_rdata(ByteView wire) {
  if (wire.size() < 3) {
    throw ParseError("SSHFP RDATA too short: " + std::to_string(wire.size()) + " bytes");
  }
  return SshfpRecord{KeyAlgo(wire[0]), HashType(wire[1]),
                     Bytes(wire.begin() + 2, wire.end())};
}

Bytes to_rdata(const SshfpRecord& record) {
  Bytes out;
  out.reserve(record.fingerprint.size() + 2);
  out.push_back(record.key_algo.code());
  out.push_back(record.hash_type.code());
  out.insert(out.end(), record.fingerprint.begin(), record.fingerprint.end());
  return out;
}

std::string serialize_record(const SshfpRecord& record) {
  return std::to_string(record.key_algo.code()) + " " +
         std::to_string(record.hash_type.code()) + " " + to_hex(record.fingerprint);
}

Validity validate_record(const SshfpRecord& record) {
  if (record.key_algo.is_reserved()) return {InvalidReason::kReservedKeyAlgo};
  if (!record.key_algo.is_assigned()) return {InvalidReason::kUnassignedKeyAlgo};
  if (record.hash_type.is_reserved()) return {InvalidReason::kReservedHashType};
  if (!record.hash_type.is_assigned()) return {InvalidReason::kUnassignedHashType};
  if (record.fingerprint.size() != *record.hash_type.digest_length()) {
    return {InvalidReason::kLengthMismatch};
  }
  return {};
}

std::optional<KeyAlgo> key_algo_from_ssh_name(std::string_view algo_name) {
  if (algo_name == "ssh-rsa") return kKeyAlgoRsa;
  if (algo_name == "ssh-dss") return kKeyAlgoDsa;
  if (algo_name == "ecdsa-sha2-nistp256" || algo_name == "ecdsa-sha2-nistp384" ||
      algo_name == "ecdsa-sha2-nistp521") {
    return kKeyAlgoEcdsa;
  }
  if (algo_name == "ssh-ed25519") return kKeyAlgoEd25519;
  if (algo_name == "ssh-ed448") return kKeyAlgoEd448;
  return std::nullopt;
}

Bytes compute_fingerprint(ByteView blob, HashType hash_type) {
  const EVP_MD* md = digest_for(hash_type);
  if (md == nullptr) {
    throw UnsupportedHash("no digest for SSHFP hash type " +
                          std::to_string(hash_type.code()));
  }
  Bytes out(static_cast<std::size_t>(EVP_MD_get_size(md)));
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), out.data(), &len, md, nullptr) != 1) {
    throw std::runtime_error("EVP_Digest failed");
  }
  out.resize(len);
  return out;
}

MatchOutcome match_record(const SshfpRecord& record, const HostKey& key) {
  const KeyAlgo algo = record.key_algo;
  const HashType hash = record.hash_type;
  if (!algo.is_assigned() || algo.is_reserved() || !hash.is_assigned() || hash.is_reserved()) {
    return {false, MatchReason::kUnassignedField, NearMiss::kNone};
  }

  const Bytes digest = compute_fingerprint(key.blob(), hash);
  const auto key_algo = key_algo_from_ssh_name(key.algo_name());
  if (!key_algo || *key_algo != algo) {
    const NearMiss near = digest == record.fingerprint ? NearMiss::kWrongKeyAlgo : NearMiss::kNone;
    return {false, MatchReason::kAlgoMismatch, near};
  }
  if (digest != record.fingerprint) {
    NearMiss near = NearMiss::kNone;
    if (auto other = other_hash(hash);
        other && compute_fingerprint(key.blob(), *other) == record.fingerprint) {
      near = NearMiss::kWrongHashType;
    }
    return {false, MatchReason::kDigestMismatch, near};
  }
  return {true, MatchReason::kOk, NearMiss::kNone};
}

std::vector<SshfpRecord> generate_records(std::span<const HostKey> keys,
                                          std::span<const HashType> hash_types) {
  std::vector<HashType> hashes(hash_types.begin(), hash_types.end());
  std::ranges::sort(hashes);
  hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());

  std::vector<SshfpRecord> records;
  records.reserve(keys.size() * hashes.size());
  for (const HostKey& key : keys) {
    const auto algo = key_algo_from_ssh_name(key.algo_name());
    if (!algo) throw UnknownAlgo("no SSHFP algorithm code for '" + key.algo_name() + "'");
    for (HashType hash : hashes) {
      records.push_back(SshfpRecord{*algo, hash, compute_fingerprint(key.blob(), hash)});
    }
  }
  std::ranges::sort(records);
  return records;
}

}  // namespace fpscan::sshfp
