#pragma once

// SSHFP resource records (RFC 4255 and successors) and SSH host key
// fingerprints: representation, presentation/wire codecs, validation,
// matching against server host keys, and record generation.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/bytes.hpp"

namespace fpscan::sshfp {

/// Raised when presentation text or wire RDATA cannot be decoded.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by compute_fingerprint for reserved or unassigned hash types.
class UnsupportedHash : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by generate_records when a key has no SSHFP algorithm code.
class UnknownAlgo : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The KEY-ALGO octet. Every code 0-255 is representable; only the IANA
/// assigned ones have names.
class KeyAlgo {
 public:
  constexpr KeyAlgo() = default;
  constexpr explicit KeyAlgo(std::uint8_t code) : code_(code) {}

  constexpr std::uint8_t code() const { return code_; }
  constexpr bool is_reserved() const { return code_ == 0; }
  /// True for codes with an entry in the registry (including reserved 0).
  constexpr bool is_assigned() const { return code_ <= 4 || code_ == 6; }
  /// "RESERVED", "RSA", ... or "UNASSIGNED".
  std::string_view name() const;

  friend constexpr auto operator<=>(KeyAlgo, KeyAlgo) = default;

 private:
  std::uint8_t code_ = 0;
};

inline constexpr KeyAlgo kKeyAlgoReserved{0};
inline constexpr KeyAlgo kKeyAlgoRsa{1};
inline constexpr KeyAlgo kKeyAlgoDsa{2};
inline constexpr KeyAlgo kKeyAlgoEcdsa{3};
inline constexpr KeyAlgo kKeyAlgoEd25519{4};
inline constexpr KeyAlgo kKeyAlgoEd448{6};

/// The HASH-TYPE (fingerprint type) octet.
class HashType {
 public:
  constexpr HashType() = default;
  constexpr explicit HashType(std::uint8_t code) : code_(code) {}

  constexpr std::uint8_t code() const { return code_; }
  constexpr bool is_reserved() const { return code_ == 0; }
  constexpr bool is_assigned() const { return code_ <= 2; }
  /// Digest length in bytes for SHA1/SHA256, nullopt otherwise.
  constexpr std::optional<std::size_t> digest_length() const {
    switch (code_) {
      case 1:
        return 20;
      case 2:
        return 32;
      default:
        return std::nullopt;
    }
  }
  std::string_view name() const;

  friend constexpr auto operator<=>(HashType, HashType) = default;

 private:
  std::uint8_t code_ = 0;
};

inline constexpr HashType kHashReserved{0};
inline constexpr HashType kHashSha1{1};
inline constexpr HashType kHashSha256{2};

struct SshfpRecord {
  KeyAlgo key_algo;
  HashType hash_type;
  Bytes fingerprint;

  friend auto operator<=>(const SshfpRecord&, const SshfpRecord&) = default;
};

/// An SSH server public key exactly as sent on the wire (the K_S blob).
class HostKey {
 public:
  /// Throws std::invalid_argument unless blob is non-empty and its leading
  /// string equals algo_name.
  HostKey(std::string algo_name, Bytes blob);

  /// Takes the algorithm name from the blob's leading string.
  static HostKey from_blob(Bytes blob);

  const std::string& algo_name() const { return algo_name_; }
  const Bytes& blob() const { return blob_; }

  friend bool operator==(const HostKey&, const HostKey&) = default;
  friend auto operator<=>(const HostKey&, const HostKey&) = default;

 private:
  std::string algo_name_;
  Bytes blob_;
};

/// Returns the algorithm identifier embedded at the start of an SSH
/// public-key blob, or nullopt if the blob is not length-prefixed.
std::optional<std::string> embedded_key_type(ByteView blob);

enum class InvalidReason {
  kUnassignedKeyAlgo,
  kReservedKeyAlgo,
  kUnassignedHashType,
  kReservedHashType,
  kLengthMismatch,
};

std::string_view to_string(InvalidReason reason);
std::optional<InvalidReason> invalid_reason_from_string(std::string_view s);

/// VALID, or INVALID with the first failing reason (key algo, then hash
/// type, then digest length).
struct Validity {
  std::optional<InvalidReason> reason;

  bool valid() const { return !reason.has_value(); }
  friend bool operator==(const Validity&, const Validity&) = default;
};

enum class MatchReason {
  kOk,
  kAlgoMismatch,
  kDigestMismatch,
  kUnassignedField,
};

std::string_view to_string(MatchReason reason);
std::optional<MatchReason> match_reason_from_string(std::string_view s);

/// Diagnostic for records that fail but are one field away from matching.
enum class NearMiss {
  kNone,
  /// The digest is right for the key but KEY-ALGO names another algorithm.
  kWrongKeyAlgo,
  /// The digest equals the key's digest under the other hash type.
  kWrongHashType,
};

std::string_view to_string(NearMiss near_miss);
std::optional<NearMiss> near_miss_from_string(std::string_view s);

struct MatchOutcome {
  bool matched = false;
  MatchReason reason = MatchReason::kDigestMismatch;
  NearMiss near_miss = NearMiss::kNone;

  friend bool operator==(const MatchOutcome&, const MatchOutcome&) = default;
};

/// Decodes "[SSHFP] <algo> <hash> <hex>"; the hex may contain whitespace.
/// Unassigned codes decode fine; use validate_record for semantics.
SshfpRecord parse_record(std::string_view text);

/// Decodes wire RDATA: algo octet, fp-type octet, digest.
SshfpRecord parse_rdata(ByteView wire);

Bytes to_rdata(const SshfpRecord& record);

/// "<algo> <hash> <lowercase hex>"
std::string serialize_record(const SshfpRecord& record);

Validity validate_record(const SshfpRecord& record);

/// ssh-rsa, ssh-dss, ecdsa-sha2-nistp{256,384,521}, ssh-ed25519, ssh-ed448.
std::optional<KeyAlgo> key_algo_from_ssh_name(std::string_view algo_name);

Bytes compute_fingerprint(ByteView blob, HashType hash_type);

MatchOutcome match_record(const SshfpRecord& record, const HostKey& key);

/// One record per (key, hash type), sorted by (key algo, hash type,
/// fingerprint). Duplicate hash types are collapsed.
std::vector<SshfpRecord> generate_records(std::span<const HostKey> keys,
                                          std::span<const HashType> hash_types);

}  // namespace fpscan::sshfp
