#pragma once

// Key exchange pieces needed to obtain and authenticate a server host key:
// KEXINIT encoding and negotiation, ephemeral curve25519 / DH group14
// secrets, the exchange hash, and host key signature verification.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/bytes.hpp"

namespace fpscan::keyscan {

enum class KexMethod { kCurve25519Sha256, kDhGroup14Sha256 };

/// Recognises curve25519-sha256, its libssh.org alias, and
/// diffie-hellman-group14-sha256.
std::optional<KexMethod> kex_method_from_name(std::string_view name);

/// Client preference order.
const std::vector<std::string>& supported_kex_names();

struct KexInit {
  std::array<std::uint8_t, 16> cookie{};
  std::vector<std::string> kex_algorithms;
  std::vector<std::string> server_host_key_algorithms;
  std::vector<std::string> encryption_c2s;
  std::vector<std::string> encryption_s2c;
  std::vector<std::string> mac_c2s;
  std::vector<std::string> mac_s2c;
  std::vector<std::string> compression_c2s;
  std::vector<std::string> compression_s2c;
  std::vector<std::string> languages_c2s;
  std::vector<std::string> languages_s2c;
  bool first_kex_packet_follows = false;

  /// Payload starting with SSH_MSG_KEXINIT; cookie randomised if all zero.
  Bytes encode() const;
  static KexInit decode(ByteView payload);
};

/// First client algorithm the server also lists (RFC 4253 section 7.1).
std::optional<std::string> negotiate(const std::vector<std::string>& client,
                                     const std::vector<std::string>& server);

/// Signature algorithms to offer when asking for a key of this type. An RSA
/// key can be presented under rsa-sha2-512, rsa-sha2-256 or ssh-rsa.
std::vector<std::string> host_key_algorithms_for(std::string_view key_type);

/// Key type whose blob a signature algorithm carries ("rsa-sha2-256" ->
/// "ssh-rsa"); identity for everything else.
std::string key_type_for_signature_algorithm(std::string_view algorithm);

/// One side's ephemeral key exchange secret.
class KexKeyPair {
 public:
  virtual ~KexKeyPair() = default;

  static std::unique_ptr<KexKeyPair> generate(KexMethod method);

  virtual KexMethod method() const = 0;
  /// Q (32 raw bytes) for curve25519; e or f magnitude for DH.
  virtual Bytes public_value() const = 0;
  /// Shared secret K as an unsigned big-endian magnitude. Throws
  /// ProtocolError for invalid peer values.
  virtual Bytes shared_secret(ByteView peer_public) const = 0;
};

/// Exchange hash H over the transcript; SHA-256 for both supported methods.
Bytes exchange_hash(KexMethod method, std::string_view client_version,
                    std::string_view server_version, ByteView client_kexinit,
                    ByteView server_kexinit, ByteView host_key_blob, ByteView client_public,
                    ByteView server_public, ByteView shared_secret);

/// Verifies the server's signature over H with the host key. Returns false
/// for bad signatures, malformed blobs and unsupported algorithms.
bool verify_host_key_signature(ByteView host_key_blob, ByteView signature_blob,
                               ByteView exchange_hash, std::string_view negotiated_algorithm);

/// DER SEQUENCE { INTEGER r, INTEGER s } from unsigned magnitudes.
Bytes der_signature(ByteView r, ByteView s);

}  // namespace fpscan::keyscan
