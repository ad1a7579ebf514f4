#pragma once

// Host key pairs for the mock SSH daemon: generated in-process or loaded
// from ssh-keygen output (PEM for RSA/ECDSA, openssh-key-v1 for Ed25519).

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/bytes.hpp"
#include "fpscan/sshfp.hpp"

typedef struct evp_pkey_st EVP_PKEY;

namespace fpscan::testing {

class TestHostKey {
 public:
  /// type: ssh-ed25519, ssh-ed448, ecdsa-sha2-nistp{256,384,521}, ssh-rsa.
  static TestHostKey generate(std::string_view type);
  static TestHostKey load(const std::string& private_key_path);

  const std::string& type() const { return type_; }
  const Bytes& blob() const { return blob_; }
  sshfp::HostKey host_key() const { return sshfp::HostKey(type_, blob_); }

  /// Signature algorithms this key can serve in KEXINIT.
  std::vector<std::string> signature_algorithms() const;
  /// SSH signature blob: string(algorithm) string(signature).
  Bytes sign(ByteView data, std::string_view algorithm) const;

 private:
  TestHostKey(std::shared_ptr<EVP_PKEY> pkey);

  std::shared_ptr<EVP_PKEY> pkey_;
  std::string type_;
  Bytes blob_;
};

/// Runs ssh-keygen to create a key pair at `path` (+ ".pub"); returns
/// false when the tool is unavailable.
bool ssh_keygen(const std::string& type, int bits, const std::string& path);

/// Decodes the base64 blob of an OpenSSH .pub file.
Bytes read_public_key_file(const std::string& path);

}  // namespace fpscan::testing
