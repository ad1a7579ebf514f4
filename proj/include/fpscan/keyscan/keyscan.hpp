#pragma once

// Host key collection: one unauthenticated SSH transport handshake per
// requested host key algorithm, stopping right after the server's KEX reply.

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/net/socket.hpp"
#include "fpscan/sshfp.hpp"

namespace fpscan::keyscan {

enum class KeyStatus { kOk, kUnsupportedByServer, kTimeout, kRefused, kProtocolError };

std::string_view to_string(KeyStatus status);
std::optional<KeyStatus> key_status_from_string(std::string_view s);

/// dsa, rsa, the three nistp curves and ed25519.
const std::vector<std::string>& default_key_types();

/// Expands ssh-keyscan style type names ("rsa", "ecdsa", "ed25519", "dsa")
/// and passes full SSH names through. Throws std::invalid_argument for
/// unknown names.
std::vector<std::string> expand_key_types(const std::vector<std::string>& names);

struct KeyscanTarget {
  std::string address;
  std::uint16_t port = 22;
  std::vector<std::string> algos = default_key_types();
  std::chrono::milliseconds timeout{5000};
};

struct KeyscanResult {
  KeyscanTarget target;
  std::vector<sshfp::HostKey> keys;
  std::map<std::string, KeyStatus> per_algo_status;
  /// Whether the KEX reply signature verified, for algorithms that yielded a key.
  std::map<std::string, bool> signature_verified;
  /// Last error text per failed algorithm.
  std::map<std::string, std::string> errors;
};

/// Failure of a single handshake, carrying the per-algorithm status.
class HandshakeError : public std::runtime_error {
 public:
  HandshakeError(KeyStatus status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  KeyStatus status() const { return status_; }

 private:
  KeyStatus status_;
};

struct HandshakeResult {
  sshfp::HostKey key;
  bool signature_verified = false;
  std::string server_version;
  std::string kex_algorithm;
  std::string host_key_algorithm;
};

struct HandshakeOptions {
  /// Appended to "SSH-2.0-fpscan_<version>" so operators can find out who
  /// is scanning them.
  std::string policy_url;
  /// Restricts/reorders the key exchange methods offered (tests).
  std::vector<std::string> kex_algorithms;
};

std::string client_version_string(const HandshakeOptions& options);

/// Runs version exchange, KEXINIT and the KEX request on a fresh connection,
/// returning the host key from the KEX reply. Sends a DISCONNECT before
/// returning and never sends NEWKEYS or any authentication message.
HandshakeResult perform_handshake(const net::Socket& connection, std::string_view host_key_algo,
                                  std::chrono::milliseconds timeout,
                                  const HandshakeOptions& options = {});

/// Caps concurrent connections per host address across all workers.
class HostConnectionGate {
 public:
  explicit HostConnectionGate(std::size_t per_host_limit = 4);

  class Permit {
   public:
    Permit(HostConnectionGate* gate, std::string host) : gate_(gate), host_(std::move(host)) {}
    ~Permit();
    Permit(Permit&& other) noexcept : gate_(other.gate_), host_(std::move(other.host_)) {
      other.gate_ = nullptr;
    }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;

   private:
    HostConnectionGate* gate_;
    std::string host_;
  };

  Permit acquire(const std::string& host);
  std::size_t in_use(const std::string& host) const;
  std::size_t peak() const;

 private:
  void release(const std::string& host);

  std::size_t limit_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::map<std::string, std::size_t> active_;
  std::size_t peak_ = 0;
};

struct KeyscanOptions {
  HandshakeOptions handshake;
  HostConnectionGate* gate = nullptr;
  /// Called before every connection attempt (rate limiting).
  std::function<void()> before_connect;
  bool allow_ipv6 = false;
};

/// One connection per algorithm in target.algos, in order.
KeyscanResult collect_host_keys(const KeyscanTarget& target, const KeyscanOptions& options = {});

}  // namespace fpscan::keyscan
