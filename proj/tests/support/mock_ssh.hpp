#pragma once

// Minimal SSH server side of the transport handshake: version exchange,
// KEXINIT, curve25519 / DH group14 key exchange and a signed KEX reply.
// Records what clients send so tests can assert scanner behaviour.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ssh_keys.hpp"

namespace fpscan::testing {

struct MockSshOptions {
  /// Accept connections but never send a byte.
  bool silent = false;
  /// Flip a bit in every KEX reply signature.
  bool corrupt_signature = false;
  /// Lines sent before the identification string.
  std::vector<std::string> banner;
  std::vector<std::string> kex = {"curve25519-sha256", "curve25519-sha256@libssh.org",
                                  "diffie-hellman-group14-sha256"};
  /// Pause before the KEX reply (to make connections overlap).
  std::chrono::milliseconds reply_delay{0};
  /// Send garbage instead of a KEXINIT.
  bool garbage = false;
};

class MockSshServer {
 public:
  /// port 0 picks a free port.
  MockSshServer(std::vector<TestHostKey> keys, const std::string& address = "127.0.0.1",
                std::uint16_t port = 0, MockSshOptions options = {});
  ~MockSshServer();
  MockSshServer(const MockSshServer&) = delete;
  MockSshServer& operator=(const MockSshServer&) = delete;

  const std::string& address() const { return address_; }
  std::uint16_t port() const { return port_; }
  const std::vector<TestHostKey>& keys() const { return keys_; }

  std::size_t connections() const { return connections_; }
  /// Most handshakes in flight at once (accept until the KEX reply).
  std::size_t peak_concurrency() const { return peak_; }
  /// Message numbers of every packet received from clients.
  std::vector<std::uint8_t> client_messages() const;
  std::vector<std::string> client_versions() const;

 private:
  void accept_loop();
  void serve(int fd);

  std::vector<TestHostKey> keys_;
  std::string address_;
  std::uint16_t port_ = 0;
  MockSshOptions options_;
  int listen_fd_ = -1;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> connections_{0};
  std::atomic<std::size_t> active_{0};
  std::atomic<std::size_t> peak_{0};
  mutable std::mutex mutex_;
  std::vector<std::uint8_t> messages_;
  std::vector<std::string> versions_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

}  // namespace fpscan::testing
