#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fpscan/bytes.hpp"

namespace fpscan::net {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutError : public NetError {
 public:
  using NetError::NetError;
};

class RefusedError : public NetError {
 public:
  using NetError::NetError;
};

/// Peer closed the stream before the expected bytes arrived.
class EofError : public NetError {
 public:
  using NetError::NetError;
};

/// Host (literal IPv4/IPv6 address) plus port.
struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// Accepts "a.b.c.d", "a.b.c.d:port", "[v6]:port" and bare "v6".
  static Endpoint parse(std::string_view text, std::uint16_t default_port);
  std::string to_string() const;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

bool is_ipv4_literal(std::string_view host);
bool is_ipv6_literal(std::string_view host);

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close();

  /// Sends everything or throws (TimeoutError past the deadline).
  void send_all(ByteView data, Deadline deadline) const;
  /// Reads at least one byte; returns 0 on orderly EOF.
  std::size_t recv_some(std::span<std::uint8_t> buf, Deadline deadline) const;
  /// Reads exactly buf.size() bytes or throws (EofError/TimeoutError).
  void recv_exact(std::span<std::uint8_t> buf, Deadline deadline) const;
  /// Waits until readable; false on timeout.
  bool wait_readable(Deadline deadline) const;

 private:
  int fd_ = -1;
};

/// Non-blocking connect bounded by the deadline. ECONNREFUSED maps to
/// RefusedError, expiry to TimeoutError.
Socket connect_tcp(const Endpoint& endpoint, Deadline deadline);

/// UDP socket connect()ed to the endpoint so only its replies are received.
Socket connect_udp(const Endpoint& endpoint);

/// Milliseconds left until the deadline, clamped to [0, INT_MAX].
int remaining_ms(Deadline deadline);

}  // namespace fpscan::net
