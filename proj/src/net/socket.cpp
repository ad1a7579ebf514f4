#include "fpscan/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <climits>
#include <cstring>

namespace fpscan::net {

namespace {

std::string errno_text(std::string_view what, int err) {
  return std::string(what) + ": " + std::strerror(err);
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw NetError(errno_text("fcntl", errno));
  }
}

struct SockAddr {
  sockaddr_storage storage{};
  socklen_t len = 0;
  int family = AF_UNSPEC;
};

SockAddr make_sockaddr(const Endpoint& ep) {
  SockAddr out;
  if (is_ipv4_literal(ep.host)) {
    auto* sin = reinterpret_cast<sockaddr_in*>(&out.storage);
    sin->sin_family = AF_INET;
    sin->sin_port = htons(ep.port);
    ::inet_pton(AF_INET, ep.host.c_str(), &sin->sin_addr);
    out.len = sizeof(sockaddr_in);
    out.family = AF_INET;
  } else if (is_ipv6_literal(ep.host)) {
    auto* sin6 = reinterpret_cast<sockaddr_in6*>(&out.storage);
    sin6->sin6_family = AF_INET6;
    sin6->sin6_port = htons(ep.port);
    ::inet_pton(AF_INET6, ep.host.c_str(), &sin6->sin6_addr);
    out.len = sizeof(sockaddr_in6);
    out.family = AF_INET6;
  } else {
    throw NetError("not an IP address literal: '" + ep.host + "'");
  }
  return out;
}

bool poll_for(int fd, short events, Deadline deadline) {
  for (;;) {
    pollfd pfd{fd, events, 0};
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw NetError(errno_text("poll", errno));
  }
}

}  // namespace

int remaining_ms(Deadline deadline) {
  const auto left =
      std::chrono::ceil<std::chrono::milliseconds>(deadline - Clock::now()).count();
  if (left <= 0) return 0;
  return left > INT_MAX ? INT_MAX : static_cast<int>(left);
}

bool is_ipv4_literal(std::string_view host) {
  in_addr addr{};
  return ::inet_pton(AF_INET, std::string(host).c_str(), &addr) == 1;
}

bool is_ipv6_literal(std::string_view host) {
  in6_addr addr{};
  return ::inet_pton(AF_INET6, std::string(host).c_str(), &addr) == 1;
}

Endpoint Endpoint::parse(std::string_view text, std::uint16_t default_port) {
  Endpoint ep;
  ep.port = default_port;
  std::string_view host = text;
  std::string_view port;
  if (!text.empty() && text.front() == '[') {
    const auto close = text.find(']');
    if (close == std::string_view::npos) throw NetError("bad endpoint: " + std::string(text));
    host = text.substr(1, close - 1);
    if (close + 1 < text.size()) {
      if (text[close + 1] != ':') throw NetError("bad endpoint: " + std::string(text));
      port = text.substr(close + 2);
    }
  } else if (std::count(text.begin(), text.end(), ':') == 1) {
    const auto colon = text.find(':');
    host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  if (!port.empty()) {
    unsigned value = 0;
    for (char c : port) {
      if (c < '0' || c > '9' || value > 65535) throw NetError("bad port in " + std::string(text));
      value = value * 10 + static_cast<unsigned>(c - '0');
    }
    if (value == 0 || value > 65535) throw NetError("bad port in " + std::string(text));
    ep.port = static_cast<std::uint16_t>(value);
  }
  ep.host = std::string(host);
  if (!is_ipv4_literal(ep.host) && !is_ipv6_literal(ep.host)) {
    throw NetError("endpoint host must be an IP address: " + std::string(text));
  }
  return ep;
}

std::string Endpoint::to_string() const {
  if (is_ipv6_literal(host)) return "[" + host + "]:" + std::to_string(port);
  return host + ":" + std::to_string(port);
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::send_all(ByteView data, Deadline deadline) const {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n > 0) {
      sent += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
      if (!poll_for(fd_, POLLOUT, deadline)) throw TimeoutError("send timed out");
      continue;
    }
    throw NetError(errno_text("send", errno));
  }
}

std::size_t Socket::recv_some(std::span<std::uint8_t> buf, Deadline deadline) const {
  for (;;) {
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) {
      if (!poll_for(fd_, POLLIN, deadline)) throw TimeoutError("receive timed out");
      continue;
    }
    if (errno == ECONNREFUSED) throw RefusedError(errno_text("recv", errno));
    throw NetError(errno_text("recv", errno));
  }
}

void Socket::recv_exact(std::span<std::uint8_t> buf, Deadline deadline) const {
  std::size_t got = 0;
  while (got < buf.size()) {
    const std::size_t n = recv_some(buf.subspan(got), deadline);
    if (n == 0) throw EofError("connection closed by peer");
    got += n;
  }
}

bool Socket::wait_readable(Deadline deadline) const { return poll_for(fd_, POLLIN, deadline); }

Socket connect_tcp(const Endpoint& endpoint, Deadline deadline) {
  const SockAddr addr = make_sockaddr(endpoint);
  Socket sock(::socket(addr.family, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!sock.valid()) throw NetError(errno_text("socket", errno));
  set_nonblocking(sock.fd());
  const int one = 1;
  ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  if (::connect(sock.fd(), reinterpret_cast<const sockaddr*>(&addr.storage), addr.len) == 0) {
    return sock;
  }
  if (errno == ECONNREFUSED) throw RefusedError("connection refused by " + endpoint.to_string());
  if (errno != EINPROGRESS) throw NetError(errno_text("connect " + endpoint.to_string(), errno));

  if (!poll_for(sock.fd(), POLLOUT, deadline)) {
    throw TimeoutError("connect to " + endpoint.to_string() + " timed out");
  }
  int err = 0;
  socklen_t len = sizeof(err);
  ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
  if (err == ECONNREFUSED) throw RefusedError("connection refused by " + endpoint.to_string());
  if (err == ETIMEDOUT) throw TimeoutError("connect to " + endpoint.to_string() + " timed out");
  if (err != 0) throw NetError(errno_text("connect " + endpoint.to_string(), err));
  return sock;
}

Socket connect_udp(const Endpoint& endpoint) {
  const SockAddr addr = make_sockaddr(endpoint);
  Socket sock(::socket(addr.family, SOCK_DGRAM | SOCK_CLOEXEC, 0));
  if (!sock.valid()) throw NetError(errno_text("socket", errno));
  set_nonblocking(sock.fd());
  if (::connect(sock.fd(), reinterpret_cast<const sockaddr*>(&addr.storage), addr.len) != 0) {
    throw NetError(errno_text("connect " + endpoint.to_string(), errno));
  }
  return sock;
}

}  // namespace fpscan::net
