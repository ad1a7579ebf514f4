#include "mock_ssh.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <stdexcept>

#include "fpscan/keyscan/kex.hpp"
#include "fpscan/keyscan/ssh_wire.hpp"
#include "fpscan/net/socket.hpp"

namespace fpscan::testing {

using namespace fpscan::keyscan;

namespace {

constexpr std::string_view kServerVersion = "SSH-2.0-MockSSH_1.0";

}  // namespace

MockSshServer::MockSshServer(std::vector<TestHostKey> keys, const std::string& address,
                             std::uint16_t port, MockSshOptions options)
    : keys_(std::move(keys)), address_(address), options_(std::move(options)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  inet_pton(AF_INET, address.c_str(), &sa.sin_addr);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    throw std::runtime_error("mock SSH: cannot listen on " + address + ":" +
                             std::to_string(port));
  }
  socklen_t len = sizeof sa;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

MockSshServer::~MockSshServer() {
  stop_ = true;
  acceptor_.join();
  for (auto& t : workers_) t.join();
  ::close(listen_fd_);
}

std::vector<std::uint8_t> MockSshServer::client_messages() const {
  std::lock_guard lock(mutex_);
  return messages_;
}

std::vector<std::string> MockSshServer::client_versions() const {
  std::lock_guard lock(mutex_);
  return versions_;
}

void MockSshServer::accept_loop() {
  while (!stop_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    ++connections_;
    std::lock_guard lock(mutex_);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void MockSshServer::serve(int fd) {
  const std::size_t now = ++active_;
  std::size_t prev = peak_;
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
  bool released = false;
  auto release = [&] {
    if (!released) --active_;
    released = true;
  };
  net::Socket sock(fd);
  const auto deadline = net::Clock::now() + std::chrono::seconds(10);
  auto record = [this](std::uint8_t m) {
    std::lock_guard lock(mutex_);
    messages_.push_back(m);
  };

  try {
    if (options_.silent) {
      std::uint8_t buf[256];
      while (!stop_) {
        const auto tick = net::Clock::now() + std::chrono::milliseconds(50);
        if (sock.wait_readable(tick) && sock.recv_some(buf, tick) == 0) break;
      }
      release();
      return;
    }

    std::string greeting;
    for (const auto& line : options_.banner) greeting += line + "\r\n";
    greeting += std::string(kServerVersion) + "\r\n";
    sock.send_all(as_bytes(greeting), deadline);

    PacketStream stream(sock);
    const std::string client_version = stream.read_version(deadline);
    {
      std::lock_guard lock(mutex_);
      versions_.push_back(client_version);
    }

    if (options_.garbage) {
      sock.send_all(as_bytes(std::string("\xff\xff\xff\xff garbage", 13)), deadline);
      std::uint8_t buf[256];
      while (sock.recv_some(buf, deadline) > 0) {
      }
      release();
      return;
    }

    KexInit ours;
    ours.kex_algorithms = options_.kex;
    for (const auto& key : keys_) {
      for (const auto& alg : key.signature_algorithms()) ours.server_host_key_algorithms.push_back(alg);
    }
    ours.encryption_c2s = ours.encryption_s2c = {"aes128-ctr"};
    ours.mac_c2s = ours.mac_s2c = {"hmac-sha2-256"};
    ours.compression_c2s = ours.compression_s2c = {"none"};
    const Bytes server_kexinit = ours.encode();
    sock.send_all(frame_packet(server_kexinit), deadline);

    Bytes client_kexinit;
    for (;;) {
      client_kexinit = stream.read_packet(deadline);
      record(client_kexinit.front());
      if (client_kexinit.front() == msg::kKexInit) break;
      if (client_kexinit.front() == msg::kDisconnect) throw net::EofError("client left");
    }
    const KexInit theirs = KexInit::decode(client_kexinit);
    const auto hk = negotiate(theirs.server_host_key_algorithms, ours.server_host_key_algorithms);
    const auto kex = negotiate(theirs.kex_algorithms, ours.kex_algorithms);
    if (!hk || !kex) {
      SshWriter d;
      d.byte(msg::kDisconnect).u32(kDisconnectKeyExchangeFailed).string("no match").string("");
      sock.send_all(frame_packet(d.bytes()), deadline);
    } else {
      const KexMethod method = *kex_method_from_name(*kex);
      const Bytes init = stream.read_packet(deadline);
      record(init.front());
      if (init.front() != msg::kKexEcdhInit) throw ProtocolError("expected KEX init");
      SshReader r(init);
      r.byte();
      const ByteView client_pub = method == KexMethod::kCurve25519Sha256 ? r.string() : r.mpint();
      const auto pair = KexKeyPair::generate(method);
      const Bytes server_pub = pair->public_value();
      const Bytes shared = pair->shared_secret(client_pub);
      const std::string key_type = key_type_for_signature_algorithm(*hk);
      const auto key = std::ranges::find_if(keys_, [&](const TestHostKey& k) { return k.type() == key_type; });
      const Bytes h = exchange_hash(method, client_version, kServerVersion, client_kexinit,
                                    server_kexinit, key->blob(), client_pub, server_pub, shared);
      Bytes sig = key->sign(h, *hk);
      if (options_.corrupt_signature) sig.back() ^= 0x01;

      SshWriter reply;
      reply.byte(msg::kKexEcdhReply).string(key->blob());
      if (method == KexMethod::kCurve25519Sha256) {
        reply.string(server_pub);
      } else {
        reply.mpint(server_pub);
      }
      reply.string(sig);
      if (options_.reply_delay.count() > 0) std::this_thread::sleep_for(options_.reply_delay);
      sock.send_all(frame_packet(reply.bytes()), deadline);
    }
    release();

    // Log whatever else the client sends until it hangs up.
    for (;;) {
      const Bytes p = stream.read_packet(deadline);
      record(p.front());
    }
  } catch (const std::exception&) {
  }
  release();
}

}  // namespace fpscan::testing
