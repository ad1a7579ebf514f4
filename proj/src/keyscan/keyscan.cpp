#include "fpscan/keyscan/keyscan.hpp"

#include <algorithm>
#include <array>

#include "fpscan/keyscan/kex.hpp"
#include "fpscan/keyscan/ssh_wire.hpp"

namespace fpscan::keyscan {

namespace {

constexpr std::string_view kSoftwareVersion = "fpscan_0.1";

// Cipher/MAC/compression lists only have to intersect the server's for
// KEXINIT negotiation to succeed; none of them is ever used.
const std::vector<std::string> kCiphers = {
    "chacha20-poly1305@openssh.com", "aes128-ctr", "aes192-ctr", "aes256-ctr",
    "aes128-gcm@openssh.com", "aes256-gcm@openssh.com"};
const std::vector<std::string> kMacs = {
    "hmac-sha2-256-etm@openssh.com", "hmac-sha2-512-etm@openssh.com", "hmac-sha2-256",
    "hmac-sha2-512", "hmac-sha1"};
const std::vector<std::string> kCompression = {"none", "zlib@openssh.com"};

// Messages a scanner may send. Everything at or beyond NEWKEYS is refused,
// so no authentication-phase byte can leave this process.
bool sendable(std::uint8_t message) {
  return message == msg::kDisconnect || message == msg::kKexInit ||
         message == msg::kKexEcdhInit;
}

class Session {
 public:
  Session(const net::Socket& sock, net::Deadline deadline)
      : sock_(sock), deadline_(deadline), stream_(sock) {}

  void send(ByteView payload) {
    if (payload.empty() || !sendable(payload.front())) {
      throw std::logic_error("keyscan attempted to send SSH message " +
                             std::to_string(payload.empty() ? 0 : payload.front()));
    }
    sock_.send_all(frame_packet(payload), deadline_);
  }

  void send_disconnect(std::uint32_t reason, std::string_view description) {
    SshWriter w;
    w.byte(msg::kDisconnect).u32(reason).string(description).string("");
    try {
      send(w.bytes());
    } catch (const net::NetError&) {
      // Peer already gone.
    }
  }

  std::string read_version() { return stream_.read_version(deadline_); }

  /// Next payload that is not IGNORE/DEBUG/UNIMPLEMENTED.
  Bytes read_message() {
    for (;;) {
      Bytes payload = stream_.read_packet(deadline_);
      const std::uint8_t type = payload.front();
      if (type == msg::kIgnore || type == msg::kDebug || type == msg::kUnimplemented) continue;
      if (type == msg::kDisconnect) {
        SshReader r(payload);
        r.byte();
        const std::uint32_t code = r.u32();
        std::string text;
        try {
          text = r.text();
        } catch (const ProtocolError&) {
        }
        throw ProtocolError("server disconnected (" + std::to_string(code) + "): " + text);
      }
      return payload;
    }
  }

  const net::Socket& socket() const { return sock_; }

 private:
  const net::Socket& sock_;
  net::Deadline deadline_;
  PacketStream stream_;
};

HandshakeResult run_handshake(Session& session, std::string_view host_key_algo,
                              const HandshakeOptions& options) {
  const std::string client_version = client_version_string(options);
  session.socket().send_all(as_bytes(client_version + "\r\n"), net::Clock::now() + std::chrono::seconds(5));
  const std::string server_version = session.read_version();

  KexInit ours;
  ours.kex_algorithms = options.kex_algorithms.empty() ? supported_kex_names() : options.kex_algorithms;
  ours.server_host_key_algorithms = host_key_algorithms_for(host_key_algo);
  ours.encryption_c2s = ours.encryption_s2c = kCiphers;
  ours.mac_c2s = ours.mac_s2c = kMacs;
  ours.compression_c2s = ours.compression_s2c = kCompression;
  const Bytes client_kexinit = ours.encode();
  session.send(client_kexinit);

  const Bytes server_kexinit = session.read_message();
  if (server_kexinit.front() != msg::kKexInit) {
    throw ProtocolError("expected KEXINIT, got message " + std::to_string(server_kexinit.front()));
  }
  const KexInit theirs = KexInit::decode(server_kexinit);

  const auto host_key_algorithm =
      negotiate(ours.server_host_key_algorithms, theirs.server_host_key_algorithms);
  if (!host_key_algorithm) {
    session.send_disconnect(kDisconnectKeyExchangeFailed, "no matching host key type");
    throw HandshakeError(KeyStatus::kUnsupportedByServer,
                         "server offers no host key of type " + std::string(host_key_algo));
  }
  const auto kex_name = negotiate(ours.kex_algorithms, theirs.kex_algorithms);
  if (!kex_name) {
    session.send_disconnect(kDisconnectKeyExchangeFailed, "no matching key exchange method");
    throw ProtocolError("no common key exchange method");
  }
  const KexMethod method = *kex_method_from_name(*kex_name);

  bool skip_guess = false;
  if (theirs.first_kex_packet_follows) {
    skip_guess = theirs.kex_algorithms.empty() || theirs.kex_algorithms.front() != *kex_name ||
                 theirs.server_host_key_algorithms.empty() ||
                 theirs.server_host_key_algorithms.front() != *host_key_algorithm;
  }

  const auto ephemeral = KexKeyPair::generate(method);
  const Bytes client_public = ephemeral->public_value();
  SshWriter init;
  init.byte(msg::kKexEcdhInit);
  if (method == KexMethod::kCurve25519Sha256) {
    init.string(client_public);
  } else {
    init.mpint(client_public);
  }
  session.send(init.bytes());

  if (skip_guess) session.read_message();
  const Bytes reply = session.read_message();
  if (reply.front() != msg::kKexEcdhReply) {
    throw ProtocolError("expected KEX reply, got message " + std::to_string(reply.front()));
  }
  SshReader r(reply);
  r.byte();
  const ByteView host_key_blob = r.string();
  const ByteView server_public =
      method == KexMethod::kCurve25519Sha256 ? r.string() : r.mpint();
  const ByteView signature = r.string();

  const auto embedded = sshfp::embedded_key_type(host_key_blob);
  const std::string expected_type = key_type_for_signature_algorithm(*host_key_algorithm);
  if (!embedded || *embedded != expected_type) {
    throw ProtocolError("server sent a " + embedded.value_or("malformed") + " key for " +
                        *host_key_algorithm);
  }

  const Bytes shared = ephemeral->shared_secret(server_public);
  const Bytes hash = exchange_hash(method, client_version, server_version, client_kexinit,
                                   server_kexinit, host_key_blob, client_public, server_public,
                                   shared);
  const bool verified =
      verify_host_key_signature(host_key_blob, signature, hash, *host_key_algorithm);

  session.send_disconnect(kDisconnectByApplication, "host key collected");

  return HandshakeResult{
      sshfp::HostKey(expected_type, Bytes(host_key_blob.begin(), host_key_blob.end())), verified,
      server_version, *kex_name, *host_key_algorithm};
}

}  // namespace

std::string_view to_string(KeyStatus status) {
  switch (status) {
    case KeyStatus::kOk:
      return "OK";
    case KeyStatus::kUnsupportedByServer:
      return "UNSUPPORTED_BY_SERVER";
    case KeyStatus::kTimeout:
      return "TIMEOUT";
    case KeyStatus::kRefused:
      return "REFUSED";
    case KeyStatus::kProtocolError:
      return "PROTOCOL_ERROR";
  }
  return "PROTOCOL_ERROR";
}

std::optional<KeyStatus> key_status_from_string(std::string_view s) {
  for (auto st : {KeyStatus::kOk, KeyStatus::kUnsupportedByServer, KeyStatus::kTimeout,
                  KeyStatus::kRefused, KeyStatus::kProtocolError}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

const std::vector<std::string>& default_key_types() {
  static const std::vector<std::string> types = {
      "ssh-dss", "ssh-rsa", "ecdsa-sha2-nistp256", "ecdsa-sha2-nistp384",
      "ecdsa-sha2-nistp521", "ssh-ed25519"};
  return types;
}

std::vector<std::string> expand_key_types(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  auto add = [&out](const std::string& name) {
    if (std::ranges::find(out, name) == out.end()) out.push_back(name);
  };
  for (const auto& name : names) {
    if (name == "dsa" || name == "ssh-dss") {
      add("ssh-dss");
    } else if (name == "rsa" || name == "ssh-rsa") {
      add("ssh-rsa");
    } else if (name == "ecdsa") {
      add("ecdsa-sha2-nistp256");
      add("ecdsa-sha2-nistp384");
      add("ecdsa-sha2-nistp521");
    } else if (name == "ed25519" || name == "ssh-ed25519") {
      add("ssh-ed25519");
    } else if (name == "ed448" || name == "ssh-ed448") {
      add("ssh-ed448");
    } else if (name.starts_with("ecdsa-sha2-nistp") &&
               sshfp::key_algo_from_ssh_name(name).has_value()) {
      add(name);
    } else {
      throw std::invalid_argument("unknown host key type '" + name + "'");
    }
  }
  return out;
}

std::string client_version_string(const HandshakeOptions& options) {
  std::string v = "SSH-2.0-" + std::string(kSoftwareVersion);
  if (!options.policy_url.empty()) v += " research-scan " + options.policy_url;
  // Identification lines are limited to 255 characters including CR LF.
  if (v.size() > 253) v.resize(253);
  return v;
}

HandshakeResult perform_handshake(const net::Socket& connection, std::string_view host_key_algo,
                                  std::chrono::milliseconds timeout,
                                  const HandshakeOptions& options) {
  Session session(connection, net::Clock::now() + timeout);
  try {
    return run_handshake(session, host_key_algo, options);
  } catch (const HandshakeError&) {
    throw;
  } catch (const net::TimeoutError& e) {
    throw HandshakeError(KeyStatus::kTimeout, e.what());
  } catch (const net::RefusedError& e) {
    throw HandshakeError(KeyStatus::kRefused, e.what());
  } catch (const net::NetError& e) {
    throw HandshakeError(KeyStatus::kProtocolError, e.what());
  } catch (const ProtocolError& e) {
    throw HandshakeError(KeyStatus::kProtocolError, e.what());
  } catch (const std::invalid_argument& e) {
    throw HandshakeError(KeyStatus::kProtocolError, e.what());
  }
}

HostConnectionGate::HostConnectionGate(std::size_t per_host_limit)
    : limit_(std::max<std::size_t>(per_host_limit, 1)) {}

HostConnectionGate::Permit::~Permit() {
  if (gate_ != nullptr) gate_->release(host_);
}

HostConnectionGate::Permit HostConnectionGate::acquire(const std::string& host) {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return active_[host] < limit_; });
  const std::size_t now = ++active_[host];
  peak_ = std::max(peak_, now);
  return Permit(this, host);
}

void HostConnectionGate::release(const std::string& host) {
  {
    std::lock_guard lock(mutex_);
    auto it = active_.find(host);
    if (it != active_.end() && --it->second == 0) active_.erase(it);
  }
  cv_.notify_all();
}

std::size_t HostConnectionGate::in_use(const std::string& host) const {
  std::lock_guard lock(mutex_);
  auto it = active_.find(host);
  return it == active_.end() ? 0 : it->second;
}

std::size_t HostConnectionGate::peak() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

KeyscanResult collect_host_keys(const KeyscanTarget& target, const KeyscanOptions& options) {
  if (!net::is_ipv4_literal(target.address) &&
      !(options.allow_ipv6 && net::is_ipv6_literal(target.address))) {
    throw std::invalid_argument("keyscan target must be an IPv4 address: '" + target.address + "'");
  }
  KeyscanResult result;
  result.target = target;
  const net::Endpoint endpoint{target.address, target.port};

  for (const auto& algo : target.algos) {
    std::optional<HostConnectionGate::Permit> permit;
    if (options.gate != nullptr) permit.emplace(options.gate->acquire(target.address));
    if (options.before_connect) options.before_connect();

    const net::Deadline deadline = net::Clock::now() + target.timeout;
    KeyStatus status = KeyStatus::kOk;
    try {
      net::Socket sock = net::connect_tcp(endpoint, deadline);
      const auto left = std::max(std::chrono::milliseconds(1),
                                 std::chrono::duration_cast<std::chrono::milliseconds>(
                                     deadline - net::Clock::now()));
      HandshakeResult hs = perform_handshake(sock, algo, left, options.handshake);
      result.signature_verified[algo] = hs.signature_verified;
      if (std::ranges::find(result.keys, hs.key) == result.keys.end()) {
        result.keys.push_back(std::move(hs.key));
      }
    } catch (const net::RefusedError& e) {
      status = KeyStatus::kRefused;
      result.errors[algo] = e.what();
    } catch (const net::TimeoutError& e) {
      status = KeyStatus::kTimeout;
      result.errors[algo] = e.what();
    } catch (const net::NetError& e) {
      // Unreachable networks and similar: no service reachable.
      status = KeyStatus::kRefused;
      result.errors[algo] = e.what();
    } catch (const HandshakeError& e) {
      status = e.status();
      result.errors[algo] = e.what();
    }
    result.per_algo_status[algo] = status;
  }
  return result;
}

}  // namespace fpscan::keyscan
