#pragma once

// In-process DNS server standing in for a recursive resolver. Serves a
// fixed zone over UDP and TCP; in validating mode it sets AD for secure
// names (when DO is requested) and SERVFAILs bogus ones.

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fpscan/net/socket.hpp"
#include "fpscan/sshfp.hpp"

namespace fpscan::testing {

struct ZoneEntry {
  std::vector<sshfp::SshfpRecord> sshfp;
  std::vector<std::string> a;
  std::vector<std::string> aaaa;
  /// Alias target; the entry's own data is ignored when set.
  std::string cname;
  bool secure = false;
  bool bogus = false;
  std::optional<int> rcode;
  bool drop = false;
  bool garbage = false;
};

struct QueryLogEntry {
  std::string name;
  std::uint16_t qtype = 0;
  bool dnssec_ok = false;
  bool tcp = false;
};

class MockDnsServer {
 public:
  enum class Mode { kPlain, kValidating };

  explicit MockDnsServer(Mode mode, const std::string& address = "127.0.0.1");
  ~MockDnsServer();
  MockDnsServer(const MockDnsServer&) = delete;
  MockDnsServer& operator=(const MockDnsServer&) = delete;

  void set(const std::string& name, ZoneEntry entry);
  /// Drop every query silently.
  void set_blackhole(bool on) { blackhole_ = on; }

  net::Endpoint endpoint() const { return {address_, port_}; }
  std::vector<QueryLogEntry> queries() const;
  std::size_t query_count() const;
  void clear_log();

 private:
  std::optional<Bytes> respond(ByteView query, bool tcp);
  void udp_loop();
  void tcp_loop();

  Mode mode_;
  std::string address_;
  std::uint16_t port_ = 0;
  int udp_fd_ = -1;
  int tcp_fd_ = -1;
  std::atomic<bool> stop_{false};
  std::atomic<bool> blackhole_{false};
  mutable std::mutex mutex_;
  std::map<std::string, ZoneEntry> zone_;
  std::vector<QueryLogEntry> log_;
  std::thread udp_thread_;
  std::thread tcp_thread_;
};

}  // namespace fpscan::testing
