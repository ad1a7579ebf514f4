#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "fpscan/keyscan/kex.hpp"
#include "fpscan/keyscan/keyscan.hpp"
#include "mock_ssh.hpp"

namespace fpscan::keyscan {
namespace {

using namespace std::chrono_literals;
using testing::MockSshOptions;
using testing::MockSshServer;
using testing::TestHostKey;

const TestHostKey& rsa_key() {
  static const TestHostKey k = TestHostKey::generate("ssh-rsa");
  return k;
}
const TestHostKey& ed_key() {
  static const TestHostKey k = TestHostKey::generate("ssh-ed25519");
  return k;
}

KeyscanTarget target_for(const MockSshServer& server, std::vector<std::string> algos = default_key_types()) {
  KeyscanTarget t;
  t.address = server.address();
  t.port = server.port();
  t.algos = std::move(algos);
  t.timeout = 2s;
  return t;
}

TEST(KeyTypes, Expansion) {
  EXPECT_EQ(default_key_types().size(), 6u);
  EXPECT_EQ(expand_key_types({"rsa"}), std::vector<std::string>{"ssh-rsa"});
  EXPECT_EQ(expand_key_types({"ecdsa"}).size(), 3u);
  EXPECT_EQ(expand_key_types({"ed25519", "ssh-ed448"}),
            (std::vector<std::string>{"ssh-ed25519", "ssh-ed448"}));
  EXPECT_THROW(expand_key_types({"rot13"}), std::invalid_argument);
  for (auto s : {KeyStatus::kOk, KeyStatus::kUnsupportedByServer, KeyStatus::kTimeout,
                 KeyStatus::kRefused, KeyStatus::kProtocolError}) {
    EXPECT_EQ(key_status_from_string(to_string(s)), s);
  }
}

TEST(KeyTypes, RsaOffersSha2Signatures) {
  const auto algs = host_key_algorithms_for("ssh-rsa");
  ASSERT_FALSE(algs.empty());
  EXPECT_EQ(algs.front(), "rsa-sha2-512");
  EXPECT_EQ(host_key_algorithms_for("ssh-ed25519"), std::vector<std::string>{"ssh-ed25519"});
}

TEST(Version, PolicyUrlIsAppended) {
  EXPECT_TRUE(client_version_string({}).starts_with("SSH-2.0-fpscan_"));
  HandshakeOptions o;
  o.policy_url = "https://scan.example/why";
  EXPECT_TRUE(client_version_string(o).ends_with(" https://scan.example/why"));
}

TEST(Collect, RsaAndEd25519Server) {
  MockSshServer server({rsa_key(), ed_key()});
  const auto result = collect_host_keys(target_for(server));
  ASSERT_EQ(result.keys.size(), 2u);
  std::set<Bytes> blobs;
  for (const auto& k : result.keys) blobs.insert(k.blob());
  EXPECT_EQ(blobs, (std::set<Bytes>{rsa_key().blob(), ed_key().blob()}));
  EXPECT_EQ(result.per_algo_status.at("ssh-rsa"), KeyStatus::kOk);
  EXPECT_EQ(result.per_algo_status.at("ssh-ed25519"), KeyStatus::kOk);
  EXPECT_EQ(result.per_algo_status.at("ssh-dss"), KeyStatus::kUnsupportedByServer);
  EXPECT_EQ(result.per_algo_status.at("ecdsa-sha2-nistp256"), KeyStatus::kUnsupportedByServer);
  EXPECT_TRUE(result.signature_verified.at("ssh-rsa"));
  EXPECT_TRUE(result.signature_verified.at("ssh-ed25519"));
  EXPECT_EQ(server.connections(), default_key_types().size());
}

TEST(Collect, EveryKeyTypeVerifies) {
  std::vector<TestHostKey> keys;
  for (auto t : {"ecdsa-sha2-nistp256", "ecdsa-sha2-nistp384", "ecdsa-sha2-nistp521", "ssh-ed448"}) {
    keys.push_back(TestHostKey::generate(t));
  }
  MockSshServer server(keys);
  const auto result = collect_host_keys(target_for(
      server, {"ecdsa-sha2-nistp256", "ecdsa-sha2-nistp384", "ecdsa-sha2-nistp521", "ssh-ed448"}));
  ASSERT_EQ(result.keys.size(), 4u);
  for (const auto& [algo, ok] : result.signature_verified) EXPECT_TRUE(ok) << algo;
}

TEST(Collect, NeverSendsPastKexRequest) {
  MockSshServer server({rsa_key(), ed_key()});
  collect_host_keys(target_for(server));
  const auto msgs = server.client_messages();
  ASSERT_FALSE(msgs.empty());
  for (auto m : msgs) {
    EXPECT_TRUE(m == 1 || m == 20 || m == 30) << int(m);
  }
  for (const auto& v : server.client_versions()) EXPECT_TRUE(v.starts_with("SSH-2.0-fpscan_"));
}

TEST(Collect, ClosedPortIsRefused) {
  std::uint16_t port = 0;
  {
    MockSshServer probe({ed_key()});
    port = probe.port();
  }
  KeyscanTarget t;
  t.address = "127.0.0.1";
  t.port = port;
  t.algos = {"ssh-ed25519", "ssh-rsa"};
  t.timeout = 1s;
  const auto r = collect_host_keys(t);
  EXPECT_TRUE(r.keys.empty());
  EXPECT_EQ(r.per_algo_status.at("ssh-ed25519"), KeyStatus::kRefused);
  EXPECT_EQ(r.per_algo_status.at("ssh-rsa"), KeyStatus::kRefused);
}

TEST(Collect, SilentServerTimesOut) {
  MockSshOptions o;
  o.silent = true;
  MockSshServer server({ed_key()}, "127.0.0.1", 0, o);
  auto t = target_for(server, {"ssh-ed25519"});
  t.timeout = 300ms;
  const auto start = std::chrono::steady_clock::now();
  const auto r = collect_host_keys(t);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 2s);
  EXPECT_EQ(r.per_algo_status.at("ssh-ed25519"), KeyStatus::kTimeout);
}

TEST(Collect, GarbageIsProtocolError) {
  MockSshOptions o;
  o.garbage = true;
  MockSshServer server({ed_key()}, "127.0.0.1", 0, o);
  const auto r = collect_host_keys(target_for(server, {"ssh-ed25519"}));
  EXPECT_EQ(r.per_algo_status.at("ssh-ed25519"), KeyStatus::kProtocolError);
}

TEST(Collect, BannerLinesAreSkipped) {
  MockSshOptions o;
  o.banner = {"Welcome", "to the mock"};
  MockSshServer server({ed_key()}, "127.0.0.1", 0, o);
  const auto r = collect_host_keys(target_for(server, {"ssh-ed25519"}));
  EXPECT_EQ(r.per_algo_status.at("ssh-ed25519"), KeyStatus::kOk);
}

TEST(Collect, CorruptSignatureStillYieldsKey) {
  MockSshOptions o;
  o.corrupt_signature = true;
  MockSshServer server({ed_key()}, "127.0.0.1", 0, o);
  const auto r = collect_host_keys(target_for(server, {"ssh-ed25519"}));
  ASSERT_EQ(r.keys.size(), 1u);
  EXPECT_FALSE(r.signature_verified.at("ssh-ed25519"));
}

TEST(Collect, DhGroup14Exchange) {
  MockSshOptions o;
  o.kex = {"diffie-hellman-group14-sha256"};
  MockSshServer server({rsa_key()}, "127.0.0.1", 0, o);
  const auto r = collect_host_keys(target_for(server, {"ssh-rsa"}));
  ASSERT_EQ(r.keys.size(), 1u);
  EXPECT_TRUE(r.signature_verified.at("ssh-rsa"));
}

TEST(Collect, NoCommonKexIsProtocolError) {
  MockSshOptions o;
  o.kex = {"sntrup761x25519-sha512@openssh.com"};
  MockSshServer server({ed_key()}, "127.0.0.1", 0, o);
  const auto r = collect_host_keys(target_for(server, {"ssh-ed25519"}));
  EXPECT_TRUE(r.keys.empty());
  EXPECT_EQ(r.per_algo_status.at("ssh-ed25519"), KeyStatus::kProtocolError);
}

TEST(Collect, Ipv6RejectedByDefault) {
  KeyscanTarget t;
  t.address = "::1";
  t.algos = {"ssh-ed25519"};
  EXPECT_THROW(collect_host_keys(t), std::invalid_argument);
}

TEST(Collect, BeforeConnectRunsPerConnection) {
  MockSshServer server({ed_key()});
  std::atomic<int> calls{0};
  KeyscanOptions opts;
  opts.before_connect = [&] { ++calls; };
  collect_host_keys(target_for(server, {"ssh-ed25519", "ssh-rsa", "ssh-dss"}), opts);
  EXPECT_EQ(calls, 3);
}

TEST(Gate, PerHostCapHolds) {
  MockSshOptions o;
  o.reply_delay = 150ms;
  MockSshServer server({ed_key()}, "127.0.0.1", 0, o);
  HostConnectionGate gate(4);
  KeyscanOptions opts;
  opts.gate = &gate;
  std::vector<std::thread> threads;
  for (int i = 0; i < 10; ++i) {
    threads.emplace_back([&] { collect_host_keys(target_for(server, {"ssh-ed25519"}), opts); });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(server.connections(), 10u);
  EXPECT_LE(server.peak_concurrency(), 4u);
  EXPECT_LE(gate.peak(), 4u);
  EXPECT_EQ(gate.in_use("127.0.0.1"), 0u);
}

TEST(Gate, PermitReleasesOnScopeExit) {
  HostConnectionGate gate(1);
  {
    auto p = gate.acquire("h");
    EXPECT_EQ(gate.in_use("h"), 1u);
  }
  EXPECT_EQ(gate.in_use("h"), 0u);
  auto a = gate.acquire("a");
  auto b = gate.acquire("b");
  EXPECT_EQ(gate.peak(), 1u);
}

}  // namespace
}  // namespace fpscan::keyscan
