#include "testbed.hpp"

#include <fstream>
#include <random>

namespace fpscan::testing {

namespace {

const std::array<sshfp::HashType, 2> kBothHashes = {sshfp::kHashSha1, sshfp::kHashSha256};

std::vector<sshfp::SshfpRecord> records_for(const std::vector<TestHostKey>& keys) {
  std::vector<sshfp::HostKey> host_keys;
  for (const auto& k : keys) host_keys.push_back(k.host_key());
  return sshfp::generate_records(host_keys, kBothHashes);
}

}  // namespace

Testbed::Testbed()
    : plain_(std::make_unique<MockDnsServer>(MockDnsServer::Mode::kPlain)),
      validating_(std::make_unique<MockDnsServer>(MockDnsServer::Mode::kValidating)) {
  for (int i = 1; i <= 3; ++i) {
    const std::string address = "127.0.0.1" + std::to_string(i);
    std::vector<TestHostKey> keys = {TestHostKey::generate("ssh-ed25519"),
                                     TestHostKey::generate("ecdsa-sha2-nistp256")};
    ZoneEntry e;
    e.sshfp = records_for(keys);
    e.a = {address};
    e.secure = true;
    daemons_.push_back(std::make_unique<MockSshServer>(keys, address, ssh_port_));
    ssh_port_ = daemons_.back()->port();
    add("full" + std::to_string(i) + ".example", e, "full_match");
  }
  for (int i = 1; i <= 3; ++i) {
    const std::string address = "127.0.0.1" + std::to_string(3 + i);
    const TestHostKey ed = TestHostKey::generate("ssh-ed25519");
    const TestHostKey rsa = TestHostKey::generate("ssh-rsa");
    const TestHostKey rotated = TestHostKey::generate("ssh-rsa");
    ZoneEntry e;
    e.sshfp = records_for({ed, rotated});
    e.a = {address};
    daemons_.push_back(std::make_unique<MockSshServer>(std::vector{ed, rsa}, address, ssh_port_));
    add("partial" + std::to_string(i) + ".example", e, "partial_match");
  }
  for (int i = 1; i <= 2; ++i) {
    ZoneEntry e;
    e.sshfp = records_for({TestHostKey::generate("ssh-ed25519")});
    e.a = {"127.0.0.2" + std::to_string(i)};
    add("nossh" + std::to_string(i) + ".example", e, "no_ssh");
  }
  {
    std::mt19937 rng(44);
    Bytes digest(32);
    for (auto& b : digest) b = static_cast<std::uint8_t>(rng());
    ZoneEntry e;
    e.sshfp = {{sshfp::KeyAlgo(5), sshfp::kHashSha256, digest}};
    e.a = {"127.0.0.23"};
    tripwire_ = std::make_unique<MockSshServer>(
        std::vector{TestHostKey::generate("ssh-ed25519")}, "127.0.0.23", ssh_port_);
    add("invalid1.example", e, "no_valid_records");
  }
  names_.push_back("missing.example");
  category_["missing.example"] = "nxdomain";
}

void Testbed::add(const std::string& name, ZoneEntry entry, const std::string& category) {
  plain_->set(name, entry);
  validating_->set(name, entry);
  names_.push_back(name);
  category_[name] = category;
}

void Testbed::write_names(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& n : names_) out << n << '\n';
}

}  // namespace fpscan::testing
