#pragma once

// Ten-domain fixture: mock plain + validating resolvers serving one zone,
// and mock SSH daemons on loopback aliases sharing a port.
//
//   full1-3.example     2 keys (ed25519, ecdsa p256), 4 matching records, signed
//   partial1-3.example  2 keys (ed25519, rsa); ed25519 records match, rsa
//                       records belong to a rotated-out key; unsigned
//   nossh1-2.example    2 ed25519 records, address with no SSH service
//   invalid1.example    one record with unassigned KEY-ALGO 5
//   missing.example     NXDOMAIN

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mock_dns.hpp"
#include "mock_ssh.hpp"

namespace fpscan::testing {

class Testbed {
 public:
  Testbed();

  net::Endpoint plain_resolver() const { return plain_->endpoint(); }
  net::Endpoint validating_resolver() const { return validating_->endpoint(); }
  std::uint16_t ssh_port() const { return ssh_port_; }

  const std::vector<std::string>& names() const { return names_; }
  /// Writes one name per line.
  void write_names(const std::string& path) const;

  /// Expected analysis category per domain.
  const std::map<std::string, std::string>& expected_category() const { return category_; }

  MockDnsServer& plain_dns() { return *plain_; }
  MockDnsServer& validating_dns() { return *validating_; }
  const std::vector<std::unique_ptr<MockSshServer>>& daemons() const { return daemons_; }
  /// Daemon listening at the invalid-record domain's address; must never
  /// see a connection.
  const MockSshServer& tripwire() const { return *tripwire_; }

 private:
  void add(const std::string& name, ZoneEntry entry, const std::string& category);

  std::unique_ptr<MockDnsServer> plain_;
  std::unique_ptr<MockDnsServer> validating_;
  std::vector<std::unique_ptr<MockSshServer>> daemons_;
  std::unique_ptr<MockSshServer> tripwire_;
  std::uint16_t ssh_port_ = 0;
  std::vector<std::string> names_;
  std::map<std::string, std::string> category_;
};

}  // namespace fpscan::testing
