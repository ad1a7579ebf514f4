#pragma once

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>

namespace fpscan::pipeline {

class InvalidName : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lowercases ASCII, strips one trailing dot and checks label syntax.
/// Non-ASCII input is rejected; IDNs must arrive in punycode. Throws
/// InvalidName.
std::string normalize_domain(std::string_view name);

/// True iff the leftmost label is "*".
bool is_wildcard(std::string_view name);

/// Public Suffix List matcher (normal, wildcard and exception rules, with
/// the implicit "*" default rule).
class PublicSuffixList {
 public:
  PublicSuffixList() = default;

  /// Parses the publicsuffix.org .dat format; comments and blank lines are
  /// skipped and only the first whitespace-delimited token of a line counts.
  static PublicSuffixList parse(std::istream& in);
  static PublicSuffixList load(const std::string& path);
  /// Small compiled-in snapshot covering common multi-label suffixes.
  static const PublicSuffixList& builtin();

  void add_rule(std::string_view rule);

  /// Longest public suffix of a normalized name.
  std::string public_suffix(std::string_view name) const;

  /// Public suffix plus one label; nullopt when the name is itself a public
  /// suffix (or wildcard).
  std::optional<std::string> registrable_domain(std::string_view name) const;

  std::size_t size() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

 private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // "*.foo" stored as "foo"
  std::unordered_set<std::string> exceptions_;  // "!bar.foo" stored as "bar.foo"
};

}  // namespace fpscan::pipeline
