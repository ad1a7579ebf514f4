#pragma once

// Minimal DNS message codec (RFC 1035 with EDNS0 from RFC 6891). Names are
// handled in dotted form without the trailing dot; the root is "".

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/bytes.hpp"

namespace fpscan::dns {

class MessageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace rrtype {
inline constexpr std::uint16_t kA = 1;
inline constexpr std::uint16_t kNs = 2;
inline constexpr std::uint16_t kCname = 5;
inline constexpr std::uint16_t kSoa = 6;
inline constexpr std::uint16_t kAaaa = 28;
inline constexpr std::uint16_t kOpt = 41;
inline constexpr std::uint16_t kSshfp = 44;
}  // namespace rrtype

inline constexpr std::uint16_t kClassIn = 1;

namespace flags {
inline constexpr std::uint16_t kQr = 0x8000;
inline constexpr std::uint16_t kAa = 0x0400;
inline constexpr std::uint16_t kTc = 0x0200;
inline constexpr std::uint16_t kRd = 0x0100;
inline constexpr std::uint16_t kRa = 0x0080;
inline constexpr std::uint16_t kAd = 0x0020;
inline constexpr std::uint16_t kCd = 0x0010;
}  // namespace flags

/// DO bit inside the OPT pseudo-record TTL field.
inline constexpr std::uint32_t kEdnsDoBit = 0x00008000;

namespace rcode {
inline constexpr int kNoError = 0;
inline constexpr int kFormErr = 1;
inline constexpr int kServFail = 2;
inline constexpr int kNxDomain = 3;
inline constexpr int kNotImp = 4;
inline constexpr int kRefused = 5;
}  // namespace rcode

struct Header {
  std::uint16_t id = 0;
  std::uint16_t flags = 0;

  int rcode() const { return flags & 0x000f; }
  bool has(std::uint16_t flag) const { return (flags & flag) != 0; }
};

struct Question {
  std::string name;
  std::uint16_t type = 0;
  std::uint16_t klass = kClassIn;
};

struct ResourceRecord {
  std::string name;
  std::uint16_t type = 0;
  std::uint16_t klass = kClassIn;
  std::uint32_t ttl = 0;
  Bytes rdata;
  /// Decompressed target for CNAME/NS records, empty otherwise.
  std::string target;
};

struct Message {
  Header header;
  std::vector<Question> questions;
  std::vector<ResourceRecord> answers;
  std::vector<ResourceRecord> authority;
  std::vector<ResourceRecord> additional;

  /// EDNS0 OPT record in the additional section, if any.
  const ResourceRecord* opt() const;
};

/// True if every label is 1-63 octets and the wire form fits 255 octets.
bool is_valid_name(std::string_view name);

bool names_equal(std::string_view a, std::string_view b);

/// Wire encoding without name compression. CNAME/NS records are encoded from
/// `target` when rdata is empty.
Bytes encode(const Message& message);

/// RD set; with dnssec_ok an OPT record (udp_size, DO bit) is appended.
Bytes encode_query(std::uint16_t id, std::string_view name, std::uint16_t qtype,
                   bool dnssec_ok, std::uint16_t udp_size = 1232);

/// Full decode with compression-pointer loop protection.
Message decode(ByteView wire);

/// Decodes just the 12-byte header.
Header decode_header(ByteView wire);

Bytes encode_name(std::string_view name);

}  // namespace fpscan::dns
