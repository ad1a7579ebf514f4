#pragma once

// SSH binary packet protocol (RFC 4253 section 6) before NEWKEYS: no
// cipher, no MAC, 8-byte block alignment.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fpscan/bytes.hpp"
#include "fpscan/net/socket.hpp"

namespace fpscan::keyscan {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace msg {
inline constexpr std::uint8_t kDisconnect = 1;
inline constexpr std::uint8_t kIgnore = 2;
inline constexpr std::uint8_t kUnimplemented = 3;
inline constexpr std::uint8_t kDebug = 4;
inline constexpr std::uint8_t kKexInit = 20;
inline constexpr std::uint8_t kNewKeys = 21;
inline constexpr std::uint8_t kKexEcdhInit = 30;  // also KEXDH_INIT
inline constexpr std::uint8_t kKexEcdhReply = 31;  // also KEXDH_REPLY
/// First message number of the user authentication protocol.
inline constexpr std::uint8_t kFirstAuthMessage = 50;
}  // namespace msg

inline constexpr std::uint32_t kDisconnectKeyExchangeFailed = 3;
inline constexpr std::uint32_t kDisconnectByApplication = 11;

inline constexpr std::size_t kMaxPacketLength = 35000;

class SshWriter {
 public:
  SshWriter& byte(std::uint8_t v);
  SshWriter& boolean(bool v) { return byte(v ? 1 : 0); }
  SshWriter& u32(std::uint32_t v);
  SshWriter& string(ByteView v);
  SshWriter& string(std::string_view v) { return string(as_bytes(v)); }
  /// Unsigned big-endian magnitude, re-encoded as a two's complement mpint.
  SshWriter& mpint(ByteView magnitude);
  SshWriter& name_list(const std::vector<std::string>& names);
  SshWriter& raw(ByteView v);

  const Bytes& bytes() const& { return buf_; }
  Bytes bytes() && { return std::move(buf_); }

 private:
  Bytes buf_;
};

class SshReader {
 public:
  explicit SshReader(ByteView data) : data_(data) {}

  std::uint8_t byte();
  bool boolean() { return byte() != 0; }
  std::uint32_t u32();
  ByteView string();
  std::string text();
  /// Magnitude of a non-negative mpint, leading zeros stripped.
  ByteView mpint();
  std::vector<std::string> name_list();
  ByteView rest();

  bool at_end() const { return pos_ == data_.size(); }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_name_list(std::string_view list);
std::string join_name_list(const std::vector<std::string>& names);

/// Frames a payload as an unencrypted binary packet with random padding.
Bytes frame_packet(ByteView payload);

/// Reads unencrypted binary packets from a stream socket.
class PacketStream {
 public:
  explicit PacketStream(const net::Socket& sock) : sock_(sock) {}

  /// Reads the peer's identification string, skipping any preceding lines
  /// (RFC 4253 section 4.2). Returns it without CR LF.
  std::string read_version(net::Deadline deadline);
  /// Returns the next payload (message number first).
  Bytes read_packet(net::Deadline deadline);

 private:
  std::uint8_t next_byte(net::Deadline deadline);
  void fill(std::size_t n, net::Deadline deadline);

  const net::Socket& sock_;
  Bytes pending_;
};

}  // namespace fpscan::keyscan
