#include "fpscan/keyscan/ssh_wire.hpp"

#include <openssl/rand.h>

#include <algorithm>

namespace fpscan::keyscan {

namespace {

constexpr std::size_t kBlockSize = 8;
constexpr std::size_t kMaxVersionLine = 255;
constexpr int kMaxPreambleLines = 64;

}  // namespace

SshWriter& SshWriter::byte(std::uint8_t v) {
  buf_.push_back(v);
  return *this;
}

SshWriter& SshWriter::u32(std::uint32_t v) {
  buf_.push_back(static_cast<std::uint8_t>(v >> 24));
  buf_.push_back(static_cast<std::uint8_t>(v >> 16));
  buf_.push_back(static_cast<std::uint8_t>(v >> 8));
  buf_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

SshWriter& SshWriter::string(ByteView v) {
  u32(static_cast<std::uint32_t>(v.size()));
  return raw(v);
}

SshWriter& SshWriter::mpint(ByteView magnitude) {
  std::size_t skip = 0;
  while (skip < magnitude.size() && magnitude[skip] == 0) ++skip;
  const ByteView trimmed = magnitude.subspan(skip);
  if (trimmed.empty()) return u32(0);
  const bool pad = (trimmed.front() & 0x80) != 0;
  u32(static_cast<std::uint32_t>(trimmed.size() + (pad ? 1 : 0)));
  if (pad) buf_.push_back(0);
  return raw(trimmed);
}

SshWriter& SshWriter::name_list(const std::vector<std::string>& names) {
  return string(join_name_list(names));
}

SshWriter& SshWriter::raw(ByteView v) {
  buf_.insert(buf_.end(), v.begin(), v.end());
  return *this;
}

std::uint8_t SshReader::byte() {
  if (pos_ >= data_.size()) throw ProtocolError("truncated SSH message");
  return data_[pos_++];
}

std::uint32_t SshReader::u32() {
  if (data_.size() - pos_ < 4) throw ProtocolError("truncated SSH message");
  const std::uint32_t v = (std::uint32_t{data_[pos_]} << 24) |
                          (std::uint32_t{data_[pos_ + 1]} << 16) |
                          (std::uint32_t{data_[pos_ + 2]} << 8) | std::uint32_t{data_[pos_ + 3]};
  pos_ += 4;
  return v;
}

ByteView SshReader::string() {
  const std::uint32_t len = u32();
  if (len > data_.size() - pos_) throw ProtocolError("SSH string exceeds message");
  const ByteView out = data_.subspan(pos_, len);
  pos_ += len;
  return out;
}

std::string SshReader::text() { return to_string(string()); }

ByteView SshReader::mpint() {
  ByteView v = string();
  if (!v.empty() && (v.front() & 0x80) != 0) throw ProtocolError("negative mpint");
  while (!v.empty() && v.front() == 0) v = v.subspan(1);
  return v;
}

std::vector<std::string> SshReader::name_list() { return split_name_list(text()); }

ByteView SshReader::rest() {
  const ByteView out = data_.subspan(pos_);
  pos_ = data_.size();
  return out;
}

std::vector<std::string> split_name_list(std::string_view list) {
  std::vector<std::string> out;
  if (list.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = list.find(',', start);
    out.emplace_back(list.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join_name_list(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out.push_back(',');
    out += n;
  }
  return out;
}

Bytes frame_packet(ByteView payload) {
  // packet_length(4) + padding_length(1) + payload + padding must be a
  // multiple of the block size, with at least 4 bytes of padding.
  std::size_t padding = kBlockSize - ((5 + payload.size()) % kBlockSize);
  if (padding < 4) padding += kBlockSize;
  Bytes pad(padding);
  RAND_bytes(pad.data(), static_cast<int>(pad.size()));

  SshWriter w;
  w.u32(static_cast<std::uint32_t>(1 + payload.size() + padding));
  w.byte(static_cast<std::uint8_t>(padding));
  w.raw(payload);
  w.raw(pad);
  return std::move(w).bytes();
}

void PacketStream::fill(std::size_t n, net::Deadline deadline) {
  std::uint8_t buf[4096];
  while (pending_.size() < n) {
    const std::size_t got = sock_.recv_some(buf, deadline);
    if (got == 0) throw net::EofError("connection closed by peer");
    pending_.insert(pending_.end(), buf, buf + got);
  }
}

std::uint8_t PacketStream::next_byte(net::Deadline deadline) {
  fill(1, deadline);
  const std::uint8_t b = pending_.front();
  pending_.erase(pending_.begin());
  return b;
}

std::string PacketStream::read_version(net::Deadline deadline) {
  for (int line_no = 0; line_no < kMaxPreambleLines; ++line_no) {
    std::string line;
    for (;;) {
      const char c = static_cast<char>(next_byte(deadline));
      if (c == '\n') break;
      line.push_back(c);
      if (line.size() > kMaxVersionLine) throw ProtocolError("identification line too long");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("SSH-")) {
      if (!line.starts_with("SSH-2.0-") && !line.starts_with("SSH-1.99-")) {
        throw ProtocolError("unsupported protocol version: " + line);
      }
      return line;
    }
  }
  throw ProtocolError("no SSH identification string received");
}

Bytes PacketStream::read_packet(net::Deadline deadline) {
  fill(5, deadline);
  const std::uint32_t packet_length = (std::uint32_t{pending_[0]} << 24) |
                                      (std::uint32_t{pending_[1]} << 16) |
                                      (std::uint32_t{pending_[2]} << 8) | std::uint32_t{pending_[3]};
  const std::uint8_t padding = pending_[4];
  if (packet_length < 5 || packet_length > kMaxPacketLength) {
    throw ProtocolError("bad packet length " + std::to_string(packet_length));
  }
  if ((packet_length + 4) % kBlockSize != 0) throw ProtocolError("packet not block aligned");
  if (padding < 4 || padding >= packet_length) {
    throw ProtocolError("bad padding length " + std::to_string(padding));
  }
  fill(4 + packet_length, deadline);
  Bytes payload(pending_.begin() + 5, pending_.begin() + 4 + packet_length - padding);
  pending_.erase(pending_.begin(), pending_.begin() + 4 + packet_length);
  if (payload.empty()) throw ProtocolError("empty packet payload");
  return payload;
}

}  // namespace fpscan::keyscan
