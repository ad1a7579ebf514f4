#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fpscan {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Lowercase hex, no separators.
std::string to_hex(ByteView data);

/// Strict hex decoding: even length, [0-9a-fA-F] only. Returns nullopt otherwise.
std::optional<Bytes> from_hex(std::string_view hex);

std::string to_base64(ByteView data);
std::optional<Bytes> from_base64(std::string_view text);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string to_string(ByteView data) {
  return {reinterpret_cast<const char*>(data.data()), data.size()};
}

}  // namespace fpscan
