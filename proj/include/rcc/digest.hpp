#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rcc {

// SHA-256 of a canonical serialization.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;

  std::string hex() const;
  // First 8 bytes as 16 hex characters; used in traces.
  std::string short_hex() const;
  // First 8 bytes interpreted big-endian.
  std::uint64_t prefix64() const;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

// Canonical encoder: fixed field order, big-endian fixed-width integers,
// u32 length prefix before every byte string. See docs/serialization.md.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v);
  ByteWriter& u32(std::uint32_t v);
  ByteWriter& u64(std::uint64_t v);
  ByteWriter& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  ByteWriter& bytes(std::span<const std::uint8_t> b);
  ByteWriter& str(std::string_view s);
  ByteWriter& digest(const Digest& d);

  const std::vector<std::uint8_t>& data() const { return buf_; }
  Digest finish() const { return sha256(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

}  // namespace rcc
