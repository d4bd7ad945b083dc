#include "rcc/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace rcc {

namespace {
constexpr char kHex[] = "0123456789abcdef";
}

std::string Digest::hex() const {
  std::string out;
  out.reserve(64);
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string Digest::short_hex() const { return hex().substr(0, 16); }

std::uint64_t Digest::prefix64() const {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | bytes[i];
  return v;
}

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != d.bytes.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return d;
}

Digest sha256(std::string_view data) {
  return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(data.data()),
                                              data.size()));
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
  buf_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  return *this;
}

ByteWriter& ByteWriter::bytes(std::span<const std::uint8_t> b) {
  u32(static_cast<std::uint32_t>(b.size()));
  buf_.insert(buf_.end(), b.begin(), b.end());
  return *this;
}

ByteWriter& ByteWriter::str(std::string_view s) {
  return bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

ByteWriter& ByteWriter::digest(const Digest& d) {
  buf_.insert(buf_.end(), d.bytes.begin(), d.bytes.end());
  return *this;
}

}  // namespace rcc
