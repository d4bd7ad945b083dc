#pragma once

#include <array>
#include <compare>
#include <cstdint>

#include "rcc/digest.hpp"

namespace rcc {

// Simulated authentication tag. Only the holder of a node's Signer can
// produce a tag that verifies for that node.
struct AuthTag {
  std::array<std::uint8_t, 16> bytes{};
  auto operator<=>(const AuthTag&) const = default;
};

class Signer;

// Holds the per-node secrets of one simulated deployment. The simulator owns
// the ring and hands each node exactly one Signer, so a Byzantine replica can
// equivocate under its own identity but never produce another node's tag.
class KeyRing {
 public:
  explicit KeyRing(std::uint64_t seed) : seed_(seed) {}

  Signer signer_for(std::uint32_t node) const;
  bool verify(std::uint32_t node, const Digest& payload, const AuthTag& tag) const;

 private:
  friend class Signer;
  AuthTag tag(std::uint32_t node, const Digest& payload) const;

  std::uint64_t seed_;
};

class Signer {
 public:
  std::uint32_t node() const { return node_; }
  AuthTag sign(const Digest& payload) const { return ring_->tag(node_, payload); }

 private:
  friend class KeyRing;
  Signer(const KeyRing* ring, std::uint32_t node) : ring_(ring), node_(node) {}

  const KeyRing* ring_;
  std::uint32_t node_;
};

}  // namespace rcc
