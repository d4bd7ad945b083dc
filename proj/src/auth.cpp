#include "rcc/auth.hpp"

#include <algorithm>

namespace rcc {

Signer KeyRing::signer_for(std::uint32_t node) const { return Signer(this, node); }

AuthTag KeyRing::tag(std::uint32_t node, const Digest& payload) const {
  ByteWriter w;
  w.str("rcc-auth").u64(seed_).u32(node).digest(payload);
  const Digest d = w.finish();
  AuthTag t;
  std::copy_n(d.bytes.begin(), t.bytes.size(), t.bytes.begin());
  return t;
}

bool KeyRing::verify(std::uint32_t node, const Digest& payload, const AuthTag& t) const {
  return tag(node, payload) == t;
}

}  // namespace rcc
