#include "rcc/ordering.hpp"

#include <numeric>

namespace rcc::ordering {

std::uint64_t factorial(std::size_t k) {
  if (k > 20) throw OrderingError("k! overflows 64 bits for k > 20");
  std::uint64_t v = 1;
  for (std::size_t i = 2; i <= k; ++i) v *= i;
  return v;
}

std::uint64_t seed_index(const Digest& seed, std::size_t k) {
  if (k <= 1) return 0;
  const std::uint64_t mod = factorial(k) - 1;
  if (mod <= 1) return 0;
  unsigned __int128 acc = 0;
  for (auto b : seed.bytes) acc = ((acc << 8) | b) % mod;
  return static_cast<std::uint64_t>(acc);
}

Digest sequence_digest(std::span<const Digest> ordered) {
  ByteWriter w;
  w.str("round-set").u32(static_cast<std::uint32_t>(ordered.size()));
  for (const auto& d : ordered) w.digest(d);
  return w.finish();
}

std::vector<std::size_t> hash_permuted_order(std::span<const Digest> ordered) {
  std::vector<std::size_t> positions(ordered.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  if (ordered.size() <= 1) return positions;
  const std::uint64_t h = seed_index(sequence_digest(ordered), ordered.size());
  return permutation_at<std::size_t>(positions, h);
}

}  // namespace rcc::ordering
