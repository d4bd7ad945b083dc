#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcc/digest.hpp"

namespace rcc::ordering {

class OrderingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// k! for k <= 20; throws OrderingError beyond.
std::uint64_t factorial(std::size_t k);

// digest mod (k! - 1), reading the digest as a 256-bit big-endian integer.
// For k <= 1 the modulus is zero and the index is 0.
std::uint64_t seed_index(const Digest& seed, std::size_t k);

// The factorial-number-system map from {0, ..., k!-1} onto permutations of
// `items`: with q = index / (k-1)! and r = index % (k-1)!, the result is the
// permutation of items-without-items[q] selected by r, followed by items[q].
template <class T>
std::vector<T> permutation_at(std::span<const T> items, std::uint64_t index) {
  const std::size_t k = items.size();
  if (k == 0) return {};
  if (index >= factorial(k)) throw OrderingError("permutation index out of range");
  std::vector<T> rest(items.begin(), items.end());
  std::vector<T> tail;  // elements fixed so far, last-picked first
  tail.reserve(k);
  std::uint64_t i = index;
  for (std::size_t size = k; size > 1; --size) {
    const std::uint64_t block = factorial(size - 1);
    const auto q = static_cast<std::size_t>(i / block);
    i %= block;
    tail.push_back(rest[q]);
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(q));
  }
  std::vector<T> out;
  out.reserve(k);
  out.push_back(rest.front());
  for (auto it = tail.rbegin(); it != tail.rend(); ++it) out.push_back(*it);
  return out;
}

// Hash of the ordered digest list, used as the permutation seed.
Digest sequence_digest(std::span<const Digest> ordered);

// Execution order for one round: `ordered` is sorted by instance; returns
// positions into it.
std::vector<std::size_t> hash_permuted_order(std::span<const Digest> ordered);

}  // namespace rcc::ordering
