#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "rcc/coordinator.hpp"
#include "rcc/ordering.hpp"

using namespace rcc;
using namespace rcc::ordering;

namespace {

// Reference map written straight from the recursive definition: pick the
// element at index / (k-1)!, permute the rest with the remainder, append it.
std::vector<int> oracle_perm(std::vector<int> s, std::uint64_t index) {
  if (s.size() <= 1) return s;
  std::uint64_t sub = 1;
  for (std::size_t i = 2; i < s.size(); ++i) sub *= i;
  const auto q = static_cast<std::size_t>(index / sub);
  const int picked = s[q];
  s.erase(s.begin() + static_cast<std::ptrdiff_t>(q));
  auto out = oracle_perm(std::move(s), index % sub);
  out.push_back(picked);
  return out;
}

// Bit-serial reduction, independent of the library's byte-wise loop.
std::uint64_t oracle_mod(const Digest& d, std::uint64_t mod) {
  if (mod == 0) return 0;
  std::uint64_t r = 0;
  for (auto byte : d.bytes) {
    for (int bit = 7; bit >= 0; --bit) {
      // r < mod <= 2^62 so 2r + 1 fits.
      r = (2 * r + ((byte >> bit) & 1)) % mod;
    }
  }
  return r;
}

std::vector<int> iota_vec(std::size_t k) {
  std::vector<int> v(k);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST(Factorial, SmallValuesAndOverflowGuard) {
  EXPECT_EQ(factorial(0), 1u);
  EXPECT_EQ(factorial(1), 1u);
  EXPECT_EQ(factorial(6), 720u);
  EXPECT_EQ(factorial(20), 2432902008176640000ULL);
  EXPECT_THROW(factorial(21), OrderingError);
}

TEST(PermutationAt, SingletonBaseCase) {
  const std::vector<std::string> s{"S"};
  EXPECT_EQ(permutation_at<std::string>(s, 0), s);
  EXPECT_THROW(permutation_at<std::string>(s, 1), OrderingError);
}

TEST(PermutationAt, ThreeElementsIndexZero) {
  const std::vector<std::string> s{"A", "B", "C"};
  const std::vector<std::string> want{"C", "B", "A"};
  EXPECT_EQ(permutation_at<std::string>(s, 0), want);
}

TEST(PermutationAt, BijectionExhaustiveUpToSix) {
  for (std::size_t k = 1; k <= 6; ++k) {
    const auto items = iota_vec(k);
    std::set<std::vector<int>> seen;
    for (std::uint64_t i = 0; i < factorial(k); ++i) {
      const auto p = permutation_at<int>(items, i);
      ASSERT_EQ(p, oracle_perm(items, i)) << "k=" << k << " i=" << i;
      ASSERT_TRUE(std::is_permutation(p.begin(), p.end(), items.begin()));
      ASSERT_TRUE(seen.insert(p).second) << "k=" << k << " i=" << i;
    }
    EXPECT_EQ(seen.size(), factorial(k));
  }
  EXPECT_THROW(permutation_at<int>(iota_vec(6), 720), OrderingError);
}

TEST(PermutationAt, AgreesWithOracleForLargeK) {
  std::uint64_t x = 99;
  for (std::size_t k = 7; k <= 20; ++k) {
    const auto items = iota_vec(k);
    for (int trial = 0; trial < 50; ++trial) {
      x = x * 6364136223846793005ULL + 1442695040888963407ULL;
      const std::uint64_t i = x % factorial(k);
      ASSERT_EQ(permutation_at<int>(items, i), oracle_perm(items, i));
    }
  }
}

TEST(SeedIndex, MatchesBitSerialReduction) {
  for (std::size_t k = 0; k <= 20; ++k) {
    for (int i = 0; i < 20; ++i) {
      const Digest d = sha256("seed" + std::to_string(i));
      const std::uint64_t mod = k <= 1 ? 0 : factorial(k) - 1;
      const auto got = seed_index(d, k);
      EXPECT_EQ(got, oracle_mod(d, mod)) << "k=" << k;
      if (mod > 0) EXPECT_LT(got, mod);
    }
  }
  Digest max;
  max.bytes.fill(0xff);
  EXPECT_EQ(seed_index(max, 6), oracle_mod(max, 719));
}

TEST(HashOrder, DeterministicPermutationOfInput) {
  for (std::size_t k = 1; k <= 9; ++k) {
    std::vector<Digest> ds;
    for (std::size_t i = 0; i < k; ++i) ds.push_back(sha256("t" + std::to_string(i * 31 + k)));
    const auto order = hash_permuted_order(ds);
    EXPECT_EQ(order, hash_permuted_order(ds));
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> expect(k);
    std::iota(expect.begin(), expect.end(), std::size_t{0});
    EXPECT_EQ(sorted, expect);

    std::vector<int> items(k);
    std::iota(items.begin(), items.end(), 0);
    const std::uint64_t idx = oracle_mod(sequence_digest(ds), k <= 1 ? 0 : factorial(k) - 1);
    const auto want = oracle_perm(items, idx);
    for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(order[i], static_cast<std::size_t>(want[i]));
  }
}

TEST(HashOrder, DependsOnRoundContents) {
  // Over many rounds of 4 proposals the first slot is not always instance 1.
  std::set<std::size_t> firsts;
  for (int r = 0; r < 64; ++r) {
    std::vector<Digest> ds;
    for (int i = 0; i < 4; ++i) ds.push_back(sha256(std::to_string(r) + "/" + std::to_string(i)));
    firsts.insert(hash_permuted_order(ds).front());
  }
  EXPECT_GT(firsts.size(), 1u);
}

TEST(OrderRound, ByInstanceKeepsInput) {
  std::vector<ExecutionEntry> in;
  for (InstanceId i = 1; i <= 4; ++i) in.push_back({i, std::make_shared<const Transaction>(Transaction::noop())});
  const auto out = order_round(in, OrderingPolicy::by_instance);
  for (std::size_t k = 0; k < in.size(); ++k) EXPECT_EQ(out[k].instance, in[k].instance);
}
