#include <gtest/gtest.h>

#include <random>

#include "rcc/checkpoint.hpp"
#include "rcc/client_manager.hpp"

using namespace rcc;

namespace {

SystemConfig config(std::uint32_t n, std::uint32_t f, Round sigma = 5) {
  SystemConfig c;
  c.n = n;
  c.f = f;
  c.m = n;
  c.sigma = sigma;
  return c;
}

}  // namespace

TEST(SwitchWindows, OneTwoThreeSigma) {
  const auto w = switch_windows(100, 5);
  EXPECT_EQ(w.stop_accept, 105);
  EXPECT_EQ(w.start_accept, 110);
  EXPECT_EQ(w.propose_from, 115);
}

TEST(ClientManager, InitialAssignmentRoundRobin) {
  ClientManager cm(config(4, 1));
  for (ClientId c = 0; c < 12; ++c) {
    EXPECT_EQ(cm.assigned(c), c % 4 + 1);
    EXPECT_TRUE(cm.acceptable(c, c % 4 + 1, 0));
    EXPECT_FALSE(cm.acceptable(c, (c + 1) % 4 + 1, 0));
  }
}

TEST(ClientManager, SwitchBoundariesAreInclusive) {
  ClientManager cm(config(4, 1));
  cm.apply_switch(1, 3, 100);
  EXPECT_EQ(cm.assigned(1), 3u);
  EXPECT_TRUE(cm.acceptable(1, 2, 105));
  EXPECT_FALSE(cm.acceptable(1, 2, 106));
  for (Round r = 106; r < 110; ++r) {
    EXPECT_FALSE(cm.acceptable(1, 2, r));
    EXPECT_FALSE(cm.acceptable(1, 3, r));
  }
  EXPECT_TRUE(cm.acceptable(1, 3, 110));
  EXPECT_FALSE(cm.may_propose(1, 3, 114));
  EXPECT_TRUE(cm.may_propose(1, 3, 115));
  EXPECT_FALSE(cm.may_propose(1, 2, 50));
}

// With non-decreasing observations the accept segments never overlap, so a
// client's transaction is acceptable through at most one instance per round.
TEST(ClientManager, SegmentsNeverOverlap) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const Round sigma = 1 + static_cast<Round>(rng() % 8);
    const auto cfg = config(7, 2, sigma);
    ClientManager cm(cfg);
    Round observed = static_cast<Round>(rng() % 20);
    for (int s = 0; s < 6; ++s) {
      observed += static_cast<Round>(rng() % 15);
      cm.apply_switch(0, static_cast<InstanceId>(1 + rng() % cfg.m), observed);
    }
    for (Round r = 0; r < observed + 4 * sigma; ++r) {
      int n = 0;
      for (InstanceId i = 1; i <= cfg.m; ++i) n += cm.acceptable(0, i, r) ? 1 : 0;
      ASSERT_LE(n, 1) << "trial " << trial << " round " << r;
      // Proposals are only allowed where acceptance is.
      for (InstanceId i = 1; i <= cfg.m; ++i) {
        if (cm.may_propose(0, i, r)) ASSERT_TRUE(cm.acceptable(0, i, r));
      }
    }
  }
}

TEST(ClientManager, DeferredSwitchesPerTarget) {
  ClientManager cm(config(4, 1));
  cm.defer(3, 2, 7);
  cm.defer(5, 4, 1);
  EXPECT_TRUE(cm.has_deferred(3));
  const auto got = cm.take_deferred(2);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].client, 3u);
  EXPECT_FALSE(cm.has_deferred(3));
  EXPECT_TRUE(cm.has_deferred(5));
}

TEST(Checkpoint, TriggersAtDistinctClaimThreshold) {
  for (std::uint32_t f = 1; f <= 4; ++f) {
    const auto cfg = config(3 * f + 1, f);
    CheckpointTracker t(cfg);
    EXPECT_EQ(t.threshold(), cfg.n - 2 * f);
    int fired = 0;
    for (std::uint32_t s = 0; s < t.threshold() - 1; ++s) fired += t.on_claim(s, 1, 9);
    // Repeats from the same sender and instance do not count.
    fired += t.on_claim(0, 1, 9);
    EXPECT_EQ(fired, 0);
    EXPECT_FALSE(t.triggered(9));
    EXPECT_TRUE(t.on_claim(cfg.n - 1, 2, 9));
    EXPECT_FALSE(t.on_claim(cfg.n - 2, 2, 9));
    EXPECT_TRUE(t.triggered(9));
    EXPECT_EQ(t.claimed_instances(9), (std::vector<InstanceId>{1, 2}));
    EXPECT_FALSE(t.triggered(8));
  }
}

TEST(Checkpoint, AdoptsOnceWithMatchingContributions) {
  const auto cfg = config(7, 2);
  KeyRing ring(1);
  CheckpointTracker t(cfg);
  const auto a = std::make_shared<const Transaction>(
      Transaction::signed_by(ring.signer_for(client_node(0)), 0, 1, {Get{"a"}}));
  const auto b = std::make_shared<const Transaction>(
      Transaction::signed_by(ring.signer_for(client_node(0)), 0, 2, {Get{"b"}}));
  const CheckpointMsg ma{4, 2, {2, 4, a, CertKind::commit, {}}};
  const CheckpointMsg mb{4, 2, {2, 4, b, CertKind::commit, {}}};
  EXPECT_FALSE(t.on_contribution(0, ma));
  EXPECT_FALSE(t.on_contribution(1, mb));
  EXPECT_FALSE(t.on_contribution(0, ma));
  const auto got = t.on_contribution(2, ma);
  ASSERT_EQ(t.threshold(), 3u);
  EXPECT_FALSE(got);
  const auto adopted = t.on_contribution(3, ma);
  ASSERT_TRUE(adopted);
  EXPECT_EQ(adopted->txn->digest(), a->digest());
  EXPECT_TRUE(t.adopted(2, 4));
  EXPECT_FALSE(t.on_contribution(5, ma));
}
