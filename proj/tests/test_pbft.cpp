#include <gtest/gtest.h>

#include <map>
#include <random>

#include "pbft_cluster.hpp"

using namespace rcc;
using rcc::testing::Cluster;

namespace {

SystemConfig config(std::uint32_t n, std::uint32_t f) {
  SystemConfig c;
  c.n = n;
  c.f = f;
  c.m = n;
  return c;
}

}  // namespace

TEST(Pbft, HonestPrimaryAllAccept) {
  Cluster c(config(4, 1), 2);
  for (Round r = 0; r < 5; ++r) c.propose(r, c.txn(0, static_cast<std::uint64_t>(r)));
  c.run();
  for (ReplicaId r = 0; r < 4; ++r) {
    ASSERT_EQ(c.accepted[r].size(), 5u);
    EXPECT_EQ(c.nodes[r]->last_contiguous(), 4);
    for (Round k = 0; k < 5; ++k) {
      EXPECT_EQ(c.nodes[r]->phase(k), PbftInstance::Phase::accepted);
      const auto cert = c.nodes[r]->commit_certificate(k);
      ASSERT_TRUE(cert);
      EXPECT_TRUE(verify_certificate(*cert, 3, 4, c.keys));
    }
  }
}

TEST(Pbft, AcceptsWithFSilentBackups) {
  Cluster c(config(7, 2), 1, {5, 6});
  c.propose(0, c.txn(0, 1));
  c.run();
  for (ReplicaId r = 0; r < 5; ++r) EXPECT_TRUE(c.nodes[r]->is_accepted(0));
}

TEST(Pbft, StallsWithoutQuorum) {
  Cluster c(config(4, 1), 1, {2, 3});
  c.propose(0, c.txn(0, 1));
  c.run();
  EXPECT_FALSE(c.nodes[0]->is_accepted(0));
  EXPECT_EQ(c.nodes[1]->phase(0), PbftInstance::Phase::preprepared);
}

TEST(Pbft, RejectsProposalsFromNonPrimary) {
  Cluster c(config(4, 1), 1);
  const auto m = make_message(c.keys.signer_for(2), PrePrepare{1, 0, c.txn(0, 1)});
  const auto out = c.nodes[1]->deliver(*m);
  EXPECT_TRUE(out.broadcasts.empty());
  ASSERT_EQ(out.suspicions.size(), 1u);
  EXPECT_EQ(c.nodes[1]->phase(0), PbftInstance::Phase::empty);
}

TEST(Pbft, FirstProposalWins) {
  Cluster c(config(4, 1), 1);
  const auto a = make_message(c.keys.signer_for(0), PrePrepare{1, 0, c.txn(0, 1)});
  const auto b = make_message(c.keys.signer_for(0), PrePrepare{1, 0, c.txn(0, 2)});
  c.nodes[1]->deliver(*a);
  const auto out = c.nodes[1]->deliver(*b);
  EXPECT_EQ(out.suspicions.size(), 1u);
  EXPECT_TRUE(out.broadcasts.empty());
}

TEST(Pbft, ConflictingVotesCountOnce) {
  Cluster c(config(4, 1), 1);
  const auto t = c.txn(0, 1);
  c.nodes[1]->deliver(*make_message(c.keys.signer_for(0), PrePrepare{1, 0, t}));
  c.nodes[1]->deliver(*make_message(c.keys.signer_for(3), Prepare{1, 0, t->digest()}));
  const auto out = c.nodes[1]->deliver(*make_message(c.keys.signer_for(3), Prepare{1, 0, sha256("x")}));
  EXPECT_EQ(out.suspicions.size(), 1u);
  EXPECT_EQ(c.nodes[1]->phase(0), PbftInstance::Phase::preprepared);
}

TEST(Pbft, FarFutureRoundsIgnored) {
  SystemConfig cfg = config(4, 1);
  cfg.window = 2;
  Cluster c(cfg, 1);
  const auto m = make_message(c.keys.signer_for(0), PrePrepare{1, 1000, c.txn(0, 1)});
  c.nodes[1]->deliver(*m);
  EXPECT_EQ(c.nodes[1]->phase(1000), PbftInstance::Phase::empty);
}

TEST(Pbft, TimeoutReportsUnacceptedRound) {
  Cluster c(config(4, 1), 1);
  auto& node = *c.nodes[2];
  const auto gen = node.expect(3);
  ASSERT_TRUE(gen);
  EXPECT_FALSE(node.expect(5));  // already watching an earlier round
  EXPECT_FALSE(node.on_timeout(3, *gen + 1));
  const auto d = node.on_timeout(3, *gen);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->instance, 1u);
  EXPECT_EQ(d->round, 3);
  EXPECT_FALSE(node.on_timeout(3, *gen));
}

TEST(Pbft, TimeoutDoublesPerStopUpToCap) {
  SystemConfig cfg = config(4, 1);
  cfg.base_timeout = 10;
  cfg.max_timeout_doublings = 3;
  PbftInstance p(cfg, 1, 0);
  EXPECT_EQ(p.timeout(), 10);
  const std::map<Round, Certificate> none;
  const SimTime want[] = {10, 20, 40, 80, 80, 80};
  for (std::uint32_t s = 1; s <= 5; ++s) {
    p.restart(p.next_valid_round() + 1, none, s);
    EXPECT_EQ(p.timeout(), want[s]);
  }
}

TEST(Pbft, RecoverableStateCoversAcceptedRounds) {
  Cluster c(config(4, 1), 1);
  for (Round r = 0; r < 3; ++r) c.propose(r, c.txn(0, static_cast<std::uint64_t>(r)));
  c.run();
  const auto state = c.nodes[1]->recoverable_state();
  ASSERT_EQ(state.size(), 3u);
  for (const auto& cert : state) EXPECT_TRUE(verify_certificate(cert, 3, 4, c.keys));
}

TEST(Pbft, RestartAppliesRecoveredRoundsAndClosesGap) {
  Cluster c(config(4, 1), 1);
  c.propose(0, c.txn(0, 0));
  c.run();
  std::map<Round, Certificate> recovered;
  for (const auto& cert : c.nodes[1]->recoverable_state()) recovered[cert.round] = cert;

  PbftInstance fresh(c.cfg, 1, 3);
  fresh.halt();
  const auto out = fresh.restart(2, recovered, 1);
  ASSERT_EQ(out.accepted.size(), 1u);
  EXPECT_EQ(out.accepted[0].round, 0);
  EXPECT_EQ(out.accepted[0].txn->digest(), recovered.at(0).txn->digest());
  EXPECT_EQ(fresh.next_valid_round(), 2);
  EXPECT_EQ(fresh.last_contiguous(), 1);
  EXPECT_FALSE(fresh.halted());
  EXPECT_EQ(fresh.stop_count(), 1u);
  // Rounds below the restart point are closed.
  EXPECT_TRUE(fresh.propose(1, c.txn(0, 9)).broadcasts.empty());
}

TEST(Pbft, RestartThatDropsAcceptedRoundIsViolation) {
  Cluster c(config(4, 1), 1);
  c.propose(0, c.txn(0, 0));
  c.run();
  EXPECT_THROW(c.nodes[1]->restart(2, {}, 1), ProtocolViolation);
}

// Byzantine primary sends two proposals for the same round to random halves
// and votes for both; messages are reordered and dropped at random. No two
// honest replicas may accept different values.
TEST(Pbft, EquivocationNeverSplitsHonestReplicas) {
  std::mt19937_64 rng(2024);
  int any_accept = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const bool big = trial % 2 == 1;
    const SystemConfig cfg = big ? config(7, 2) : config(4, 1);
    std::set<ReplicaId> bad{0};
    if (big && rng() % 2) bad.insert(1 + static_cast<ReplicaId>(rng() % 6));
    Cluster c(cfg, 1, bad);
    c.shuffle = &rng;
    const double loss = static_cast<double>(rng() % 30) / 100.0;
    c.drop = [&](ReplicaId, ReplicaId, const Envelope&) {
      return std::uniform_real_distribution<double>(0, 1)(rng) < loss;
    };
    const TxnPtr alt[2] = {c.txn(0, 1), c.txn(1, 1)};
    for (ReplicaId to = 0; to < cfg.n; ++to) {
      const auto& t = alt[rng() % 2];
      c.send(to, make_message(c.keys.signer_for(0), PrePrepare{1, 0, t}));
    }
    for (ReplicaId b : bad) {
      for (ReplicaId to = 0; to < cfg.n; ++to) {
        for (const auto& t : alt) {
          if (rng() % 2) c.send(to, make_message(c.keys.signer_for(b), Prepare{1, 0, t->digest()}));
          if (rng() % 2) c.send(to, make_message(c.keys.signer_for(b), Commit{1, 0, t->digest()}));
        }
      }
    }
    c.run();
    std::optional<Digest> agreed;
    for (ReplicaId r = 0; r < cfg.n; ++r) {
      if (!c.honest(r)) continue;
      if (const auto d = c.nodes[r]->accepted_digest(0)) {
        ++any_accept;
        if (agreed) ASSERT_EQ(*agreed, *d) << "trial " << trial;
        agreed = d;
      }
    }
  }
  EXPECT_GT(any_accept, 0);
}
