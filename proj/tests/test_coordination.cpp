#include <gtest/gtest.h>

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <random>

#include "rcc/coordination.hpp"

using namespace rcc;

namespace {

struct CoordCluster {
  SystemConfig cfg;
  KeyRing keys{5};
  std::vector<std::unique_ptr<CoordinationInstance>> nodes;
  std::deque<std::pair<ReplicaId, MessagePtr>> queue;
  std::vector<std::map<std::uint64_t, Digest>> decided;
  std::function<bool(ReplicaId, ReplicaId, const Envelope&)> drop;
  CoordinationInstance::Validator valid = [](const CoordOp&) { return std::nullopt; };
  std::mt19937_64* shuffle = nullptr;
  std::vector<std::string> rejected;

  explicit CoordCluster(std::uint32_t n, std::uint32_t f, ViewNum view) : decided(n) {
    cfg.n = n;
    cfg.f = f;
    cfg.m = n;
    for (ReplicaId r = 0; r < n; ++r) nodes.push_back(std::make_unique<CoordinationInstance>(cfg, 1, r, view, keys));
  }

  void absorb(ReplicaId r, CoordOutput out) {
    while (true) {
      for (auto& b : out.broadcasts) {
        const auto m = make_message(keys.signer_for(r), b);
        for (ReplicaId to = 0; to < cfg.n; ++to) {
          if (!drop || !drop(r, to, *m)) queue.emplace_back(to, m);
        }
      }
      for (auto& why : out.rejected) rejected.push_back(why);
      if (!out.decided) return;
      const auto [seq, op] = *out.decided;
      const Digest d = op_digest(*op);
      const auto [it, fresh] = decided[r].emplace(seq, d);
      EXPECT_TRUE(fresh);
      out = nodes[r]->advance(valid);
    }
  }

  void run(std::size_t limit = 100000) {
    while (!queue.empty() && limit-- > 0) {
      std::size_t pick = shuffle ? (*shuffle)() % queue.size() : 0;
      auto [to, m] = queue[pick];
      queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(pick));
      absorb(to, nodes[to]->deliver(m, valid));
    }
  }

  CoordOpPtr switch_op(ClientId c, InstanceId target, std::uint64_t nonce) const {
    const auto req = make_message(keys.signer_for(client_node(c)), SwitchInstance{c, target, nonce});
    return std::make_shared<const CoordOp>(SwitchOp{1, req});
  }

  void change_view(const std::vector<ReplicaId>& who) {
    for (auto r : who) absorb(r, nodes[r]->start_view_change());
  }
};

}  // namespace

TEST(Coordination, LeaderIsViewModN) {
  CoordCluster c(4, 1, 1);
  for (ViewNum v = 0; v < 12; ++v) EXPECT_EQ(c.nodes[0]->leader_of(v), v % 4);
  EXPECT_TRUE(c.nodes[1]->is_leader());
  EXPECT_FALSE(c.nodes[0]->is_leader());
}

TEST(Coordination, DecidesInOrder) {
  CoordCluster c(4, 1, 1);
  const auto a = c.switch_op(0, 2, 1);
  const auto b = c.switch_op(1, 3, 1);
  c.absorb(1, c.nodes[1]->propose(a));
  EXPECT_TRUE(c.nodes[1]->propose(b).broadcasts.empty());  // one in flight
  c.run();
  c.absorb(1, c.nodes[1]->propose(b));
  c.run();
  for (ReplicaId r = 0; r < 4; ++r) {
    ASSERT_EQ(c.decided[r].size(), 2u);
    EXPECT_EQ(c.decided[r].at(0), op_digest(*a));
    EXPECT_EQ(c.decided[r].at(1), op_digest(*b));
  }
}

TEST(Coordination, NonLeaderProposalIgnored) {
  CoordCluster c(4, 1, 1);
  EXPECT_TRUE(c.nodes[2]->propose(c.switch_op(0, 2, 1)).broadcasts.empty());
  const auto forged = make_message(c.keys.signer_for(2), CoordPropose{1, 1, 0, c.switch_op(0, 2, 1)});
  c.queue.emplace_back(0, forged);
  c.run();
  EXPECT_TRUE(c.decided[0].empty());
}

TEST(Coordination, InvalidOperationRejected) {
  CoordCluster c(4, 1, 1);
  c.valid = [](const CoordOp&) -> std::optional<std::string> { return "bad"; };
  c.absorb(1, c.nodes[1]->propose(c.switch_op(0, 2, 1)));
  c.run();
  for (ReplicaId r = 0; r < 4; ++r) EXPECT_TRUE(c.decided[r].empty());
  EXPECT_FALSE(c.rejected.empty());
}

TEST(Coordination, ViewChangeReplacesSilentLeader) {
  CoordCluster c(4, 1, 1);
  c.drop = [](ReplicaId from, ReplicaId, const Envelope&) { return from == 1; };
  c.change_view({0, 2, 3});
  c.run();
  for (ReplicaId r : {0u, 2u, 3u}) {
    EXPECT_EQ(c.nodes[r]->view(), 2u);
    EXPECT_FALSE(c.nodes[r]->changing_view());
  }
  EXPECT_TRUE(c.nodes[2]->is_leader());
  const auto op = c.switch_op(4, 1, 2);
  c.absorb(2, c.nodes[2]->propose(op));
  c.run();
  for (ReplicaId r : {0u, 2u, 3u}) EXPECT_EQ(c.decided[r].at(0), op_digest(*op));
}

TEST(Coordination, PreparedOperationSurvivesViewChange) {
  CoordCluster c(4, 1, 1);
  bool block_commits = true;
  c.drop = [&](ReplicaId from, ReplicaId, const Envelope& m) {
    return (block_commits && m.as<CoordCommit>()) || (!block_commits && from == 1);
  };
  const auto op = c.switch_op(0, 3, 1);
  c.absorb(1, c.nodes[1]->propose(op));
  c.run();
  for (ReplicaId r = 0; r < 4; ++r) EXPECT_TRUE(c.decided[r].empty());

  block_commits = false;
  c.change_view({0, 2, 3});
  c.run();
  // The new leader re-proposes the prepared operation by itself.
  for (ReplicaId r : {0u, 2u, 3u}) {
    ASSERT_EQ(c.decided[r].size(), 1u) << r;
    EXPECT_EQ(c.decided[r].at(0), op_digest(*op));
  }
}

// Random loss, reordering and view changes: replicas never decide different
// operations for the same sequence number.
TEST(Coordination, AgreementUnderRandomSchedules) {
  std::mt19937_64 rng(31);
  int decisions = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const bool big = trial % 3 == 0;
    CoordCluster c(big ? 7 : 4, big ? 2 : 1, 1);
    c.shuffle = &rng;
    const double loss = static_cast<double>(rng() % 25) / 100.0;
    c.drop = [&](ReplicaId, ReplicaId, const Envelope&) {
      return std::uniform_real_distribution<double>(0, 1)(rng) < loss;
    };
    for (int step = 0; step < 6; ++step) {
      for (ReplicaId r = 0; r < c.cfg.n; ++r) {
        if (c.nodes[r]->is_leader()) {
          c.absorb(r, c.nodes[r]->propose(c.switch_op(static_cast<ClientId>(rng() % 5), 1 + rng() % 3, rng())));
        }
      }
      c.run(static_cast<std::size_t>(rng() % 400));
      if (rng() % 2) {
        std::vector<ReplicaId> who;
        for (ReplicaId r = 0; r < c.cfg.n; ++r) {
          if (rng() % 3) who.push_back(r);
        }
        c.change_view(who);
      }
    }
    c.run();
    std::map<std::uint64_t, Digest> agreed;
    for (ReplicaId r = 0; r < c.cfg.n; ++r) {
      for (const auto& [seq, d] : c.decided[r]) {
        ++decisions;
        const auto [it, fresh] = agreed.emplace(seq, d);
        ASSERT_EQ(it->second, d) << "trial " << trial << " seq " << seq;
      }
    }
  }
  EXPECT_GT(decisions, 0);
}

TEST(Coordination, LaggingReplicaCatchesUpFromDecision) {
  CoordCluster c(4, 1, 1);
  c.drop = [](ReplicaId, ReplicaId to, const Envelope& m) { return to == 3 && m.as<CoordCommit>(); };
  const auto op = c.switch_op(0, 2, 1);
  c.absorb(1, c.nodes[1]->propose(op));
  c.run();
  EXPECT_TRUE(c.decided[3].empty());
  ASSERT_EQ(c.decided[0].size(), 1u);

  // The lagging replica asks for a view change; peers answer with the decision.
  const auto vc = make_message(c.keys.signer_for(3), ViewChange{1, 2, 0, std::nullopt});
  const auto out = c.nodes[0]->deliver(vc, c.valid);
  ASSERT_EQ(out.direct.size(), 1u);
  EXPECT_EQ(out.direct[0].first, 3u);
  c.absorb(3, c.nodes[3]->deliver(make_message(c.keys.signer_for(0), out.direct[0].second), c.valid));
  ASSERT_EQ(c.decided[3].size(), 1u);
  EXPECT_EQ(c.decided[3].at(0), op_digest(*op));
  EXPECT_EQ(c.nodes[3]->next_seq(), 1u);
}

TEST(Coordination, DecisionNeedsCommitQuorum) {
  CoordCluster c(4, 1, 1);
  const auto op = c.switch_op(0, 2, 1);
  const Digest d = op_digest(*op);
  auto commit = [&](ReplicaId r, std::uint64_t seq, const Digest& dg) {
    return make_message(c.keys.signer_for(r), CoordCommit{1, 1, seq, dg});
  };
  auto try_decide = [&](std::vector<MessagePtr> commits) {
    const auto m = make_message(c.keys.signer_for(0), CoordDecision{1, 0, op, std::move(commits)});
    return c.nodes[3]->deliver(m, c.valid).decided.has_value();
  };
  EXPECT_FALSE(try_decide({commit(0, 0, d), commit(1, 0, d)}));
  EXPECT_FALSE(try_decide({commit(0, 0, d), commit(1, 0, d), commit(1, 0, d)}));
  EXPECT_FALSE(try_decide({commit(0, 0, d), commit(1, 0, d), commit(2, 0, sha256("x"))}));
  EXPECT_FALSE(try_decide({commit(0, 0, d), commit(1, 0, d), commit(2, 1, d)}));
  // A commit whose body was altered after signing fails authentication.
  auto forged = std::make_shared<const Envelope>(2, Body{CoordCommit{1, 1, 0, d}}, commit(2, 0, sha256("y"))->tag());
  EXPECT_FALSE(try_decide({commit(0, 0, d), commit(1, 0, d), forged}));
  EXPECT_EQ(c.nodes[3]->next_seq(), 0u);
  EXPECT_TRUE(try_decide({commit(0, 0, d), commit(1, 0, d), commit(2, 0, d)}));
  EXPECT_EQ(c.nodes[3]->next_seq(), 1u);
}
