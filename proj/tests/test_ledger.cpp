#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rcc/ledger.hpp"

using namespace rcc;

namespace {

struct Fixture {
  KeyRing ring{11};

  TxnPtr txn(ClientId c, std::uint64_t nonce, std::vector<Command> cmds) const {
    return std::make_shared<const Transaction>(
        Transaction::signed_by(ring.signer_for(client_node(c)), c, nonce, std::move(cmds)));
  }
};

KvState accounts() {
  KvState s;
  s.set_balance("Alice", 800);
  s.set_balance("Bob", 300);
  s.set_balance("Eve", 100);
  return s;
}

struct Balances {
  std::uint64_t alice, bob, eve;
};

Balances run_order(const std::vector<TxnPtr>& order) {
  Ledger l(accounts());
  std::vector<ExecutionEntry> round;
  InstanceId i = 1;
  for (const auto& t : order) round.push_back({i++, t});
  l.execute_round(0, round);
  return {l.state().balance("Alice"), l.state().balance("Bob"), l.state().balance("Eve")};
}

}  // namespace

TEST(Ledger, ConditionalTransfersDependOnOrder) {
  Fixture fx;
  const auto t1 = fx.txn(0, 1, {Transfer{"Alice", "Bob", 500, 200}});
  const auto t2 = fx.txn(1, 1, {Transfer{"Bob", "Eve", 400, 300}});

  const auto a = run_order({t1, t2});
  EXPECT_EQ(a.alice, 600u);
  EXPECT_EQ(a.bob, 200u);
  EXPECT_EQ(a.eve, 400u);

  const auto b = run_order({t2, t1});
  EXPECT_EQ(b.alice, 600u);
  EXPECT_EQ(b.bob, 500u);
  EXPECT_EQ(b.eve, 100u);
}

TEST(KvState, TransferThresholdIsStrict) {
  KvState s;
  s.set_balance("a", 10);
  EXPECT_EQ(s.apply(Transfer{"a", "b", 10, 5}), "skipped");
  EXPECT_EQ(s.apply(Transfer{"a", "b", 9, 5}), "applied");
  EXPECT_EQ(s.balance("a"), 5u);
  EXPECT_EQ(s.balance("b"), 5u);
}

TEST(KvState, OverdraftClampsWithdrawOnly) {
  KvState s;
  s.set_balance("a", 10);
  EXPECT_EQ(s.apply(Transfer{"a", "b", 0, 25}), "clamped");
  EXPECT_EQ(s.balance("a"), 0u);
  EXPECT_EQ(s.balance("b"), 25u);
  EXPECT_EQ(s.clamped_withdrawals(), 1u);
}

TEST(KvState, PutGet) {
  KvState s;
  EXPECT_EQ(s.apply(Get{"k"}), "nil");
  EXPECT_EQ(s.apply(Put{"k", "v"}), "ok");
  EXPECT_EQ(s.apply(Get{"k"}), "=v");
  EXPECT_EQ(s.value("k"), "v");
  EXPECT_EQ(s.apply(NoOpCommand{}), "noop");
}

TEST(KvState, RandomTransfersMatchReferenceModel) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    KvState s;
    std::map<std::string, std::uint64_t> ref;
    std::uint64_t ref_clamped = 0;
    for (int a = 0; a < 4; ++a) {
      const std::string name = "acct" + std::to_string(a);
      const auto v = rng() % 100;
      s.set_balance(name, v);
      ref[name] = v;
    }
    for (int step = 0; step < 200; ++step) {
      const std::string from = "acct" + std::to_string(rng() % 4);
      const std::string to = "acct" + std::to_string(rng() % 4);
      const std::uint64_t threshold = rng() % 60;
      const std::uint64_t amount = rng() % 80;
      s.apply(Transfer{from, to, threshold, amount});
      if (ref[from] > threshold) {
        const std::uint64_t taken = std::min(ref[from], amount);
        if (taken < amount) ++ref_clamped;
        ref[from] -= taken;
        ref[to] += amount;
      }
    }
    for (const auto& [name, v] : ref) ASSERT_EQ(s.balance(name), v);
    ASSERT_EQ(s.clamped_withdrawals(), ref_clamped);
  }
}

TEST(Ledger, NoOpsDoNotChangeState) {
  Fixture fx;
  const auto noop = std::make_shared<const Transaction>(Transaction::noop());
  const auto t = fx.txn(0, 1, {Transfer{"Alice", "Bob", 0, 50}});

  Ledger plain(accounts());
  plain.execute_round(0, {{1, t}});
  Ledger padded(accounts());
  padded.execute_round(0, {{1, noop}, {2, t}, {3, noop}});
  padded.execute_round(1, {{1, noop}, {2, noop}});
  EXPECT_EQ(plain.state_digest(), padded.state_digest());
  EXPECT_EQ(padded.executed_txns(), 1u);
}

TEST(Ledger, DuplicatesExecuteOnce) {
  Fixture fx;
  const auto t = fx.txn(0, 1, {Transfer{"Alice", "Bob", 0, 50}});
  Ledger l(accounts());
  l.execute_round(0, {{1, t}});
  const auto& b = l.execute_round(1, {{2, t}});
  EXPECT_TRUE(b.entries.front().duplicate);
  EXPECT_EQ(l.state().balance("Alice"), 750u);
  EXPECT_EQ(l.executed_txns(), 1u);
  ASSERT_TRUE(l.reply_for({0, 1}));
}

TEST(Ledger, RoundsMustIncrease) {
  Fixture fx;
  Ledger l;
  l.execute_round(3, {{1, fx.txn(0, 1, {Get{"x"}})}});
  EXPECT_THROW(l.execute_round(3, {}), ProtocolViolation);
  EXPECT_THROW(l.execute_round(2, {}), ProtocolViolation);
  EXPECT_NO_THROW(l.execute_round(7, {}));
}

TEST(Ledger, ChainAndReplay) {
  Fixture fx;
  std::mt19937_64 rng(5);
  Ledger l(accounts());
  for (Round r = 0; r < 40; ++r) {
    std::vector<ExecutionEntry> round;
    for (InstanceId i = 1; i <= 3; ++i) {
      const auto c = static_cast<ClientId>(rng() % 3);
      const char* names[] = {"Alice", "Bob", "Eve"};
      round.push_back(
          {i, fx.txn(c, static_cast<std::uint64_t>(r * 3 + i), {Transfer{names[rng() % 3], names[rng() % 3], rng() % 300,
                                                                       1 + rng() % 100}})});
    }
    l.execute_round(r, round);
  }
  EXPECT_TRUE(verify_chain(l.blocks()));
  EXPECT_EQ(replay(accounts(), l.blocks()).digest(), l.state_digest());

  auto tampered = l.blocks();
  tampered[10].entries[1].duplicate = !tampered[10].entries[1].duplicate;
  EXPECT_FALSE(verify_chain(tampered));

  auto reordered = l.blocks();
  std::swap(reordered[5], reordered[6]);
  EXPECT_FALSE(verify_chain(reordered));

  std::ostringstream dump;
  l.dump(dump);
  EXPECT_NE(dump.str().find("round=0 instance=1"), std::string::npos);
}
