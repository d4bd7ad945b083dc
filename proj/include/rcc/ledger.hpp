#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rcc/coordinator.hpp"
#include "rcc/digest.hpp"
#include "rcc/transaction.hpp"

namespace rcc {

// Key-value store plus account balances.
class KvState {
 public:
  // Returns the textual result of the command.
  std::string apply(const Command& c);

  void set_balance(const std::string& account, std::uint64_t v) { balances_[account] = v; }
  std::uint64_t balance(const std::string& account) const;
  std::optional<std::string> value(const std::string& key) const;

  Digest digest() const;
  // Withdrawals that would have gone below zero and were clamped.
  std::uint64_t clamped_withdrawals() const { return clamped_; }

 private:
  std::map<std::string, std::string> kv_;
  std::map<std::string, std::uint64_t> balances_;
  std::uint64_t clamped_ = 0;
};

struct ExecutedTxn {
  InstanceId instance = 0;
  TxnPtr txn;
  // Same (client, nonce) already executed in an earlier position.
  bool duplicate = false;
  std::vector<std::string> results;
  Digest result_digest;
};

struct Block {
  Round round = 0;
  std::vector<ExecutedTxn> entries;
  Digest prev_hash;
  Digest block_hash;
};

Digest block_body_digest(const Block& b);
Digest chain_hash(const Digest& prev, const Block& b);

class Ledger {
 public:
  explicit Ledger(KvState genesis = {});

  // `ordered` is the final execution order of the round. Rounds must be
  // strictly increasing.
  const Block& execute_round(Round round, const std::vector<ExecutionEntry>& ordered);

  const std::vector<Block>& blocks() const { return blocks_; }
  const KvState& state() const { return state_; }
  Digest state_digest() const { return state_.digest(); }
  Digest head() const { return blocks_.empty() ? Digest{} : blocks_.back().block_hash; }
  Round last_round() const { return blocks_.empty() ? kNoRound : blocks_.back().round; }

  // Result digest of an executed client transaction, if any.
  std::optional<Digest> reply_for(const TxnKey& key) const;

  std::uint64_t executed_txns() const { return executed_txns_; }
  std::uint64_t executed_commands() const { return executed_commands_; }

  // Line-delimited: one record per command.
  void dump(std::ostream& out) const;

 private:
  KvState genesis_;
  KvState state_;
  std::vector<Block> blocks_;
  std::map<TxnKey, Digest> replies_;
  std::uint64_t executed_txns_ = 0;
  std::uint64_t executed_commands_ = 0;
};

// Checks prev-hash links and recomputes every block hash.
bool verify_chain(const std::vector<Block>& blocks);

// Re-executes every block from `genesis`; returns the resulting state.
KvState replay(const KvState& genesis, const std::vector<Block>& blocks);

}  // namespace rcc
