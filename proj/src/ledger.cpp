#include "rcc/ledger.hpp"

#include <type_traits>

namespace rcc {

std::string KvState::apply(const Command& c) {
  if (const auto* p = std::get_if<Put>(&c)) {
    kv_[p->key] = p->value;
    return "ok";
  }
  if (const auto* g = std::get_if<Get>(&c)) {
    const auto it = kv_.find(g->key);
    return it == kv_.end() ? "nil" : "=" + it->second;
  }
  if (const auto* t = std::get_if<Transfer>(&c)) {
    auto& from = balances_[t->from];
    if (from <= t->threshold) return "skipped";
    std::string result = "applied";
    if (t->amount > from) {
      ++clamped_;
      from = 0;
      result = "clamped";
    } else {
      from -= t->amount;
    }
    balances_[t->to] += t->amount;
    return result;
  }
  return "noop";
}

std::uint64_t KvState::balance(const std::string& account) const {
  const auto it = balances_.find(account);
  return it == balances_.end() ? 0 : it->second;
}

std::optional<std::string> KvState::value(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return std::nullopt;
  return it->second;
}

Digest KvState::digest() const {
  ByteWriter w;
  w.str("state").u32(static_cast<std::uint32_t>(kv_.size()));
  for (const auto& [k, v] : kv_) w.str(k).str(v);
  w.u32(static_cast<std::uint32_t>(balances_.size()));
  for (const auto& [a, b] : balances_) w.str(a).u64(b);
  return w.finish();
}

namespace {

Digest results_digest(const std::vector<std::string>& results) {
  ByteWriter w;
  w.str("results").u32(static_cast<std::uint32_t>(results.size()));
  for (const auto& r : results) w.str(r);
  return w.finish();
}

}  // namespace

Digest block_body_digest(const Block& b) {
  ByteWriter w;
  w.str("block").i64(b.round).u32(static_cast<std::uint32_t>(b.entries.size()));
  for (const auto& e : b.entries) {
    w.u32(e.instance).digest(e.txn ? e.txn->digest() : Digest{}).u8(e.duplicate ? 1 : 0).digest(e.result_digest);
  }
  return w.finish();
}

Digest chain_hash(const Digest& prev, const Block& b) {
  ByteWriter w;
  w.digest(prev).digest(block_body_digest(b));
  return w.finish();
}

Ledger::Ledger(KvState genesis) : genesis_(genesis), state_(std::move(genesis)) {}

const Block& Ledger::execute_round(Round round, const std::vector<ExecutionEntry>& ordered) {
  if (!blocks_.empty() && round <= blocks_.back().round) {
    throw ProtocolViolation("round " + std::to_string(round) + " executed out of order");
  }
  Block b;
  b.round = round;
  b.prev_hash = head();
  for (const auto& [instance, txn] : ordered) {
    ExecutedTxn e;
    e.instance = instance;
    e.txn = txn;
    if (!txn->is_noop()) {
      const TxnKey key = key_of(*txn);
      if (replies_.contains(key)) {
        e.duplicate = true;
      } else {
        for (const auto& c : txn->commands()) e.results.push_back(state_.apply(c));
        ++executed_txns_;
        executed_commands_ += txn->commands().size();
      }
      e.result_digest = results_digest(e.results);
      if (!e.duplicate) replies_.emplace(key, e.result_digest);
    } else {
      e.results.push_back("noop");
      e.result_digest = results_digest(e.results);
    }
    b.entries.push_back(std::move(e));
  }
  b.block_hash = chain_hash(b.prev_hash, b);
  blocks_.push_back(std::move(b));
  return blocks_.back();
}

std::optional<Digest> Ledger::reply_for(const TxnKey& key) const {
  const auto it = replies_.find(key);
  if (it == replies_.end()) return std::nullopt;
  return it->second;
}

void Ledger::dump(std::ostream& out) const {
  for (const auto& b : blocks_) {
    const std::string hash = b.block_hash.hex();
    for (const auto& e : b.entries) {
      const auto& txn = *e.txn;
      auto record = [&](const std::string& cmd, const std::string& result) {
        out << "round=" << b.round << " instance=" << e.instance << " client=";
        if (txn.is_noop()) {
          out << "-";
        } else {
          out << txn.client() << " nonce=" << txn.nonce();
        }
        out << " cmd=" << cmd << " result=" << result << " block=" << hash << '\n';
      };
      if (txn.is_noop()) {
        record("noop", "noop");
      } else if (e.duplicate) {
        record("duplicate", "skipped");
      } else {
        for (std::size_t i = 0; i < txn.commands().size(); ++i) record(describe(txn.commands()[i]), e.results[i]);
      }
    }
  }
}

bool verify_chain(const std::vector<Block>& blocks) {
  Digest prev{};
  for (const auto& b : blocks) {
    if (b.prev_hash != prev || chain_hash(prev, b) != b.block_hash) return false;
    prev = b.block_hash;
  }
  return true;
}

KvState replay(const KvState& genesis, const std::vector<Block>& blocks) {
  KvState s = genesis;
  for (const auto& b : blocks) {
    for (const auto& e : b.entries) {
      if (e.duplicate || e.txn->is_noop()) continue;
      for (const auto& c : e.txn->commands()) s.apply(c);
    }
  }
  return s;
}

}  // namespace rcc
