#include "rcc/coordinator.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "rcc/ordering.hpp"

namespace rcc {

std::vector<ExecutionEntry> order_round(std::vector<ExecutionEntry> by_instance, OrderingPolicy policy) {
  if (policy == OrderingPolicy::by_instance || by_instance.size() <= 1) return by_instance;
  std::vector<Digest> digests;
  digests.reserve(by_instance.size());
  for (const auto& e : by_instance) digests.push_back(e.txn->digest());
  std::vector<ExecutionEntry> out;
  out.reserve(by_instance.size());
  for (auto pos : ordering::hash_permuted_order(digests)) out.push_back(by_instance[pos]);
  return out;
}

std::vector<InstanceId> check_lag(std::span<const Round> last_accepted, const std::vector<bool>& eligible,
                                  Round sigma) {
  std::vector<InstanceId> lagging;
  std::optional<Round> best;
  for (std::size_t i = 0; i < last_accepted.size() && i < eligible.size(); ++i) {
    if (eligible[i] && (!best || last_accepted[i] > *best)) best = last_accepted[i];
  }
  if (!best) return lagging;
  for (std::size_t i = 0; i < last_accepted.size(); ++i) {
    if (i < eligible.size() && eligible[i] && *best - last_accepted[i] > sigma) {
      lagging.push_back(static_cast<InstanceId>(i + 1));
    }
  }
  return lagging;
}

ExecutionCoordinator::ExecutionCoordinator(std::uint32_t m, OrderingPolicy policy)
    : m_(m), policy_(policy), absent_(m) {}

void ExecutionCoordinator::on_accepted(Round round, InstanceId instance, TxnPtr txn) {
  if (round < next_ || instance < 1 || instance > m_) return;
  auto& slot = pending_[round];
  const auto [it, inserted] = slot.emplace(instance, txn);
  if (!inserted && it->second->digest() != txn->digest()) {
    throw ProtocolViolation("two proposals accepted for instance " + std::to_string(instance) + " round " +
                            std::to_string(round));
  }
}

void ExecutionCoordinator::mark_absent(InstanceId instance, Round from, Round to) {
  if (instance < 1 || instance > m_) return;
  from = std::max(from, next_);
  if (from >= to) return;
  auto& ranges = absent_[instance - 1];
  // Merge with overlapping or adjacent ranges.
  auto it = ranges.upper_bound(from);
  if (it != ranges.begin()) {
    auto prev = std::prev(it);
    if (prev->second >= from) {
      from = prev->first;
      to = std::max(to, prev->second);
      it = ranges.erase(prev);
    }
  }
  while (it != ranges.end() && it->first <= to) {
    to = std::max(to, it->second);
    it = ranges.erase(it);
  }
  ranges.emplace(from, to);
}

bool ExecutionCoordinator::absent(InstanceId instance, Round round) const {
  const auto& ranges = absent_[instance - 1];
  auto it = ranges.upper_bound(round);
  if (it == ranges.begin()) return false;
  --it;
  return round >= it->first && round < it->second;
}

bool ExecutionCoordinator::resolved(InstanceId instance, Round round) const {
  if (round < next_) return true;
  const auto it = pending_.find(round);
  if (it != pending_.end() && it->second.contains(instance)) return true;
  return absent(instance, round);
}

std::vector<ReadyRound> ExecutionCoordinator::take_ready() {
  std::vector<ReadyRound> ready;
  while (true) {
    bool complete = true;
    for (InstanceId i = 1; i <= m_ && complete; ++i) complete = resolved(i, next_);
    if (!complete) break;
    if (const Round skip = all_absent_until(next_); skip > next_) {
      next_ = skip;
      prune_absent();
      continue;
    }
    ReadyRound r;
    r.round = next_;
    if (auto it = pending_.find(next_); it != pending_.end()) {
      std::vector<ExecutionEntry> by_instance;
      for (const auto& [instance, txn] : it->second) by_instance.push_back({instance, txn});
      r.ordered = order_round(std::move(by_instance), policy_);
      pending_.erase(it);
    }
    ready.push_back(std::move(r));
    ++next_;
    prune_absent();
  }
  return ready;
}

Round ExecutionCoordinator::all_absent_until(Round round) const {
  Round until = std::numeric_limits<Round>::max();
  for (const auto& ranges : absent_) {
    auto it = ranges.upper_bound(round);
    if (it == ranges.begin()) return round;
    --it;
    if (round < it->first || round >= it->second) return round;
    until = std::min(until, it->second);
  }
  if (!pending_.empty()) until = std::min(until, std::max(round, pending_.begin()->first));
  return until;
}

void ExecutionCoordinator::prune_absent() {
  for (auto& ranges : absent_) {
    while (!ranges.empty() && ranges.begin()->second <= next_) ranges.erase(ranges.begin());
  }
}

}  // namespace rcc
