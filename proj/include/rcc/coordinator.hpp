#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "rcc/transaction.hpp"
#include "rcc/types.hpp"

namespace rcc {

struct ExecutionEntry {
  InstanceId instance = 0;
  TxnPtr txn;
};

struct ReadyRound {
  Round round = 0;
  std::vector<ExecutionEntry> ordered;
};

// Orders the accepted proposals of one round. `by_instance` must be sorted
// on increasing instance id.
std::vector<ExecutionEntry> order_round(std::vector<ExecutionEntry> by_instance, OrderingPolicy policy);

// Instances (1-based) whose contiguous progress trails the most advanced
// eligible instance by more than sigma rounds. Ineligible instances are
// neither reported nor used as the reference.
std::vector<InstanceId> check_lag(std::span<const Round> last_accepted, const std::vector<bool>& eligible,
                                  Round sigma);

// Buffers accepted proposals per round and releases rounds, in increasing
// order, once every instance has either contributed or been certified absent.
// Rounds that every instance certified absent are skipped without a record.
class ExecutionCoordinator {
 public:
  ExecutionCoordinator(std::uint32_t m, OrderingPolicy policy);

  // Throws ProtocolViolation if (round, instance) already holds a different
  // proposal.
  void on_accepted(Round round, InstanceId instance, TxnPtr txn);
  // Every round in [from, to) for which `instance` has no accepted proposal
  // is certified empty.
  void mark_absent(InstanceId instance, Round from, Round to);

  std::vector<ReadyRound> take_ready();

  Round next_round() const { return next_; }
  bool resolved(InstanceId instance, Round round) const;
  std::size_t buffered_rounds() const { return pending_.size(); }

 private:
  bool absent(InstanceId instance, Round round) const;
  // End of the run of rounds, starting at `round`, that every instance
  // certified empty; `round` itself when there is none.
  Round all_absent_until(Round round) const;
  void prune_absent();

  std::uint32_t m_;
  OrderingPolicy policy_;
  std::map<Round, std::map<InstanceId, TxnPtr>> pending_;
  // Per instance: disjoint [from, to) ranges, keyed by from.
  std::vector<std::map<Round, Round>> absent_;
  Round next_ = 0;
};

}  // namespace rcc
