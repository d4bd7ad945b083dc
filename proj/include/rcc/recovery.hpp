#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcc/messages.hpp"
#include "rcc/types.hpp"

namespace rcc {

// Failure messages received for one worker instance. Only messages whose
// round is at or after the instance's last restart count.
class FailureTracker {
 public:
  // Records the message, keeping the highest-round one per sender. Returns
  // the number of distinct fresh senders afterwards.
  std::size_t record(const MessagePtr& msg);
  void restart(Round restart_round);
  // Forgets claims for rounds up to `round` (resolved by a checkpoint).
  void drop_through(Round round);

  std::size_t distinct() const { return latest_.size(); }
  bool has(ReplicaId sender) const { return latest_.contains(sender); }
  Round restart_round() const { return restart_; }
  // Up to `count` messages carrying state, lowest sender ids first.
  std::vector<MessagePtr> evidence(std::size_t count) const;

 private:
  Round restart_ = 0;
  std::map<ReplicaId, MessagePtr> latest_;
};

// Returns an empty optional when the stop operation is acceptable for an
// instance whose last restart was at `restart_round`, otherwise the reason.
std::optional<std::string> validate_stop(const StopOp& op, Round restart_round, const SystemConfig& cfg,
                                         const KeyRing& keys);

struct RecoveredState {
  // Highest round with a certificate in the evidence, or restart - 1.
  Round last_round = kNoRound;
  Round next_valid = 0;
  std::map<Round, Certificate> certs;
};

// `stop_count` counts accepted stops for the instance including this one.
RecoveredState recover_state(const StopOp& op, Round restart_round, std::uint32_t stop_count);

// last_round + 2^stop_count.
Round restart_round_after(Round last_round, std::uint32_t stop_count);

}  // namespace rcc
