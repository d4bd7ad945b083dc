#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "rcc/messages.hpp"
#include "rcc/types.hpp"

namespace rcc {

// Per-round bookkeeping for the on-demand checkpoint. Failure claims are
// counted as distinct (sender, instance) pairs; once a round has enough
// claims the replica contributes commit certificates for every claimed
// instance, and adopts a certificate once enough replicas sent a matching one.
class CheckpointTracker {
 public:
  explicit CheckpointTracker(const SystemConfig& cfg);

  // Records a claim. Returns true exactly when this claim makes the round
  // reach the trigger threshold.
  bool on_claim(std::uint32_t sender, InstanceId instance, Round round);

  bool triggered(Round round) const { return triggered_.contains(round); }
  std::size_t claims(Round round) const;
  // Instances with at least one claim at `round`.
  std::vector<InstanceId> claimed_instances(Round round) const;
  bool claimed(InstanceId instance, Round round) const;

  // Returns true the first time (instance, round) is marked.
  bool mark_contributed(InstanceId instance, Round round);

  // `msg` must carry a verified commit certificate. Returns the certificate
  // once the threshold of matching senders is reached, exactly once.
  std::optional<Certificate> on_contribution(ReplicaId sender, const CheckpointMsg& msg);
  bool adopted(InstanceId instance, Round round) const { return adopted_.contains({instance, round}); }

  // Drops state for rounds below `round`.
  void prune_below(Round round);

  std::uint32_t threshold() const { return threshold_; }

 private:
  std::uint32_t threshold_;
  std::map<Round, std::set<std::pair<std::uint32_t, InstanceId>>> claims_;
  std::set<Round> triggered_;
  std::set<std::pair<InstanceId, Round>> contributed_;
  std::map<std::pair<InstanceId, Round>, std::map<Digest, std::set<ReplicaId>>> votes_;
  std::set<std::pair<InstanceId, Round>> adopted_;
};

}  // namespace rcc
