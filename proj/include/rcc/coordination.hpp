#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rcc/messages.hpp"
#include "rcc/types.hpp"

namespace rcc {

struct CoordOutput {
  std::vector<Body> broadcasts;
  std::vector<std::pair<ReplicaId, Body>> direct;
  // At most one decision per call; the owner applies it and then calls
  // advance() so the next sequence number is validated against new state.
  std::optional<std::pair<std::uint64_t, CoordOpPtr>> decided;
  std::optional<ViewNum> entered_view;
  std::vector<std::string> rejected;

  void append(CoordOutput&& other);
};

// Sequenced agreement on stop and switch operations for one worker instance,
// with its own view number and leader. Leader of view v is replica v mod n.
class CoordinationInstance {
 public:
  // Returns the rejection reason, or nothing if the operation is acceptable.
  using Validator = std::function<std::optional<std::string>(const CoordOp&)>;

  CoordinationInstance(const SystemConfig& cfg, InstanceId instance, ReplicaId self, ViewNum initial_view,
                       const KeyRing& keys);

  InstanceId instance() const { return instance_; }
  ViewNum view() const { return view_; }
  ReplicaId leader_of(ViewNum v) const { return static_cast<ReplicaId>(v % n_); }
  ReplicaId leader() const { return leader_of(view_); }
  bool is_leader() const { return !changing_ && leader() == self_; }
  bool changing_view() const { return changing_; }
  std::uint64_t next_seq() const { return next_seq_; }
  // The current view already has a proposal for the next sequence number.
  bool proposal_in_flight() const;
  std::uint32_t view_changes() const { return view_changes_; }

  CoordOutput propose(CoordOpPtr op);
  CoordOutput deliver(const MessagePtr& msg, const Validator& valid);
  // Re-examines the next sequence number after a decision was applied.
  CoordOutput advance(const Validator& valid);
  // The owner suspects the leader.
  CoordOutput start_view_change();
  // Decisions from `seq` on, with their commit quorums, for a lagging peer.
  std::vector<Body> decisions_from(std::uint64_t seq) const;

 private:
  struct Slot {
    CoordOpPtr proposed;  // received, not yet validated
    CoordOpPtr op;        // validated
    bool rejected = false;
    std::map<Digest, std::map<ReplicaId, AuthTag>> prepares;
    std::map<Digest, std::map<ReplicaId, MessagePtr>> commits;
    bool sent_commit = false;
  };

  CoordOutput on_propose(ReplicaId sender, const CoordPropose& m, const Validator& valid);
  CoordOutput on_view_change(const MessagePtr& msg, const ViewChange& m);
  CoordOutput on_new_view(ReplicaId sender, const NewView& m, const Validator& valid);
  void pump(ViewNum view, std::uint64_t seq, const Validator& valid, CoordOutput& out);
  bool valid_proof(const PreparedProof& p) const;
  CoordOutput enter_view(ViewNum v, const std::vector<MessagePtr>& view_changes, const Validator& valid);
  CoordOutput begin_change(ViewNum target);
  CoordOutput on_decision(const CoordDecision& m);
  std::optional<ViewNum> verify_decision(const CoordDecision& m) const;
  void replay_future(const Validator& valid, CoordOutput& out);

  std::uint32_t n_;
  std::uint32_t f_;
  std::uint32_t nf_;
  InstanceId instance_;
  ReplicaId self_;
  const KeyRing* keys_;

  ViewNum view_;
  bool changing_ = false;
  ViewNum target_;
  std::uint32_t view_changes_ = 0;
  std::uint64_t next_seq_ = 0;
  std::map<std::pair<ViewNum, std::uint64_t>, Slot> slots_;
  std::optional<PreparedProof> proof_;
  // Set by a new view whose evidence carries a prepared operation.
  std::optional<Digest> required_op_;
  // Per target view: latest ViewChange per sender.
  std::map<ViewNum, std::map<ReplicaId, MessagePtr>> view_change_msgs_;
  std::set<ViewNum> new_view_sent_;
  std::optional<std::pair<ViewNum, std::uint64_t>> last_proposed_;
  std::vector<MessagePtr> future_;
  std::map<std::uint64_t, CoordDecision> decisions_;
  std::map<std::uint64_t, CoordDecision> early_decisions_;
};

}  // namespace rcc
