#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rcc/checkpoint.hpp"
#include "rcc/client_manager.hpp"
#include "rcc/coordination.hpp"
#include "rcc/coordinator.hpp"
#include "rcc/ledger.hpp"
#include "rcc/pbft_instance.hpp"
#include "rcc/recovery.hpp"

namespace rcc {

enum class TimerKind : std::uint8_t {
  propose_tick,
  watch,
  failure_rebroadcast,
  leader_watch,
  switch_watch,
  forced_grace,
  checkpoint_retry,
};

struct TimerToken {
  TimerKind kind = TimerKind::propose_tick;
  InstanceId instance = 0;
  Round round = 0;
  std::uint64_t generation = 0;
  ClientId client = 0;
  std::uint64_t nonce = 0;
  SimTime armed_at = 0;
};

enum class AcceptVia { normal, recovered, checkpoint };
const char* to_string(AcceptVia v);

// Everything a replica needs from the outside world.
class ReplicaEnv {
 public:
  virtual ~ReplicaEnv() = default;
  virtual SimTime now() const = 0;
  // Delivered to every replica, the sender included.
  virtual void broadcast(ReplicaId from, const MessagePtr& msg) = 0;
  virtual void send(ReplicaId from, std::uint32_t to, const MessagePtr& msg) = 0;
  virtual void set_timer(ReplicaId owner, SimTime delay, const TimerToken& token) = 0;
  virtual void trace(ReplicaId from, const std::string& event) = 0;
  // Scripted global pause: no proposals and no execution.
  virtual bool paused() const { return false; }
  virtual void on_accept(ReplicaId, InstanceId, Round, AcceptVia) {}
  virtual void on_execute(ReplicaId, Round, const Block*) {}
  virtual void on_checkpoint_send(ReplicaId, Round) {}
};

// Misbehavior a scripted replica applies to its own decisions. Message-level
// attacks (equivocation, omission) are applied by the network layer.
struct Behavior {
  InstanceId throttle_instance = 0;
  std::uint32_t throttle_factor = 1;
  std::set<ClientId> censored;
  // As recovery leader, propose stop operations with too little evidence.
  bool bad_stop = false;
};

struct ReplicaStats {
  std::uint64_t rejected_messages = 0;
  std::uint64_t rejected_proposals = 0;
  std::uint64_t suspicions = 0;
  std::uint64_t detections = 0;
  std::uint64_t stops = 0;
  std::uint64_t view_changes = 0;
  std::uint64_t checkpoint_msgs = 0;
  std::uint64_t checkpoint_adoptions = 0;
  std::uint64_t noops_proposed = 0;
  std::uint64_t txns_proposed = 0;
};

class Replica {
 public:
  Replica(const SystemConfig& cfg, ReplicaId id, const KeyRing& keys, ReplicaEnv& env, KvState genesis,
          Behavior behavior = {});

  ReplicaId id() const { return id_; }
  // Arms the proposal timer if this replica is a primary.
  void start();
  void on_message(const MessagePtr& msg);
  void on_timer(const TimerToken& token);
  // The scripted global pause ended.
  void on_unpause();

  const Ledger& ledger() const { return ledger_; }
  const ExecutionCoordinator& coordinator() const { return coordinator_; }
  const ByzantineCommit& instance(InstanceId i) const { return *instances_[i - 1]; }
  const ClientManager& clients() const { return clients_; }
  const CheckpointTracker& checkpoints() const { return checkpoint_; }
  const ReplicaStats& stats() const { return stats_; }
  const Behavior& behavior() const { return behavior_; }
  const CoordinationInstance& coordination(InstanceId i) const { return coord_[i - 1]; }
  bool confirmed_failure(InstanceId i) const { return recovery_[i - 1].confirmed; }
  // Primary role: the instance this replica coordinates, or 0.
  InstanceId own_instance() const { return own_; }

 private:
  struct Recovery {
    bool detected = false;
    Round round = 0;
    bool confirmed = false;
    std::uint32_t rebroadcasts = 0;
    std::uint64_t generation = 0;
    bool caught_up = true;
  };
  struct PendingSwitch {
    MessagePtr request;
    InstanceId source = 0;
  };

  ByzantineCommit& inst(InstanceId i) { return *instances_[i - 1]; }
  void emit(const std::vector<Body>& bodies);
  void handle(InstanceId i, BcaOutput out, AcceptVia via);
  void handle_coord(InstanceId i, CoordOutput out);
  CoordinationInstance::Validator validator(InstanceId i);
  std::optional<std::string> validate_switch(InstanceId source, const SwitchOp& op) const;

  void on_worker(const MessagePtr& msg, InstanceId i);
  bool admissible(const PrePrepare& pp) const;
  void on_failure(const MessagePtr& msg);
  void on_checkpoint(const MessagePtr& msg);
  void on_client_request(const MessagePtr& msg);
  void on_switch_request(const MessagePtr& msg);

  void detect(InstanceId i, Round round, const char* reason);
  void send_failure(InstanceId i);
  void arm_leader_watch(InstanceId i);
  void maybe_lead(InstanceId i);
  void apply_decision(InstanceId i, std::uint64_t seq, const CoordOp& op);
  void apply_stop(InstanceId i, std::uint64_t seq, const StopOp& op);
  void apply_switch(InstanceId i, const SwitchOp& op);
  void activate_switch(ClientId c, InstanceId target);

  void contribute(Round round);
  void arm_watches();
  void check_lag();
  void try_execute();
  void try_propose();
  void enqueue(const TxnPtr& txn, bool urgent);
  Round observed_running_max() const;
  Round observed_other_max(bool with_restarts) const;

  SystemConfig cfg_;
  ReplicaId id_;
  const KeyRing& keys_;
  Signer signer_;
  ReplicaEnv& env_;
  Behavior behavior_;
  InstanceId own_;

  std::vector<std::unique_ptr<ByzantineCommit>> instances_;
  std::vector<CoordinationInstance> coord_;
  std::vector<FailureTracker> failures_;
  std::vector<Recovery> recovery_;
  // Per instance: restart round of each applied stop -> its sequence number.
  std::vector<std::map<Round, std::uint64_t>> stop_seqs_;
  std::vector<Round> observed_;  // highest round proposed per instance
  ExecutionCoordinator coordinator_;
  Ledger ledger_;
  CheckpointTracker checkpoint_;
  ClientManager clients_;
  std::map<Round, std::vector<MessagePtr>> my_contributions_;
  std::map<std::pair<ClientId, std::uint64_t>, PendingSwitch> pending_switches_;
  std::set<std::pair<TxnKey, InstanceId>> forced_;
  ReplicaStats stats_;

  // Primary state.
  std::deque<TxnPtr> queue_;
  std::set<TxnKey> known_;
  std::map<Round, TxnPtr> proposed_;
  Round next_round_ = 0;
};

}  // namespace rcc
