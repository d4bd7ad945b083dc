#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rcc/messages.hpp"
#include "rcc/types.hpp"

namespace rcc {

struct AcceptedProposal {
  InstanceId instance = 0;
  Round round = 0;
  TxnPtr txn;
};

struct Suspicion {
  InstanceId instance = 0;
  Round round = 0;
  std::uint32_t sender = 0;
  std::string reason;
};

struct FailureDetected {
  InstanceId instance = 0;
  Round round = 0;
};

// What a state-machine step asks its owner to do.
struct BcaOutput {
  std::vector<Body> broadcasts;
  std::vector<AcceptedProposal> accepted;
  std::vector<Suspicion> suspicions;

  void append(BcaOutput&& other);
};

// Seam between the coordinator and a concrete Byzantine commit algorithm.
// Implementations are pure state machines: no clocks, no I/O. Timers are
// requested through expect() and delivered back through on_timeout().
class ByzantineCommit {
 public:
  virtual ~ByzantineCommit() = default;

  virtual InstanceId instance() const = 0;

  virtual BcaOutput propose(Round round, TxnPtr txn) = 0;
  // `msg` must already be authenticated.
  virtual BcaOutput deliver(const Envelope& msg) = 0;

  // The owner learned that `round` should complete. Returns a timer
  // generation to arm, or nothing if no new timer is needed.
  virtual std::optional<std::uint64_t> expect(Round round) = 0;
  virtual std::optional<FailureDetected> on_timeout(Round round, std::uint64_t generation) = 0;
  virtual SimTime timeout() const = 0;

  // Certified proposals since the last restart (prepare or commit quorum).
  virtual CertificateList recoverable_state() const = 0;

  virtual void halt() = 0;
  // Lifts a halt without a restart (in-the-dark replica caught up by a
  // checkpoint). Re-emits votes that were withheld while halted.
  virtual BcaOutput resume() = 0;
  // Applies a recovered state: rounds below `next_valid` are closed, those in
  // `recovered` become accepted, the instance runs again from `next_valid`.
  virtual BcaOutput restart(Round next_valid, const std::map<Round, Certificate>& recovered,
                            std::uint32_t stop_count) = 0;
  // Commit certificate of an accepted round, if this replica holds one.
  virtual std::optional<Certificate> commit_certificate(Round round) const = 0;
  // Checkpoint adoption of a commit certificate.
  virtual BcaOutput adopt(const Certificate& commit_cert) = 0;

  virtual bool halted() const = 0;
  virtual bool is_accepted(Round round) const = 0;
  virtual Round next_valid_round() const = 0;
  // Highest round r such that every round in [restart, r] is accepted.
  virtual Round last_contiguous() const = 0;
  virtual Round last_accepted() const = 0;
  virtual bool accepted_since_restart() const = 0;
  virtual std::uint32_t stop_count() const = 0;
};

class PbftInstance final : public ByzantineCommit {
 public:
  enum class Phase { empty, preprepared, prepared, accepted };

  PbftInstance(const SystemConfig& cfg, InstanceId instance, ReplicaId self);

  InstanceId instance() const override { return instance_; }
  BcaOutput propose(Round round, TxnPtr txn) override;
  BcaOutput deliver(const Envelope& msg) override;
  std::optional<std::uint64_t> expect(Round round) override;
  std::optional<FailureDetected> on_timeout(Round round, std::uint64_t generation) override;
  SimTime timeout() const override;
  CertificateList recoverable_state() const override;
  void halt() override;
  BcaOutput resume() override;
  BcaOutput restart(Round next_valid, const std::map<Round, Certificate>& recovered,
                    std::uint32_t stop_count) override;
  std::optional<Certificate> commit_certificate(Round round) const override;
  BcaOutput adopt(const Certificate& commit_cert) override;

  bool halted() const override { return halted_; }
  bool is_accepted(Round round) const override;
  Round next_valid_round() const override { return next_valid_; }
  Round last_contiguous() const override { return last_contiguous_; }
  Round last_accepted() const override { return last_accepted_; }
  bool accepted_since_restart() const override { return accepted_since_restart_; }
  std::uint32_t stop_count() const override { return stops_; }

  Phase phase(Round round) const;
  std::optional<Digest> accepted_digest(Round round) const;
  std::size_t suspicion_count() const { return suspicions_; }
  std::size_t ignored_proposals() const { return ignored_proposals_; }

 private:
  struct Slot {
    TxnPtr proposal;
    std::map<Digest, std::map<ReplicaId, AuthTag>> prepares;
    std::map<Digest, std::map<ReplicaId, AuthTag>> commits;
    std::set<ReplicaId> prepare_voters;
    std::set<ReplicaId> commit_voters;
    bool sent_prepare = false;
    bool sent_commit = false;
    bool prepared = false;
    bool accepted = false;
    std::optional<Certificate> cert;
  };

  BcaOutput on_preprepare(std::uint32_t sender, const PrePrepare& m);
  BcaOutput on_vote(std::uint32_t sender, CertKind kind, Round round, const Digest& d, const AuthTag& tag);
  void pump(Round round, Slot& slot, BcaOutput& out);
  void mark_accepted(Round round, Slot& slot, BcaOutput& out);
  bool in_window(Round round) const;
  Certificate make_cert(Round round, const Slot& slot, CertKind kind) const;

  SystemConfig cfg_;
  InstanceId instance_;
  ReplicaId self_;
  std::map<Round, Slot> slots_;
  bool halted_ = false;
  Round next_valid_ = 0;
  Round last_contiguous_ = kNoRound;
  Round last_accepted_ = kNoRound;
  bool accepted_since_restart_ = false;
  std::uint32_t stops_ = 0;
  std::optional<Round> watching_;
  std::uint64_t watch_generation_ = 0;
  std::size_t suspicions_ = 0;
  std::size_t ignored_proposals_ = 0;
};

}  // namespace rcc
