#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rcc/auth.hpp"
#include "rcc/transaction.hpp"
#include "rcc/types.hpp"

namespace rcc {

class Envelope;
using MessagePtr = std::shared_ptr<const Envelope>;

struct Vote {
  ReplicaId sender = 0;
  AuthTag tag;
};

enum class CertKind : std::uint8_t { prepare = 1, commit = 2 };

// nf signed Prepare (or Commit) votes on the digest of txn.
struct Certificate {
  InstanceId instance = 0;
  Round round = 0;
  TxnPtr txn;
  CertKind kind = CertKind::prepare;
  std::vector<Vote> votes;
};

using CertificateList = std::vector<Certificate>;

// --- worker instance (Byzantine commit) -------------------------------------

struct PrePrepare {
  InstanceId instance = 0;
  Round round = 0;
  TxnPtr txn;
};

struct Prepare {
  InstanceId instance = 0;
  Round round = 0;
  Digest digest;
};

struct Commit {
  InstanceId instance = 0;
  Round round = 0;
  Digest digest;
};

// --- recovery ----------------------------------------------------------------

struct Failure {
  InstanceId instance = 0;
  Round round = 0;
  // Null when only the recovery leader receives the full state.
  std::shared_ptr<const CertificateList> state;
};

struct StopOp {
  InstanceId instance = 0;
  // Failure envelopes from distinct senders.
  std::vector<MessagePtr> evidence;
};

struct SwitchOp {
  InstanceId instance = 0;
  // The client's SwitchInstance envelope.
  MessagePtr request;
};

using CoordOp = std::variant<StopOp, SwitchOp>;
using CoordOpPtr = std::shared_ptr<const CoordOp>;

Digest op_digest(const CoordOp& op);

struct CoordPropose {
  InstanceId instance = 0;
  ViewNum view = 0;
  std::uint64_t seq = 0;
  CoordOpPtr op;
};

struct CoordPrepare {
  InstanceId instance = 0;
  ViewNum view = 0;
  std::uint64_t seq = 0;
  Digest op;
};

struct CoordCommit {
  InstanceId instance = 0;
  ViewNum view = 0;
  std::uint64_t seq = 0;
  Digest op;
};

// A decided operation with the signed commits that decided it, sent to a
// replica that fell behind.
struct CoordDecision {
  InstanceId instance = 0;
  std::uint64_t seq = 0;
  CoordOpPtr op;
  std::vector<MessagePtr> commits;
};

struct PreparedProof {
  ViewNum view = 0;
  std::uint64_t seq = 0;
  CoordOpPtr op;
  std::vector<Vote> votes;  // CoordPrepare tags
};

struct ViewChange {
  InstanceId instance = 0;
  ViewNum new_view = 0;
  std::uint64_t next_seq = 0;
  std::optional<PreparedProof> prepared;
};

struct NewView {
  InstanceId instance = 0;
  ViewNum view = 0;
  std::vector<MessagePtr> view_changes;
};

// --- per-need checkpoint -------------------------------------------------------

struct CheckpointMsg {
  Round round = 0;
  InstanceId instance = 0;
  Certificate cert;  // commit certificate for (instance, round)
};

// --- clients -------------------------------------------------------------------

struct ClientRequest {
  TxnPtr txn;
  bool forced = false;
};

struct ClientReply {
  Digest txn;
  Digest result;
};

struct SwitchInstance {
  ClientId client = 0;
  InstanceId target = 0;
  std::uint64_t nonce = 0;
};

using Body = std::variant<PrePrepare, Prepare, Commit, Failure, CoordPropose, CoordPrepare, CoordCommit,
                          ViewChange, NewView, CheckpointMsg, ClientRequest, ClientReply, SwitchInstance,
                          CoordDecision>;

void encode(ByteWriter& w, const Body& body);
Digest body_digest(const Body& body);
const char* kind_name(const Body& body);

// Immutable signed message. The digest is computed from the body at
// construction, so an envelope can never carry a stale digest.
class Envelope {
 public:
  Envelope(std::uint32_t sender, Body body, AuthTag tag)
      : sender_(sender), body_(std::move(body)), tag_(tag), digest_(body_digest(body_)) {}

  std::uint32_t sender() const { return sender_; }
  const Body& body() const { return body_; }
  const AuthTag& tag() const { return tag_; }
  const Digest& digest() const { return digest_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&body_);
  }

 private:
  std::uint32_t sender_;
  Body body_;
  AuthTag tag_;
  Digest digest_;
};

void encode(ByteWriter& w, const Envelope& env);

MessagePtr make_message(const Signer& signer, Body body);
bool authentic(const Envelope& env, const KeyRing& keys);

// Tag a replica would have attached to the given vote body.
Digest vote_digest(CertKind kind, InstanceId instance, Round round, const Digest& d);

// True when the certificate carries at least `quorum` votes from distinct
// replicas, every vote verifies, and the kind matches a worker vote.
bool verify_certificate(const Certificate& cert, std::uint32_t quorum, std::uint32_t n, const KeyRing& keys);

}  // namespace rcc
