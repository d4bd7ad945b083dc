#include "rcc/messages.hpp"

#include <set>

namespace rcc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void encode_txn(ByteWriter& w, const TxnPtr& t) {
  if (!t) {
    w.u8(0);
    return;
  }
  w.u8(1);
  t->encode(w);
}

void encode_votes(ByteWriter& w, const std::vector<Vote>& votes) {
  w.u32(static_cast<std::uint32_t>(votes.size()));
  for (const auto& v : votes) w.u32(v.sender).bytes(v.tag.bytes);
}

void encode_cert(ByteWriter& w, const Certificate& c) {
  w.u32(c.instance).i64(c.round).u8(static_cast<std::uint8_t>(c.kind));
  encode_txn(w, c.txn);
  encode_votes(w, c.votes);
}

void encode_op(ByteWriter& w, const CoordOp& op) {
  std::visit(Overloaded{
                 [&](const StopOp& s) {
                   w.u8(1).u32(s.instance).u32(static_cast<std::uint32_t>(s.evidence.size()));
                   for (const auto& e : s.evidence) encode(w, *e);
                 },
                 [&](const SwitchOp& s) {
                   w.u8(2).u32(s.instance);
                   encode(w, *s.request);
                 },
             },
             op);
}

void encode_msgs(ByteWriter& w, const std::vector<MessagePtr>& msgs) {
  w.u32(static_cast<std::uint32_t>(msgs.size()));
  for (const auto& m : msgs) encode(w, *m);
}

}  // namespace

Digest op_digest(const CoordOp& op) {
  ByteWriter w;
  w.str("coord-op");
  encode_op(w, op);
  return w.finish();
}

void encode(ByteWriter& w, const Body& body) {
  w.u8(static_cast<std::uint8_t>(body.index()));
  std::visit(Overloaded{
                 [&](const PrePrepare& m) {
                   w.u32(m.instance).i64(m.round);
                   encode_txn(w, m.txn);
                 },
                 [&](const Prepare& m) { w.u32(m.instance).i64(m.round).digest(m.digest); },
                 [&](const Commit& m) { w.u32(m.instance).i64(m.round).digest(m.digest); },
                 [&](const Failure& m) {
                   w.u32(m.instance).i64(m.round).u8(m.state ? 1 : 0);
                   if (m.state) {
                     w.u32(static_cast<std::uint32_t>(m.state->size()));
                     for (const auto& c : *m.state) encode_cert(w, c);
                   }
                 },
                 [&](const CoordPropose& m) {
                   w.u32(m.instance).u64(m.view).u64(m.seq);
                   encode_op(w, *m.op);
                 },
                 [&](const CoordPrepare& m) { w.u32(m.instance).u64(m.view).u64(m.seq).digest(m.op); },
                 [&](const CoordCommit& m) { w.u32(m.instance).u64(m.view).u64(m.seq).digest(m.op); },
                 [&](const ViewChange& m) {
                   w.u32(m.instance).u64(m.new_view).u64(m.next_seq).u8(m.prepared ? 1 : 0);
                   if (m.prepared) {
                     w.u64(m.prepared->view).u64(m.prepared->seq);
                     encode_op(w, *m.prepared->op);
                     encode_votes(w, m.prepared->votes);
                   }
                 },
                 [&](const NewView& m) {
                   w.u32(m.instance).u64(m.view);
                   encode_msgs(w, m.view_changes);
                 },
                 [&](const CheckpointMsg& m) {
                   w.i64(m.round).u32(m.instance);
                   encode_cert(w, m.cert);
                 },
                 [&](const ClientRequest& m) {
                   encode_txn(w, m.txn);
                   w.u8(m.forced ? 1 : 0);
                 },
                 [&](const ClientReply& m) { w.digest(m.txn).digest(m.result); },
                 [&](const SwitchInstance& m) { w.u32(m.client).u32(m.target).u64(m.nonce); },
                 [&](const CoordDecision& m) {
                   w.u32(m.instance).u64(m.seq);
                   encode_op(w, *m.op);
                   encode_msgs(w, m.commits);
                 },
             },
             body);
}

void encode(ByteWriter& w, const Envelope& env) {
  w.u32(env.sender());
  encode(w, env.body());
  w.bytes(env.tag().bytes);
}

Digest body_digest(const Body& body) {
  ByteWriter w;
  encode(w, body);
  return w.finish();
}

const char* kind_name(const Body& body) {
  static constexpr const char* kNames[] = {"preprepare", "prepare",    "commit",     "failure", "coord-propose",
                                           "coord-prepare", "coord-commit", "view-change", "new-view",
                                           "checkpoint", "client-request", "client-reply", "switch-instance",
                                           "coord-decision"};
  static_assert(std::variant_size_v<Body> == std::size(kNames));
  return kNames[body.index()];
}

MessagePtr make_message(const Signer& signer, Body body) {
  const Digest d = body_digest(body);
  return std::make_shared<const Envelope>(signer.node(), std::move(body), signer.sign(d));
}

bool authentic(const Envelope& env, const KeyRing& keys) { return keys.verify(env.sender(), env.digest(), env.tag()); }

Digest vote_digest(CertKind kind, InstanceId instance, Round round, const Digest& d) {
  if (kind == CertKind::prepare) return body_digest(Body{Prepare{instance, round, d}});
  return body_digest(Body{Commit{instance, round, d}});
}

bool verify_certificate(const Certificate& cert, std::uint32_t quorum, std::uint32_t n, const KeyRing& keys) {
  if (!cert.txn) return false;
  if (cert.kind != CertKind::prepare && cert.kind != CertKind::commit) return false;
  const Digest vd = vote_digest(cert.kind, cert.instance, cert.round, cert.txn->digest());
  std::set<ReplicaId> seen;
  for (const auto& v : cert.votes) {
    if (v.sender >= n) return false;
    if (!keys.verify(v.sender, vd, v.tag)) return false;
    seen.insert(v.sender);
  }
  return seen.size() >= quorum;
}

}  // namespace rcc
