#include "rcc/coordination.hpp"

#include <algorithm>

namespace rcc {

void CoordOutput::append(CoordOutput&& other) {
  for (auto& b : other.broadcasts) broadcasts.push_back(std::move(b));
  for (auto& d : other.direct) direct.push_back(std::move(d));
  if (other.decided) decided = std::move(other.decided);
  if (other.entered_view) entered_view = other.entered_view;
  for (auto& r : other.rejected) rejected.push_back(std::move(r));
}

CoordinationInstance::CoordinationInstance(const SystemConfig& cfg, InstanceId instance, ReplicaId self,
                                           ViewNum initial_view, const KeyRing& keys)
    : n_(cfg.n),
      f_(cfg.f),
      nf_(cfg.nf()),
      instance_(instance),
      self_(self),
      keys_(&keys),
      view_(initial_view),
      target_(initial_view) {}

bool CoordinationInstance::proposal_in_flight() const {
  if (last_proposed_ == std::pair{view_, next_seq_}) return true;
  const auto it = slots_.find({view_, next_seq_});
  return it != slots_.end() && (it->second.proposed || it->second.op || it->second.rejected);
}

CoordOutput CoordinationInstance::propose(CoordOpPtr op) {
  CoordOutput out;
  if (!is_leader() || proposal_in_flight() || !op) return out;
  last_proposed_ = {view_, next_seq_};
  out.broadcasts.push_back(CoordPropose{instance_, view_, next_seq_, std::move(op)});
  return out;
}

CoordOutput CoordinationInstance::deliver(const MessagePtr& msg, const Validator& valid) {
  CoordOutput out;
  const std::uint32_t sender = msg->sender();
  if (sender >= n_) return out;
  auto defer_or_drop = [&](InstanceId inst, ViewNum v) {
    if (inst != instance_) return true;
    if (v > view_) {
      if (future_.size() < 4096) future_.push_back(msg);
      return true;
    }
    return v < view_ || changing_;
  };
  if (const auto* p = msg->as<CoordPropose>()) {
    if (defer_or_drop(p->instance, p->view)) return out;
    return on_propose(sender, *p, valid);
  }
  if (const auto* p = msg->as<CoordPrepare>()) {
    if (defer_or_drop(p->instance, p->view) || p->seq < next_seq_) return out;
    slots_[{p->view, p->seq}].prepares[p->op].emplace(sender, msg->tag());
    pump(p->view, p->seq, valid, out);
    return out;
  }
  if (const auto* c = msg->as<CoordCommit>()) {
    if (defer_or_drop(c->instance, c->view) || c->seq < next_seq_) return out;
    slots_[{c->view, c->seq}].commits[c->op].emplace(sender, msg);
    pump(c->view, c->seq, valid, out);
    return out;
  }
  if (const auto* vc = msg->as<ViewChange>()) {
    if (vc->instance != instance_) return out;
    if (vc->next_seq < next_seq_) {
      for (auto& d : decisions_from(vc->next_seq)) out.direct.emplace_back(sender, std::move(d));
    }
    out.append(on_view_change(msg, *vc));
    return out;
  }
  if (const auto* d = msg->as<CoordDecision>()) {
    if (d->instance != instance_) return out;
    return on_decision(*d);
  }
  if (const auto* nv = msg->as<NewView>()) {
    if (nv->instance != instance_) return out;
    return on_new_view(sender, *nv, valid);
  }
  return out;
}

CoordOutput CoordinationInstance::on_propose(ReplicaId sender, const CoordPropose& m, const Validator& valid) {
  CoordOutput out;
  if (sender != leader_of(m.view) || m.seq < next_seq_ || !m.op) return out;
  Slot& s = slots_[{m.view, m.seq}];
  if (s.proposed || s.op || s.rejected) return out;
  s.proposed = m.op;
  pump(m.view, m.seq, valid, out);
  return out;
}

void CoordinationInstance::pump(ViewNum view, std::uint64_t seq, const Validator& valid, CoordOutput& out) {
  if (view != view_ || seq != next_seq_ || changing_ || out.decided) return;
  const auto it = slots_.find({view, seq});
  if (it == slots_.end()) return;
  Slot& s = it->second;
  if (s.proposed && !s.op && !s.rejected) {
    if (required_op_ && op_digest(*s.proposed) != *required_op_) {
      s.rejected = true;
      out.rejected.push_back("proposal ignores prepared operation from previous view");
    } else if (auto err = valid(*s.proposed)) {
      s.rejected = true;
      out.rejected.push_back(*err);
    } else {
      s.op = s.proposed;
      out.broadcasts.push_back(CoordPrepare{instance_, view, seq, op_digest(*s.op)});
    }
  }
  if (!s.op) return;
  const Digest d = op_digest(*s.op);
  if (!s.sent_commit) {
    const auto pv = s.prepares.find(d);
    if (pv != s.prepares.end() && pv->second.size() >= nf_) {
      PreparedProof proof{view, seq, s.op, {}};
      for (const auto& [voter, tag] : pv->second) proof.votes.push_back({voter, tag});
      proof_ = std::move(proof);
      s.sent_commit = true;
      out.broadcasts.push_back(CoordCommit{instance_, view, seq, d});
    }
  }
  const auto cv = s.commits.find(d);
  if (cv != s.commits.end() && cv->second.size() >= nf_) {
    out.decided = std::pair{seq, s.op};
    CoordDecision& record = decisions_[seq];
    record = CoordDecision{instance_, seq, s.op, {}};
    for (const auto& [voter, m] : cv->second) {
      if (record.commits.size() == nf_) break;
      record.commits.push_back(m);
    }
    ++next_seq_;
    proof_.reset();
    required_op_.reset();
    std::erase_if(slots_, [&](const auto& kv) { return kv.first.second < next_seq_; });
  }
}

CoordOutput CoordinationInstance::advance(const Validator& valid) {
  std::erase_if(early_decisions_, [&](const auto& kv) { return kv.first < next_seq_; });
  if (const auto it = early_decisions_.find(next_seq_); it != early_decisions_.end()) {
    const CoordDecision d = std::move(it->second);
    early_decisions_.erase(it);
    return on_decision(d);
  }
  CoordOutput out;
  replay_future(valid, out);
  pump(view_, next_seq_, valid, out);
  return out;
}

std::vector<Body> CoordinationInstance::decisions_from(std::uint64_t seq) const {
  std::vector<Body> out;
  for (auto it = decisions_.lower_bound(seq); it != decisions_.end(); ++it) out.emplace_back(it->second);
  return out;
}

std::optional<ViewNum> CoordinationInstance::verify_decision(const CoordDecision& m) const {
  if (!m.op) return std::nullopt;
  const Digest d = op_digest(*m.op);
  std::optional<ViewNum> view;
  std::set<std::uint32_t> seen;
  for (const auto& env : m.commits) {
    if (!env || env->sender() >= n_ || !authentic(*env, *keys_)) return std::nullopt;
    const auto* c = env->as<CoordCommit>();
    if (!c || c->instance != instance_ || c->seq != m.seq || c->op != d) return std::nullopt;
    if (view && *view != c->view) return std::nullopt;
    view = c->view;
    seen.insert(env->sender());
  }
  if (seen.size() < nf_) return std::nullopt;
  return view;
}

CoordOutput CoordinationInstance::on_decision(const CoordDecision& m) {
  CoordOutput out;
  if (m.seq < next_seq_) return out;
  if (m.seq > next_seq_) {
    if (early_decisions_.size() < 256) early_decisions_.emplace(m.seq, m);
    return out;
  }
  const auto view = verify_decision(m);
  if (!view) return out;
  if (*view > view_ || (changing_ && *view >= view_)) {
    view_ = *view;
    target_ = *view;
    changing_ = false;
    out.entered_view = *view;
    std::erase_if(view_change_msgs_, [&](const auto& kv) { return kv.first <= view_; });
  }
  out.decided = std::pair{m.seq, m.op};
  decisions_[m.seq] = m;
  ++next_seq_;
  proof_.reset();
  required_op_.reset();
  std::erase_if(slots_, [&](const auto& kv) { return kv.first.second < next_seq_; });
  return out;
}

void CoordinationInstance::replay_future(const Validator& valid, CoordOutput& out) {
  if (future_.empty()) return;
  std::vector<MessagePtr> pending;
  pending.swap(future_);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (out.decided) {
      future_.push_back(pending[i]);
      continue;
    }
    out.append(deliver(pending[i], valid));
  }
}

CoordOutput CoordinationInstance::begin_change(ViewNum target) {
  CoordOutput out;
  changing_ = true;
  target_ = target;
  out.broadcasts.push_back(ViewChange{instance_, target, next_seq_, proof_});
  return out;
}

CoordOutput CoordinationInstance::start_view_change() {
  return begin_change(std::max(view_, changing_ ? target_ : view_) + 1);
}

CoordOutput CoordinationInstance::on_view_change(const MessagePtr& msg, const ViewChange& m) {
  CoordOutput out;
  const ViewNum w = m.new_view;
  if (w <= view_) return out;
  auto& senders = view_change_msgs_[w];
  senders[msg->sender()] = msg;
  if (senders.size() >= f_ + 1 && (!changing_ || target_ < w)) out.append(begin_change(w));
  if (changing_ && target_ == w && leader_of(w) == self_ && senders.size() >= nf_ && !new_view_sent_.contains(w)) {
    new_view_sent_.insert(w);
    NewView nv{instance_, w, {}};
    for (const auto& [s, vc] : senders) {
      if (nv.view_changes.size() == nf_) break;
      nv.view_changes.push_back(vc);
    }
    out.broadcasts.push_back(std::move(nv));
  }
  return out;
}

bool CoordinationInstance::valid_proof(const PreparedProof& p) const {
  if (!p.op) return false;
  const Digest vd = body_digest(Body{CoordPrepare{instance_, p.view, p.seq, op_digest(*p.op)}});
  std::set<ReplicaId> seen;
  for (const auto& v : p.votes) {
    if (v.sender >= n_ || !keys_->verify(v.sender, vd, v.tag)) return false;
    seen.insert(v.sender);
  }
  return seen.size() >= nf_;
}

CoordOutput CoordinationInstance::on_new_view(ReplicaId sender, const NewView& m, const Validator& valid) {
  CoordOutput out;
  if (m.view <= view_ || sender != leader_of(m.view)) return out;
  std::set<std::uint32_t> seen;
  for (const auto& env : m.view_changes) {
    if (!env || env->sender() >= n_ || !authentic(*env, *keys_)) return out;
    const auto* vc = env->as<ViewChange>();
    if (!vc || vc->instance != instance_ || vc->new_view != m.view) return out;
    seen.insert(env->sender());
  }
  if (seen.size() < nf_) return out;
  return enter_view(m.view, m.view_changes, valid);
}

CoordOutput CoordinationInstance::enter_view(ViewNum v, const std::vector<MessagePtr>& view_changes,
                                             const Validator& valid) {
  CoordOutput out;
  view_ = v;
  target_ = v;
  changing_ = false;
  ++view_changes_;
  out.entered_view = v;
  std::erase_if(view_change_msgs_, [&](const auto& kv) { return kv.first <= v; });

  const PreparedProof* best = nullptr;
  for (const auto& env : view_changes) {
    const auto& prepared = env->as<ViewChange>()->prepared;
    if (!prepared || prepared->seq != next_seq_ || !valid_proof(*prepared)) continue;
    if (!best || prepared->view > best->view) best = &*prepared;
  }
  required_op_.reset();
  if (best) required_op_ = op_digest(*best->op);
  if (best && leader() == self_) out.append(propose(best->op));

  replay_future(valid, out);
  return out;
}

}  // namespace rcc
