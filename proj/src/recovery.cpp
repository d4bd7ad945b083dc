#include "rcc/recovery.hpp"

#include <set>

namespace rcc {

std::size_t FailureTracker::record(const MessagePtr& msg) {
  const auto* f = msg->as<Failure>();
  if (!f || f->round < restart_) return latest_.size();
  auto [it, inserted] = latest_.emplace(msg->sender(), msg);
  if (!inserted) {
    const auto* old = it->second->as<Failure>();
    if (f->round > old->round || (f->round == old->round && f->state && !old->state)) it->second = msg;
  }
  return latest_.size();
}

void FailureTracker::restart(Round restart_round) {
  restart_ = std::max(restart_, restart_round);
  std::erase_if(latest_, [&](const auto& kv) { return kv.second->template as<Failure>()->round < restart_; });
}

void FailureTracker::drop_through(Round round) {
  std::erase_if(latest_, [&](const auto& kv) { return kv.second->template as<Failure>()->round <= round; });
}

std::vector<MessagePtr> FailureTracker::evidence(std::size_t count) const {
  std::vector<MessagePtr> out;
  for (const auto& [sender, msg] : latest_) {
    if (out.size() == count) break;
    if (msg->as<Failure>()->state) out.push_back(msg);
  }
  return out;
}

std::optional<std::string> validate_stop(const StopOp& op, Round restart_round, const SystemConfig& cfg,
                                         const KeyRing& keys) {
  std::set<std::uint32_t> senders;
  for (const auto& env : op.evidence) {
    if (!env) return "null evidence";
    const auto* f = env->as<Failure>();
    if (!f) return "evidence is not a failure message";
    if (env->sender() >= cfg.n) return "evidence from non-replica";
    if (!authentic(*env, keys)) return "evidence fails authentication";
    if (f->instance != op.instance) return "evidence for another instance";
    if (f->round < restart_round) return "stale evidence";
    if (!f->state) return "evidence without state";
    if (!senders.insert(env->sender()).second) return "duplicate sender";
    for (const auto& cert : *f->state) {
      if (cert.instance != op.instance || cert.round < restart_round) return "certificate outside instance epoch";
      if (!verify_certificate(cert, cfg.nf(), cfg.n, keys)) return "invalid certificate";
      if (!verify_transaction(*cert.txn, keys)) return "certificate carries unsigned transaction";
    }
  }
  if (senders.size() < cfg.nf()) return "too few distinct senders";
  return std::nullopt;
}

Round restart_round_after(Round last_round, std::uint32_t stop_count) {
  return last_round + (Round{1} << std::min<std::uint32_t>(stop_count, 40));
}

RecoveredState recover_state(const StopOp& op, Round restart_round, std::uint32_t stop_count) {
  RecoveredState s;
  for (const auto& env : op.evidence) {
    for (const auto& cert : *env->as<Failure>()->state) {
      auto [it, inserted] = s.certs.emplace(cert.round, cert);
      // Prefer commit certificates; among equals keep the first seen.
      if (!inserted && it->second.kind == CertKind::prepare && cert.kind == CertKind::commit) it->second = cert;
    }
  }
  s.last_round = s.certs.empty() ? restart_round - 1 : std::max(restart_round - 1, s.certs.rbegin()->first);
  s.next_valid = restart_round_after(s.last_round, stop_count);
  return s;
}

}  // namespace rcc
