#include "rcc/pbft_instance.hpp"

#include <algorithm>

namespace rcc {

void BcaOutput::append(BcaOutput&& other) {
  for (auto& b : other.broadcasts) broadcasts.push_back(std::move(b));
  for (auto& a : other.accepted) accepted.push_back(std::move(a));
  for (auto& s : other.suspicions) suspicions.push_back(std::move(s));
}

PbftInstance::PbftInstance(const SystemConfig& cfg, InstanceId instance, ReplicaId self)
    : cfg_(cfg), instance_(instance), self_(self) {}

bool PbftInstance::in_window(Round round) const {
  // Far-future rounds are dropped to bound memory; honest primaries never
  // run more than `window` rounds ahead of execution.
  return round >= next_valid_ && round <= std::max(last_contiguous_, next_valid_) + 16 * cfg_.window;
}

BcaOutput PbftInstance::propose(Round round, TxnPtr txn) {
  BcaOutput out;
  if (halted_ || round < next_valid_ || !txn) {
    ++ignored_proposals_;
    return out;
  }
  out.broadcasts.push_back(PrePrepare{instance_, round, std::move(txn)});
  return out;
}

BcaOutput PbftInstance::deliver(const Envelope& msg) {
  if (const auto* pp = msg.as<PrePrepare>()) return on_preprepare(msg.sender(), *pp);
  if (const auto* p = msg.as<Prepare>()) {
    if (p->instance != instance_) return {};
    return on_vote(msg.sender(), CertKind::prepare, p->round, p->digest, msg.tag());
  }
  if (const auto* c = msg.as<Commit>()) {
    if (c->instance != instance_) return {};
    return on_vote(msg.sender(), CertKind::commit, c->round, c->digest, msg.tag());
  }
  return {};
}

BcaOutput PbftInstance::on_preprepare(std::uint32_t sender, const PrePrepare& m) {
  BcaOutput out;
  if (m.instance != instance_ || !m.txn || !in_window(m.round)) return out;
  if (sender != primary_of(instance_)) {
    ++suspicions_;
    out.suspicions.push_back({instance_, m.round, sender, "preprepare from non-primary"});
    return out;
  }
  Slot& slot = slots_[m.round];
  if (slot.proposal) {
    if (slot.proposal->digest() != m.txn->digest()) {
      // First proposal wins; the conflicting one is only evidence.
      ++suspicions_;
      out.suspicions.push_back({instance_, m.round, sender, "conflicting preprepare"});
    }
    return out;
  }
  slot.proposal = m.txn;
  pump(m.round, slot, out);
  return out;
}

BcaOutput PbftInstance::on_vote(std::uint32_t sender, CertKind kind, Round round, const Digest& d,
                                const AuthTag& tag) {
  BcaOutput out;
  if (sender >= cfg_.n || !in_window(round)) return out;
  Slot& slot = slots_[round];
  if (slot.accepted) return out;
  auto& voters = kind == CertKind::prepare ? slot.prepare_voters : slot.commit_voters;
  auto& votes = kind == CertKind::prepare ? slot.prepares : slot.commits;
  if (!voters.insert(sender).second) {
    const auto it = votes.find(d);
    if (it == votes.end() || !it->second.contains(sender)) {
      ++suspicions_;
      out.suspicions.push_back({instance_, round, sender, "conflicting vote"});
    }
    return out;
  }
  votes[d].emplace(sender, tag);
  pump(round, slot, out);
  return out;
}

void PbftInstance::pump(Round round, Slot& slot, BcaOutput& out) {
  if (!slot.proposal) return;
  const Digest d = slot.proposal->digest();
  if (!halted_ && !slot.sent_prepare) {
    slot.sent_prepare = true;
    out.broadcasts.push_back(Prepare{instance_, round, d});
  }
  if (!slot.prepared) {
    const auto it = slot.prepares.find(d);
    if (it != slot.prepares.end() && it->second.size() >= cfg_.nf()) {
      slot.prepared = true;
      slot.cert = make_cert(round, slot, CertKind::prepare);
    }
  }
  if (slot.prepared && !halted_ && !slot.sent_commit) {
    slot.sent_commit = true;
    out.broadcasts.push_back(Commit{instance_, round, d});
  }
  if (slot.accepted) return;
  const auto it = slot.commits.find(d);
  if (it != slot.commits.end() && it->second.size() >= cfg_.nf()) {
    slot.cert = make_cert(round, slot, CertKind::commit);
    mark_accepted(round, slot, out);
  }
}

Certificate PbftInstance::make_cert(Round round, const Slot& slot, CertKind kind) const {
  Certificate c;
  c.instance = instance_;
  c.round = round;
  c.txn = slot.proposal;
  c.kind = kind;
  const auto& votes = kind == CertKind::prepare ? slot.prepares : slot.commits;
  for (const auto& [sender, tag] : votes.at(slot.proposal->digest())) c.votes.push_back({sender, tag});
  return c;
}

void PbftInstance::mark_accepted(Round round, Slot& slot, BcaOutput& out) {
  slot.accepted = true;
  slot.prepared = true;
  // The certificate is all that is needed from here on.
  slot.prepares.clear();
  slot.commits.clear();
  slot.prepare_voters.clear();
  slot.commit_voters.clear();
  out.accepted.push_back({instance_, round, slot.proposal});
  last_accepted_ = std::max(last_accepted_, round);
  if (round >= next_valid_) accepted_since_restart_ = true;
  if (watching_ && *watching_ == round) watching_.reset();
  while (true) {
    const auto it = slots_.find(last_contiguous_ + 1);
    if (it == slots_.end() || !it->second.accepted) break;
    ++last_contiguous_;
  }
}

bool PbftInstance::is_accepted(Round round) const {
  const auto it = slots_.find(round);
  return it != slots_.end() && it->second.accepted;
}

PbftInstance::Phase PbftInstance::phase(Round round) const {
  const auto it = slots_.find(round);
  if (it == slots_.end() || !it->second.proposal) return Phase::empty;
  if (it->second.accepted) return Phase::accepted;
  if (it->second.prepared) return Phase::prepared;
  return Phase::preprepared;
}

std::optional<Digest> PbftInstance::accepted_digest(Round round) const {
  const auto it = slots_.find(round);
  if (it == slots_.end() || !it->second.accepted) return std::nullopt;
  return it->second.proposal->digest();
}

std::optional<std::uint64_t> PbftInstance::expect(Round round) {
  if (halted_ || round < next_valid_ || is_accepted(round)) return std::nullopt;
  if (watching_ && *watching_ <= round) return std::nullopt;
  watching_ = round;
  return ++watch_generation_;
}

std::optional<FailureDetected> PbftInstance::on_timeout(Round round, std::uint64_t generation) {
  if (!watching_ || *watching_ != round || generation != watch_generation_) return std::nullopt;
  watching_.reset();
  if (halted_ || is_accepted(round)) return std::nullopt;
  return FailureDetected{instance_, round};
}

SimTime PbftInstance::timeout() const {
  return cfg_.base_timeout << std::min(stops_, cfg_.max_timeout_doublings);
}

CertificateList PbftInstance::recoverable_state() const {
  CertificateList state;
  for (const auto& [round, slot] : slots_) {
    if (round >= next_valid_ && slot.cert) state.push_back(*slot.cert);
  }
  return state;
}

void PbftInstance::halt() {
  halted_ = true;
  watching_.reset();
}

BcaOutput PbftInstance::resume() {
  BcaOutput out;
  if (!halted_) return out;
  halted_ = false;
  for (auto& [round, slot] : slots_) {
    if (round >= next_valid_) pump(round, slot, out);
  }
  return out;
}

BcaOutput PbftInstance::restart(Round next_valid, const std::map<Round, Certificate>& recovered,
                                std::uint32_t stop_count) {
  BcaOutput out;
  for (const auto& [round, cert] : recovered) {
    if (round >= next_valid || round < next_valid_ || !cert.txn) continue;
    Slot& slot = slots_[round];
    if (slot.accepted) {
      if (slot.proposal->digest() != cert.txn->digest()) {
        throw ProtocolViolation("recovered state conflicts with accepted proposal in instance " +
                                std::to_string(instance_) + " round " + std::to_string(round));
      }
      continue;
    }
    slot.proposal = cert.txn;
    slot.cert = cert;
    slot.sent_prepare = slot.sent_commit = true;
    mark_accepted(round, slot, out);
  }
  for (auto it = slots_.begin(); it != slots_.end() && it->first < next_valid;) {
    if (it->second.accepted && it->first >= next_valid_ && !recovered.contains(it->first)) {
      throw ProtocolViolation("accepted proposal missing from recovered state in instance " +
                              std::to_string(instance_) + " round " + std::to_string(it->first));
    }
    it = slots_.erase(it);
  }
  next_valid_ = std::max(next_valid_, next_valid);
  last_contiguous_ = std::max(last_contiguous_, next_valid_ - 1);
  stops_ = stop_count;
  halted_ = false;
  accepted_since_restart_ = false;
  watching_.reset();
  while (true) {
    const auto it = slots_.find(last_contiguous_ + 1);
    if (it == slots_.end() || !it->second.accepted) break;
    ++last_contiguous_;
  }
  for (auto& [round, slot] : slots_) pump(round, slot, out);
  return out;
}

std::optional<Certificate> PbftInstance::commit_certificate(Round round) const {
  const auto it = slots_.find(round);
  if (it == slots_.end() || !it->second.accepted || !it->second.cert) return std::nullopt;
  if (it->second.cert->kind != CertKind::commit) return std::nullopt;
  return it->second.cert;
}

BcaOutput PbftInstance::adopt(const Certificate& commit_cert) {
  BcaOutput out;
  const Round round = commit_cert.round;
  if (!commit_cert.txn || round < next_valid_) return out;
  Slot& slot = slots_[round];
  if (slot.accepted) {
    if (slot.proposal->digest() != commit_cert.txn->digest()) {
      throw ProtocolViolation("checkpoint conflicts with accepted proposal in instance " +
                              std::to_string(instance_) + " round " + std::to_string(round));
    }
    return out;
  }
  slot.proposal = commit_cert.txn;
  slot.cert = commit_cert;
  slot.sent_prepare = slot.sent_commit = true;
  mark_accepted(round, slot, out);
  return out;
}

}  // namespace rcc
