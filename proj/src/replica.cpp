#include "rcc/replica.hpp"

#include <algorithm>
#include <sstream>

namespace rcc {

const char* to_string(AcceptVia v) {
  switch (v) {
    case AcceptVia::normal:
      return "normal";
    case AcceptVia::recovered:
      return "recovered";
    case AcceptVia::checkpoint:
      return "checkpoint";
  }
  return "?";
}

namespace {

const TxnPtr& noop_txn() {
  static const TxnPtr noop = std::make_shared<const Transaction>(Transaction::noop());
  return noop;
}

std::string dashed(std::string s) {
  std::replace(s.begin(), s.end(), ' ', '-');
  return s;
}

InstanceId instance_of(const Body& body) {
  return std::visit(
      [](const auto& b) -> InstanceId {
        if constexpr (requires { b.instance; }) {
          return b.instance;
        } else {
          return 0;
        }
      },
      body);
}

}  // namespace

Replica::Replica(const SystemConfig& cfg, ReplicaId id, const KeyRing& keys, ReplicaEnv& env, KvState genesis,
                 Behavior behavior)
    : cfg_(cfg),
      id_(id),
      keys_(keys),
      signer_(keys.signer_for(id)),
      env_(env),
      behavior_(std::move(behavior)),
      own_(id < cfg.m ? id + 1 : 0),
      coordinator_(cfg.m, cfg.ordering),
      ledger_(std::move(genesis)),
      checkpoint_(cfg),
      clients_(cfg) {
  for (InstanceId i = 1; i <= cfg.m; ++i) {
    instances_.push_back(std::make_unique<PbftInstance>(cfg, i, id));
    coord_.emplace_back(cfg, i, id, ViewNum{i}, keys);
  }
  failures_.resize(cfg.m);
  recovery_.resize(cfg.m);
  stop_seqs_.resize(cfg.m);
  observed_.assign(cfg.m, kNoRound);
}

void Replica::start() {
  if (!own_) return;
  const SimTime every = cfg_.propose_interval * (behavior_.throttle_instance == own_ ? behavior_.throttle_factor : 1);
  env_.set_timer(id_, every, TimerToken{TimerKind::propose_tick});
}

void Replica::emit(const std::vector<Body>& bodies) {
  for (const auto& b : bodies) env_.broadcast(id_, make_message(signer_, b));
}

void Replica::on_message(const MessagePtr& msg) {
  if (!authentic(*msg, keys_)) {
    ++stats_.rejected_messages;
    return;
  }
  const Body& body = msg->body();
  if (std::holds_alternative<ClientRequest>(body)) return on_client_request(msg);
  if (std::holds_alternative<SwitchInstance>(body)) return on_switch_request(msg);
  if (std::holds_alternative<ClientReply>(body)) return;
  const InstanceId i = instance_of(body);
  if (msg->sender() >= cfg_.n || i < 1 || i > cfg_.m) {
    ++stats_.rejected_messages;
    return;
  }
  if (std::holds_alternative<PrePrepare>(body) || std::holds_alternative<Prepare>(body) ||
      std::holds_alternative<Commit>(body)) {
    return on_worker(msg, i);
  }
  if (std::holds_alternative<Failure>(body)) return on_failure(msg);
  if (std::holds_alternative<CheckpointMsg>(body)) return on_checkpoint(msg);
  handle_coord(i, coord_[i - 1].deliver(msg, validator(i)));
}

// --- worker instances --------------------------------------------------------

bool Replica::admissible(const PrePrepare& pp) const {
  if (!pp.txn) return false;
  if (pp.txn->is_noop()) return true;
  return verify_transaction(*pp.txn, keys_) && clients_.acceptable(pp.txn->client(), pp.instance, pp.round);
}

void Replica::on_worker(const MessagePtr& msg, InstanceId i) {
  if (const auto* pp = msg->as<PrePrepare>()) {
    if (msg->sender() == primary_of(i)) {
      if (!admissible(*pp)) {
        ++stats_.rejected_proposals;
        std::ostringstream os;
        os << "reject-proposal inst=" << i << " round=" << pp->round;
        env_.trace(id_, os.str());
        return;
      }
      observed_[i - 1] = std::max(observed_[i - 1], pp->round);
      if (!pp->txn->is_noop()) clients_.note_proposed(i, pp->txn->client(), env_.now());
    }
  }
  handle(i, inst(i).deliver(*msg), AcceptVia::normal);
}

void Replica::handle(InstanceId i, BcaOutput out, AcceptVia via) {
  emit(out.broadcasts);
  stats_.suspicions += out.suspicions.size();
  if (out.accepted.empty()) return;
  for (const auto& a : out.accepted) {
    std::ostringstream os;
    os << "accept inst=" << a.instance << " round=" << a.round << " digest=" << a.txn->digest().short_hex()
       << " via=" << to_string(via);
    env_.trace(id_, os.str());
    env_.on_accept(id_, a.instance, a.round, via);
    coordinator_.on_accepted(a.round, a.instance, a.txn);
    if (own_ == i) proposed_.erase(a.round);
    if (checkpoint_.triggered(a.round) && checkpoint_.claimed(a.instance, a.round)) contribute(a.round);
  }
  try_execute();
  arm_watches();
  check_lag();
}

void Replica::arm_watches() {
  Round top = kNoRound;
  for (const auto& w : instances_) top = std::max(top, w->last_accepted());
  for (InstanceId i = 1; i <= cfg_.m; ++i) {
    auto& w = inst(i);
    if (w.halted()) continue;
    const Round r = w.last_contiguous() + 1;
    if (r > top) continue;
    if (auto gen = w.expect(r)) {
      TimerToken t{TimerKind::watch, i, r, *gen};
      env_.set_timer(id_, w.timeout(), t);
    }
  }
}

void Replica::check_lag() {
  std::vector<Round> progress(cfg_.m);
  std::vector<bool> eligible(cfg_.m);
  Round best = kNoRound;
  for (InstanceId i = 1; i <= cfg_.m; ++i) {
    const auto& w = inst(i);
    progress[i - 1] = w.last_contiguous();
    if (!w.halted() && w.accepted_since_restart() && recovery_[i - 1].caught_up) best = std::max(best, progress[i - 1]);
  }
  for (InstanceId i = 1; i <= cfg_.m; ++i) {
    const auto& w = inst(i);
    auto& rec = recovery_[i - 1];
    // A restarted instance is only held to the lag rule once it caught up;
    // until then the watch timer covers it.
    if (!rec.caught_up && w.accepted_since_restart() && progress[i - 1] >= best - cfg_.sigma) rec.caught_up = true;
    eligible[i - 1] = !w.halted() && w.accepted_since_restart() && rec.caught_up;
  }
  for (InstanceId i : rcc::check_lag(progress, eligible, cfg_.sigma)) {
    detect(i, progress[i - 1] + 1, "lag");
  }
}

void Replica::try_execute() {
  if (env_.paused()) return;
  const Round before = coordinator_.next_round();
  auto ready = coordinator_.take_ready();
  for (const auto& r : ready) {
    std::ostringstream os;
    os << "execute round=" << r.round << " order=";
    if (r.ordered.empty()) {
      os << "-";
      env_.trace(id_, os.str());
      env_.on_execute(id_, r.round, nullptr);
      continue;
    }
    const Block& b = ledger_.execute_round(r.round, r.ordered);
    for (std::size_t k = 0; k < r.ordered.size(); ++k) {
      if (k) os << ',';
      os << r.ordered[k].instance << ':' << r.ordered[k].txn->digest().short_hex();
    }
    os << " clients=";
    for (std::size_t k = 0; k < r.ordered.size(); ++k) {
      if (k) os << ',';
      const auto& t = *r.ordered[k].txn;
      if (t.is_noop()) {
        os << '-';
      } else {
        os << t.client();
      }
    }
    os << " head=" << b.block_hash.short_hex() << " state=" << ledger_.state_digest().short_hex();
    env_.trace(id_, os.str());
    env_.on_execute(id_, r.round, &b);
    for (const auto& e : b.entries) {
      if (e.txn->is_noop() || e.duplicate) continue;
      env_.send(id_, client_node(e.txn->client()),
                make_message(signer_, ClientReply{e.txn->digest(), e.result_digest}));
    }
  }
  if (coordinator_.next_round() != before) {
    const Round next = coordinator_.next_round();
    checkpoint_.prune_below(next);
    my_contributions_.erase(my_contributions_.begin(), my_contributions_.lower_bound(next));
    check_lag();
  }
}

// --- primary -------------------------------------------------------------------

Round Replica::observed_running_max() const {
  Round best = kNoRound;
  for (InstanceId i = 1; i <= cfg_.m; ++i) {
    if (!instances_[i - 1]->halted()) best = std::max(best, observed_[i - 1]);
  }
  return best;
}

Round Replica::observed_other_max(bool with_restarts) const {
  Round best = kNoRound;
  for (InstanceId i = 1; i <= cfg_.m; ++i) {
    if (i == own_) continue;
    best = std::max(best, observed_[i - 1]);
    // Rounds skipped by a restart count as done.
    if (with_restarts) best = std::max(best, instances_[i - 1]->next_valid_round() - 1);
  }
  return best;
}

void Replica::enqueue(const TxnPtr& txn, bool urgent) {
  if (behavior_.censored.contains(txn->client())) return;
  if (known_.insert(key_of(*txn)).second) {
    if (urgent) {
      queue_.push_front(txn);
    } else {
      queue_.push_back(txn);
    }
    return;
  }
  if (!urgent) return;
  // Forwarded by a replica on the client's behalf: the grace timer is running.
  const auto it = std::find_if(queue_.begin(), queue_.end(), [&](const TxnPtr& t) { return key_of(*t) == key_of(*txn); });
  if (it == queue_.end()) return;
  TxnPtr moved = *it;
  queue_.erase(it);
  queue_.push_front(std::move(moved));
}

void Replica::try_propose() {
  if (!own_ || env_.paused()) return;
  auto& w = inst(own_);
  if (w.halted()) return;
  next_round_ = std::max(next_round_, w.next_valid_round());
  const Round other = observed_other_max(true);
  const bool alone = cfg_.m == 1;
  // A restarted primary far behind the others catches up in bursts.
  const int budget = next_round_ < observed_other_max(false) ? 64 : 1;
  for (int k = 0; k < budget; ++k) {
    const Round r = next_round_;
    if (r >= coordinator_.next_round() + cfg_.window) break;
    TxnPtr pick;
    bool waiting = false;
    for (auto it = queue_.begin(); it != queue_.end();) {
      const auto& t = **it;
      if (ledger_.reply_for(key_of(t))) {
        it = queue_.erase(it);
        continue;
      }
      if (clients_.may_propose(t.client(), own_, r)) {
        pick = *it;
        queue_.erase(it);
        break;
      }
      waiting = true;
      ++it;
    }
    if (pick) {
      if (!alone && r > other + 1) {
        queue_.push_front(pick);
        break;
      }
      ++stats_.txns_proposed;
    } else {
      // Transactions held back by a switch window need the rounds to move.
      const bool lead = waiting && (alone || r <= other + 1);
      if (!lead && (alone || r > other)) break;
      pick = noop_txn();
      ++stats_.noops_proposed;
    }
    BcaOutput out = w.propose(r, pick);
    proposed_[r] = pick;
    next_round_ = r + 1;
    std::ostringstream os;
    os << "propose inst=" << own_ << " round=" << r << " digest=" << pick->digest().short_hex() << " client=";
    if (pick->is_noop()) {
      os << '-';
    } else {
      os << pick->client();
    }
    env_.trace(id_, os.str());
    handle(own_, std::move(out), AcceptVia::normal);
  }
}

// --- failure detection and recovery -------------------------------------------

void Replica::detect(InstanceId i, Round round, const char* reason) {
  auto& rec = recovery_[i - 1];
  if (rec.detected) return;
  rec.detected = true;
  rec.round = round;
  rec.rebroadcasts = 0;
  ++rec.generation;
  ++stats_.detections;
  inst(i).halt();
  std::ostringstream os;
  os << "detect inst=" << i << " round=" << round << " reason=" << reason;
  env_.trace(id_, os.str());
  send_failure(i);
  env_.set_timer(id_, cfg_.base_timeout, TimerToken{TimerKind::failure_rebroadcast, i, round, rec.generation});
}

void Replica::send_failure(InstanceId i) {
  const auto& rec = recovery_[i - 1];
  auto state = std::make_shared<const CertificateList>(inst(i).recoverable_state());
  if (!cfg_.failure_state_to_leader_only) {
    env_.broadcast(id_, make_message(signer_, Failure{i, rec.round, state}));
    return;
  }
  const ReplicaId leader = coord_[i - 1].leader();
  const MessagePtr full = make_message(signer_, Failure{i, rec.round, state});
  const MessagePtr lean = make_message(signer_, Failure{i, rec.round, nullptr});
  for (ReplicaId r = 0; r < cfg_.n; ++r) env_.send(id_, r, r == leader ? full : lean);
}

void Replica::on_failure(const MessagePtr& msg) {
  const auto& f = *msg->as<Failure>();
  const InstanceId i = f.instance;
  if (checkpoint_.on_claim(msg->sender(), i, f.round)) {
    std::ostringstream os;
    os << "checkpoint-trigger round=" << f.round << " claims=" << checkpoint_.claims(f.round);
    env_.trace(id_, os.str());
  }
  if (checkpoint_.triggered(f.round)) contribute(f.round);

  // The sender missed a stop we applied; hand it the decisions.
  const auto& stops = stop_seqs_[i - 1];
  if (const auto it = stops.upper_bound(f.round); it != stops.end()) {
    for (const auto& d : coord_[i - 1].decisions_from(it->second)) {
      env_.send(id_, msg->sender(), make_message(signer_, d));
    }
  }

  const std::size_t count = failures_[i - 1].record(msg);
  auto& rec = recovery_[i - 1];
  if (count >= cfg_.f + 1 && !rec.detected && !rec.confirmed) {
    detect(i, inst(i).last_contiguous() + 1, "join");
  }
  if (count >= cfg_.nf() && !rec.confirmed) {
    rec.confirmed = true;
    std::ostringstream os;
    os << "confirm inst=" << i << " senders=" << count;
    env_.trace(id_, os.str());
    arm_leader_watch(i);
  }
  if (rec.confirmed) maybe_lead(i);
}

void Replica::arm_leader_watch(InstanceId i) {
  const auto& rec = recovery_[i - 1];
  TimerToken t{TimerKind::leader_watch, i, 0, rec.generation};
  env_.set_timer(id_, 2 * cfg_.base_timeout, t);
}

void Replica::maybe_lead(InstanceId i) {
  auto& c = coord_[i - 1];
  if (!c.is_leader() || c.proposal_in_flight()) return;
  if (recovery_[i - 1].confirmed) {
    auto evidence = failures_[i - 1].evidence(cfg_.nf());
    if (evidence.size() < cfg_.nf()) return;
    if (behavior_.bad_stop) evidence.pop_back();
    auto op = std::make_shared<const CoordOp>(StopOp{i, std::move(evidence)});
    handle_coord(i, c.propose(std::move(op)));
    return;
  }
  for (auto it = pending_switches_.begin(); it != pending_switches_.end();) {
    if (it->second.source != i) {
      ++it;
      continue;
    }
    SwitchOp op{i, it->second.request};
    if (validate_switch(i, op)) {
      it = pending_switches_.erase(it);
      continue;
    }
    handle_coord(i, c.propose(std::make_shared<const CoordOp>(std::move(op))));
    return;
  }
}

CoordinationInstance::Validator Replica::validator(InstanceId i) {
  return [this, i](const CoordOp& op) -> std::optional<std::string> {
    if (const auto* stop = std::get_if<StopOp>(&op)) {
      if (stop->instance != i) return "stop for another instance";
      return validate_stop(*stop, inst(i).next_valid_round(), cfg_, keys_);
    }
    return validate_switch(i, std::get<SwitchOp>(op));
  };
}

std::optional<std::string> Replica::validate_switch(InstanceId source, const SwitchOp& op) const {
  if (op.instance != source) return "switch for another instance";
  if (!op.request || !authentic(*op.request, keys_)) return "switch request fails authentication";
  const auto* sw = op.request->as<SwitchInstance>();
  if (!sw || op.request->sender() != client_node(sw->client)) return "malformed switch request";
  if (sw->target < 1 || sw->target > cfg_.m) return "switch target out of range";
  if (clients_.assigned(sw->client) != source || clients_.has_deferred(sw->client)) return "client not served here";
  if (auto last = clients_.last_switch_nonce(sw->client); last && *last >= sw->nonce) return "stale switch";
  return std::nullopt;
}

void Replica::handle_coord(InstanceId i, CoordOutput out) {
  emit(out.broadcasts);
  for (const auto& [to, body] : out.direct) env_.send(id_, to, make_message(signer_, body));
  for (const auto& r : out.rejected) {
    std::ostringstream os;
    os << "coord-reject inst=" << i << " reason=" << dashed(r);
    env_.trace(id_, os.str());
  }
  if (out.entered_view) {
    ++stats_.view_changes;
    std::ostringstream os;
    os << "viewchange inst=" << i << " view=" << *out.entered_view << " leader=" << coord_[i - 1].leader();
    env_.trace(id_, os.str());
  }
  if (out.decided) {
    apply_decision(i, out.decided->first, *out.decided->second);
    handle_coord(i, coord_[i - 1].advance(validator(i)));
  }
  maybe_lead(i);
}

void Replica::apply_decision(InstanceId i, std::uint64_t seq, const CoordOp& op) {
  if (const auto* stop = std::get_if<StopOp>(&op)) {
    apply_stop(i, seq, *stop);
  } else {
    apply_switch(i, std::get<SwitchOp>(op));
  }
}

void Replica::apply_stop(InstanceId i, std::uint64_t seq, const StopOp& op) {
  auto& w = inst(i);
  const Round old_restart = w.next_valid_round();
  const std::uint32_t stops = w.stop_count() + 1;
  const RecoveredState rs = recover_state(op, old_restart, stops);
  std::ostringstream os;
  os << "stop inst=" << i << " seq=" << seq << " rho=" << rs.last_round << " next=" << rs.next_valid
     << " stops=" << stops << " recovered=";
  if (rs.certs.empty()) os << '-';
  bool first = true;
  for (const auto& [round, cert] : rs.certs) {
    if (!first) os << ',';
    first = false;
    os << round << ':' << cert.txn->digest().short_hex();
  }
  env_.trace(id_, os.str());
  ++stats_.stops;

  BcaOutput out = w.restart(rs.next_valid, rs.certs, stops);
  stop_seqs_[i - 1].emplace(rs.next_valid, seq);
  failures_[i - 1].restart(rs.next_valid);
  auto& rec = recovery_[i - 1];
  rec.detected = false;
  rec.confirmed = false;
  rec.rebroadcasts = 0;
  ++rec.generation;
  rec.caught_up = false;

  if (own_ == i) {
    for (auto it = proposed_.begin(); it != proposed_.end() && it->first < rs.next_valid;) {
      const auto cert = rs.certs.find(it->first);
      const bool kept = cert != rs.certs.end() && cert->second.txn->digest() == it->second->digest();
      if (!kept && !it->second->is_noop()) queue_.push_front(it->second);
      it = proposed_.erase(it);
    }
    next_round_ = std::max(next_round_, rs.next_valid);
  }
  for (const auto& d : clients_.take_deferred(i)) activate_switch(d.client, i);

  handle(i, std::move(out), AcceptVia::recovered);
  coordinator_.mark_absent(i, old_restart, rs.next_valid);
  try_execute();
  arm_watches();
  check_lag();
}

void Replica::apply_switch(InstanceId i, const SwitchOp& op) {
  const auto& sw = *op.request->as<SwitchInstance>();
  pending_switches_.erase({sw.client, sw.nonce});
  clients_.note_switch_nonce(sw.client, sw.nonce);
  if (inst(sw.target).halted()) {
    clients_.defer(sw.client, sw.target, sw.nonce);
    std::ostringstream os;
    os << "switch-deferred client=" << sw.client << " from=" << i << " to=" << sw.target;
    env_.trace(id_, os.str());
    return;
  }
  activate_switch(sw.client, sw.target);
}

void Replica::activate_switch(ClientId c, InstanceId target) {
  const InstanceId from = clients_.assigned(c);
  const Round observed = observed_running_max();
  const SwitchWindows w = clients_.apply_switch(c, target, observed);
  std::ostringstream os;
  os << "switch client=" << c << " from=" << from << " to=" << target << " observed=" << observed
     << " stop_accept=" << w.stop_accept << " start_accept=" << w.start_accept
     << " propose_from=" << w.propose_from;
  env_.trace(id_, os.str());
  if (own_ == from && from != target) {
    std::erase_if(queue_, [&](const TxnPtr& t) {
      if (t->client() != c) return false;
      known_.erase(key_of(*t));
      return true;
    });
  }
}

// --- checkpoints -----------------------------------------------------------------

void Replica::contribute(Round round) {
  for (InstanceId i : checkpoint_.claimed_instances(round)) {
    auto cert = inst(i).commit_certificate(round);
    if (!cert || !checkpoint_.mark_contributed(i, round)) continue;
    auto msg = make_message(signer_, CheckpointMsg{round, i, *cert});
    auto& mine = my_contributions_[round];
    const bool first = mine.empty();
    mine.push_back(msg);
    ++stats_.checkpoint_msgs;
    std::ostringstream os;
    os << "checkpoint-send round=" << round << " inst=" << i;
    env_.trace(id_, os.str());
    env_.on_checkpoint_send(id_, round);
    env_.broadcast(id_, msg);
    if (first) env_.set_timer(id_, cfg_.base_timeout, TimerToken{TimerKind::checkpoint_retry, 0, round, 1});
  }
}

void Replica::on_checkpoint(const MessagePtr& msg) {
  const auto& cm = *msg->as<CheckpointMsg>();
  const InstanceId i = cm.instance;
  const Certificate& cert = cm.cert;
  if (cert.kind != CertKind::commit || cert.instance != i || cert.round != cm.round || !cert.txn) return;
  if (!verify_certificate(cert, cfg_.nf(), cfg_.n, keys_) || !verify_transaction(*cert.txn, keys_)) {
    ++stats_.rejected_messages;
    return;
  }
  auto adopted = checkpoint_.on_contribution(msg->sender(), cm);
  if (!adopted) return;
  ++stats_.checkpoint_adoptions;
  auto& w = inst(i);
  std::ostringstream os;
  os << "checkpoint-adopt inst=" << i << " round=" << cm.round << " digest=" << adopted->txn->digest().short_hex();
  env_.trace(id_, os.str());
  BcaOutput out = w.adopt(*adopted);
  failures_[i - 1].drop_through(cm.round);
  auto& rec = recovery_[i - 1];
  BcaOutput resumed;
  if (rec.detected && !rec.confirmed && rec.round <= cm.round && w.halted()) {
    resumed = w.resume();
    rec.detected = false;
    ++rec.generation;
    std::ostringstream r;
    r << "resume inst=" << i << " round=" << cm.round;
    env_.trace(id_, r.str());
  }
  handle(i, std::move(out), AcceptVia::checkpoint);
  handle(i, std::move(resumed), AcceptVia::normal);
}

// --- clients ----------------------------------------------------------------------

void Replica::on_client_request(const MessagePtr& msg) {
  const auto& req = *msg->as<ClientRequest>();
  if (!req.txn || req.txn->is_noop()) return;
  const auto& txn = *req.txn;
  const bool from_client = msg->sender() == client_node(txn.client());
  if (!from_client && msg->sender() >= cfg_.n) return;
  if (!verify_transaction(txn, keys_)) {
    ++stats_.rejected_messages;
    return;
  }
  const TxnKey key = key_of(txn);
  if (auto reply = ledger_.reply_for(key)) {
    if (from_client) env_.send(id_, msg->sender(), make_message(signer_, ClientReply{txn.digest(), *reply}));
    return;
  }
  const InstanceId target = clients_.assigned(txn.client());
  const bool incoming = std::any_of(pending_switches_.begin(), pending_switches_.end(), [&](const auto& kv) {
    return kv.first.first == txn.client() && kv.second.request->template as<SwitchInstance>()->target == own_;
  });
  if (own_ && (own_ == target || incoming)) {
    enqueue(req.txn, !from_client);
    return;
  }
  if (req.forced && from_client && forced_.emplace(key, target).second) {
    env_.send(id_, primary_of(target), make_message(signer_, ClientRequest{req.txn, false}));
    TimerToken t{TimerKind::forced_grace, target, observed_[target - 1], 0, txn.client(), txn.nonce(), env_.now()};
    env_.set_timer(id_, 2 * cfg_.base_timeout * cfg_.propose_interval, t);
  }
}

void Replica::on_switch_request(const MessagePtr& msg) {
  const auto& sw = *msg->as<SwitchInstance>();
  if (msg->sender() != client_node(sw.client)) return;
  const InstanceId source = clients_.assigned(sw.client);
  if (validate_switch(source, SwitchOp{source, msg})) return;
  if (!pending_switches_.emplace(std::pair{sw.client, sw.nonce}, PendingSwitch{msg, source}).second) return;
  env_.set_timer(id_, 2 * cfg_.base_timeout, TimerToken{TimerKind::switch_watch, source, 0, 0, sw.client, sw.nonce});
  maybe_lead(source);
}

// --- timers -----------------------------------------------------------------------

void Replica::on_timer(const TimerToken& t) {
  switch (t.kind) {
    case TimerKind::propose_tick:
      try_propose();
      start();
      return;
    case TimerKind::watch:
      if (auto fd = inst(t.instance).on_timeout(t.round, t.generation)) detect(fd->instance, fd->round, "timeout");
      return;
    case TimerKind::failure_rebroadcast: {
      auto& rec = recovery_[t.instance - 1];
      if (!rec.detected || rec.generation != t.generation) return;
      ++rec.rebroadcasts;
      send_failure(t.instance);
      env_.set_timer(id_, cfg_.base_timeout << std::min<std::uint32_t>(rec.rebroadcasts, 10), t);
      return;
    }
    case TimerKind::leader_watch: {
      const auto& rec = recovery_[t.instance - 1];
      if (!rec.confirmed || rec.generation != t.generation) return;
      handle_coord(t.instance, coord_[t.instance - 1].start_view_change());
      TimerToken next = t;
      next.round = t.round + 1;
      env_.set_timer(id_, (2 * cfg_.base_timeout) << std::min<Round>(next.round, 10), next);
      return;
    }
    case TimerKind::switch_watch: {
      const auto it = pending_switches_.find({t.client, t.nonce});
      if (it == pending_switches_.end()) return;
      if (validate_switch(it->second.source, SwitchOp{it->second.source, it->second.request})) {
        pending_switches_.erase(it);
        return;
      }
      handle_coord(t.instance, coord_[t.instance - 1].start_view_change());
      TimerToken next = t;
      next.round = t.round + 1;
      env_.set_timer(id_, (2 * cfg_.base_timeout) << std::min<Round>(next.round, 10), next);
      return;
    }
    case TimerKind::forced_grace: {
      if (ledger_.reply_for({t.client, t.nonce})) return;
      if (env_.paused()) {
        env_.set_timer(id_, 2 * cfg_.base_timeout * cfg_.propose_interval, t);
        return;
      }
      if (clients_.assigned(t.client) != t.instance) return;
      const auto last = clients_.last_proposed(t.instance, t.client);
      if (last && *last >= t.armed_at) return;
      // A primary that proposed nothing at all is stalled, not censoring;
      // the watch and lag rules handle it.
      if (observed_[t.instance - 1] <= t.round) return;
      auto& w = inst(t.instance);
      if (w.halted()) return;
      detect(t.instance, w.last_contiguous() + 1, "censorship");
      return;
    }
    case TimerKind::checkpoint_retry: {
      const auto it = my_contributions_.find(t.round);
      if (it == my_contributions_.end() || coordinator_.next_round() > t.round) return;
      if (t.generation > cfg_.checkpoint_retries) return;
      for (const auto& msg : it->second) {
        ++stats_.checkpoint_msgs;
        env_.broadcast(id_, msg);
      }
      TimerToken next = t;
      next.generation = t.generation + 1;
      env_.set_timer(id_, cfg_.base_timeout << std::min<std::uint64_t>(t.generation, 10), next);
      return;
    }
  }
}

void Replica::on_unpause() { try_execute(); }

}  // namespace rcc
