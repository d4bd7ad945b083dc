#include "rcc/sim/simulator.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rcc::sim {

namespace {

std::string account(std::uint64_t k) { return "acct" + std::to_string(k); }

std::string join_ids(const std::set<ReplicaId>& ids) {
  if (ids.empty()) return "-";
  std::string out;
  for (auto r : ids) {
    if (!out.empty()) out += ',';
    out += std::to_string(r);
  }
  return out;
}

bool in_rounds(const FaultSpec& f, Round r) { return r >= f.from_round && r <= f.to_round; }

}  // namespace

// --- results -------------------------------------------------------------------------

std::string RunResult::trace_text() const {
  std::string out;
  for (const auto& l : trace) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string RunResult::metrics_csv() const {
  std::ostringstream os;
  os << "second,executed_txns,executed_commands,completed_requests\n";
  for (const auto& s : metrics) {
    os << s.second << ',' << s.executed_txns << ',' << s.executed_commands << ',' << s.completed_requests << '\n';
  }
  return os.str();
}

std::string RunResult::instances_csv() const {
  std::ostringstream os;
  os << "second,instance,accepts\n";
  for (std::size_t s = 0; s < instance_accepts.size(); ++s) {
    for (std::size_t i = 0; i < instance_accepts[s].size(); ++i) {
      os << s << ',' << i + 1 << ',' << instance_accepts[s][i] << '\n';
    }
  }
  return os.str();
}

std::string RunResult::summary_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = name;
  j["observer"] = observer;
  j["violation"] = violation ? nlohmann::ordered_json(*violation) : nlohmann::ordered_json(nullptr);
  j["submitted_requests"] = submitted_requests;
  j["completed_requests"] = completed_requests;
  j["mean_latency"] = mean_latency;
  j["checkpoint_msgs"] = checkpoint_msgs;
  j["trigger_claims"] = trigger_claims;
  j["dark_holders_before_checkpoint"] = dark_holders_before_checkpoint;
  j["dark_round_executors"] = dark_round_executors;
  auto& reps = j["replicas"] = nlohmann::ordered_json::array();
  for (const auto& r : replicas) {
    nlohmann::ordered_json e;
    e["id"] = r.id;
    e["honest"] = r.honest;
    e["last_round"] = r.last_round;
    e["blocks"] = r.blocks;
    e["head"] = r.head.hex();
    e["state"] = r.state.hex();
    e["replay_ok"] = r.replay_ok;
    e["chain_ok"] = r.chain_ok;
    e["clamped"] = r.clamped;
    e["detections"] = r.stats.detections;
    e["stops"] = r.stats.stops;
    e["view_changes"] = r.stats.view_changes;
    e["checkpoint_msgs"] = r.stats.checkpoint_msgs;
    e["checkpoint_adoptions"] = r.stats.checkpoint_adoptions;
    e["txns_proposed"] = r.stats.txns_proposed;
    e["noops_proposed"] = r.stats.noops_proposed;
    e["rejected_proposals"] = r.stats.rejected_proposals;
    reps.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

void RunResult::write(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const auto put = [&](const std::string& file, const std::string& body) {
    std::ofstream out(dir + "/" + file, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + dir + "/" + file);
    out << body;
  };
  put("trace.txt", trace_text());
  put("metrics.csv", metrics_csv());
  put("instances.csv", instances_csv());
  put("summary.json", summary_json());
  for (std::size_t r = 0; r < ledger_dumps.size(); ++r) put("ledger_r" + std::to_string(r) + ".txt", ledger_dumps[r]);
}

// --- simulator ---------------------------------------------------------------------------

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)), keys_(scenario_.seed * 0x9E3779B97F4A7C15ull + 1), rng_(scenario_.seed) {
  scenario_.validate();
  const auto& cfg = scenario_.system;
  end_ = scenario_.horizon + scenario_.drain;
  faulty_ = scenario_.faulty();
  for (ReplicaId r = 0; r < cfg.n; ++r) {
    if (!faulty_.contains(r)) {
      observer_ = r;
      break;
    }
  }
  for (std::uint32_t k = 0; k < scenario_.workload.accounts; ++k) {
    genesis_.set_balance(account(k), scenario_.workload.initial_balance);
  }

  std::vector<Behavior> behaviors(cfg.n);
  for (const auto& f : scenario_.faults) {
    auto& b = behaviors[f.replica];
    switch (f.kind) {
      case FaultKind::crash:
        crash_at_[f.replica] = f.at;
        break;
      case FaultKind::throttle:
        b.throttle_instance = f.replica < cfg.m ? f.replica + 1 : 0;
        b.throttle_factor = f.factor;
        break;
      case FaultKind::censor:
        b.censored.insert(f.client);
        break;
      case FaultKind::bad_stop:
        b.bad_stop = true;
        break;
      case FaultKind::dark:
        if (f.replica < cfg.m && f.to_round != std::numeric_limits<Round>::max()) {
          for (Round r = f.from_round; r <= f.to_round; ++r) dark_slots_.insert({f.replica + 1, r});
          last_dark_round_ = std::max(last_dark_round_, f.to_round);
        }
        break;
      case FaultKind::equivocate:
      case FaultKind::forge:
        break;
    }
  }
  for (ReplicaId r = 0; r < cfg.n; ++r) {
    replicas_.push_back(std::make_unique<Replica>(cfg, r, keys_, *this, genesis_, behaviors[r]));
  }
  accepted_.resize(cfg.n);
  for (ClientId c = 0; c < scenario_.workload.clients; ++c) {
    clients_.push_back(Client{c, keys_.signer_for(client_node(c)), static_cast<InstanceId>(c % cfg.m) + 1, 1, 0, -1, {}, {}});
  }
}

Simulator::~Simulator() = default;

void Simulator::schedule(SimTime at, Payload p) { queue_.push(Event{at, seq_++, std::move(p)}); }

bool Simulator::crashed(ReplicaId r) const {
  const auto it = crash_at_.find(r);
  return it != crash_at_.end() && now_ >= it->second;
}

bool Simulator::paused() const {
  return std::any_of(scenario_.network.pauses.begin(), scenario_.network.pauses.end(),
                     [&](const PauseWindow& p) { return now_ >= p.from && now_ < p.to; });
}

bool Simulator::partitioned(std::uint32_t a, std::uint32_t b) const {
  if (is_client_node(a) || is_client_node(b)) return false;
  for (const auto& p : scenario_.network.partitions) {
    if (now_ < p.from || now_ >= p.to) continue;
    int ga = -1;
    int gb = -1;
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
      if (p.groups[g].contains(a)) ga = static_cast<int>(g);
      if (p.groups[g].contains(b)) gb = static_cast<int>(g);
    }
    if (ga >= 0 && gb >= 0 && ga != gb) return true;
  }
  return false;
}

double Simulator::drop_probability() const {
  double p = 0;
  for (const auto& d : scenario_.network.drops) {
    if (now_ >= d.from && now_ < d.to) p = std::max(p, d.probability);
  }
  return p;
}

SimTime Simulator::link_delay() {
  const SimTime j = scenario_.network.jitter;
  return scenario_.network.delay + (j > 0 ? static_cast<SimTime>(rng_() % static_cast<std::uint64_t>(j + 1)) : 0);
}

MessagePtr Simulator::outbound(ReplicaId from, std::uint32_t to, const MessagePtr& msg) {
  if (!faulty_.contains(from)) return msg;
  const auto* pp = msg->as<PrePrepare>();
  for (const auto& f : scenario_.faults) {
    if (f.replica != from) continue;
    if (f.kind == FaultKind::dark) {
      if (msg->as<CheckpointMsg>()) return nullptr;
      if (pp && pp->instance == from + 1 && in_rounds(f, pp->round) && f.victims.contains(to)) return nullptr;
    }
    if (f.kind == FaultKind::equivocate && pp && pp->instance == from + 1 && in_rounds(f, pp->round) &&
        f.victims.contains(to) && to != from) {
      const auto key = std::pair{pp->instance, pp->round};
      auto it = forged_alt_.find(key);
      if (it == forged_alt_.end()) {
        TxnPtr alt;
        if (!pp->txn->is_noop()) {
          alt = std::make_shared<const Transaction>(Transaction::noop());
        } else if (auto last = last_legit_.find(from); last != last_legit_.end()) {
          alt = last->second;
        }
        MessagePtr forged = alt ? make_message(keys_.signer_for(from), PrePrepare{pp->instance, pp->round, alt}) : nullptr;
        it = forged_alt_.emplace(key, forged).first;
      }
      return it->second;
    }
  }
  return msg;
}

void Simulator::transmit(ReplicaId from, std::uint32_t to, const MessagePtr& msg) {
  if (crashed(from)) return;
  const MessagePtr out = outbound(from, to, msg);
  if (!out) return;
  if (to == from) {
    schedule(now_, Deliver{to, out});
    return;
  }
  if (partitioned(from, to)) return;
  if (const double p = drop_probability(); p >= 1.0 || (p > 0 && (rng_() % 1000000) < p * 1000000)) return;
  schedule(now_ + link_delay(), Deliver{to, out});
}

void Simulator::broadcast(ReplicaId from, const MessagePtr& msg) {
  for (ReplicaId to = 0; to < scenario_.system.n; ++to) transmit(from, to, msg);
  // Recorded afterwards so an equivocation replays an earlier transaction.
  if (const auto* pp = msg->as<PrePrepare>(); pp && faulty_.contains(from) && !pp->txn->is_noop()) {
    last_legit_[from] = pp->txn;
  }
}

void Simulator::send(ReplicaId from, std::uint32_t to, const MessagePtr& msg) { transmit(from, to, msg); }

void Simulator::set_timer(ReplicaId owner, SimTime delay, const TimerToken& token) {
  schedule(now_ + std::max<SimTime>(delay, 1), Timer{owner, token});
}

void Simulator::trace(ReplicaId from, const std::string& event) {
  result_.trace.push_back("t=" + std::to_string(now_) + " r=" + std::to_string(from) + " " + event);
  if (event.rfind("checkpoint-trigger", 0) == 0) {
    const auto pos = event.find("claims=");
    if (pos != std::string::npos) result_.trigger_claims.push_back(std::stoul(event.substr(pos + 7)));
  }
}

void Simulator::on_accept(ReplicaId r, InstanceId i, Round round, AcceptVia) {
  accepted_[r].insert({i, round});
  if (r != observer_) return;
  auto& row = accepts_per_second_[now_ / kTicksPerSecond];
  row.resize(scenario_.system.m);
  ++row[i - 1];
}

void Simulator::on_execute(ReplicaId r, Round, const Block* block) {
  if (r != observer_ || !block) return;
  auto& cell = executed_per_second_[now_ / kTicksPerSecond];
  for (const auto& e : block->entries) {
    if (e.txn->is_noop() || e.duplicate) continue;
    ++cell.first;
    cell.second += e.txn->commands().size();
  }
}

void Simulator::on_checkpoint_send(ReplicaId r, Round) {
  if (result_.dark_holders_before_checkpoint >= 0 || dark_slots_.empty() || faulty_.contains(r)) return;
  int holders = 0;
  for (ReplicaId h = 0; h < scenario_.system.n; ++h) {
    if (faulty_.contains(h)) continue;
    if (std::all_of(dark_slots_.begin(), dark_slots_.end(), [&](const auto& s) { return accepted_[h].contains(s); })) {
      ++holders;
    }
  }
  result_.dark_holders_before_checkpoint = holders;
}

// --- clients ----------------------------------------------------------------------------

std::vector<Command> Simulator::make_batch() {
  const auto& w = scenario_.workload;
  std::vector<Command> out;
  for (std::uint32_t k = 0; k < w.batch; ++k) {
    const std::uint64_t a = rng_() % w.accounts;
    const bool write = static_cast<double>(rng_() % 1000) < w.write_ratio * 1000;
    if (write) {
      std::uint64_t b = rng_() % (w.accounts - 1);
      if (b >= a) ++b;
      const std::uint64_t amount = 1 + rng_() % 10;
      out.push_back(Transfer{account(a), account(b), amount, amount});
    } else {
      out.push_back(Get{account(a)});
    }
  }
  return out;
}

void Simulator::client_submit(Client& cl, const TxnPtr& txn, bool forced) {
  const MessagePtr msg = make_message(cl.signer, ClientRequest{txn, forced});
  const auto route = [&](ReplicaId to) {
    if (const double p = drop_probability(); p >= 1.0 || (p > 0 && (rng_() % 1000000) < p * 1000000)) return;
    schedule(now_ + link_delay(), Deliver{to, msg});
  };
  if (forced) {
    for (ReplicaId r = 0; r < scenario_.system.n; ++r) route(r);
    return;
  }
  std::set<InstanceId> targets(cl.spray.begin(), cl.spray.end());
  targets.insert(cl.belief);
  for (auto t : targets) route(primary_of(t));
}

void Simulator::client_switch(Client& cl, InstanceId target) {
  const MessagePtr msg = make_message(cl.signer, SwitchInstance{cl.id, target, ++cl.switch_nonce});
  for (ReplicaId r = 0; r < scenario_.system.n; ++r) schedule(now_ + link_delay(), Deliver{r, msg});
  result_.trace.push_back("t=" + std::to_string(now_) + " c=" + std::to_string(cl.id) +
                          " switch-request to=" + std::to_string(target) + " nonce=" + std::to_string(cl.switch_nonce));
  cl.belief = target;
  cl.last_switch = now_;
}

void Simulator::client_tick(ClientId c) {
  if (now_ >= scenario_.horizon) return;
  schedule(now_ + scenario_.workload.interval, ClientTick{c});
  if (paused()) return;
  auto& cl = clients_[c];
  const std::uint64_t nonce = cl.next_nonce++;
  auto txn = std::make_shared<const Transaction>(Transaction::signed_by(cl.signer, c, nonce, make_batch()));
  cl.pending[nonce] = Pending{txn, now_, {}, false, 0};
  ++result_.submitted_requests;
  client_submit(cl, txn, false);
  schedule(now_ + scenario_.workload.client_timeout, ClientTimeout{c, nonce});
}

void Simulator::client_timeout(ClientId c, std::uint64_t nonce) {
  auto& cl = clients_[c];
  const auto it = cl.pending.find(nonce);
  if (it == cl.pending.end() || now_ >= end_) return;
  const SimTime wait = scenario_.workload.client_timeout;
  schedule(now_ + wait, ClientTimeout{c, nonce});
  if (paused()) return;
  auto& p = it->second;
  if (++p.stage == 1) {
    result_.trace.push_back("t=" + std::to_string(now_) + " c=" + std::to_string(c) + " force nonce=" +
                            std::to_string(nonce) + " digest=" + p.txn->digest().short_hex());
  }
  if (p.stage == 2 && scenario_.system.m > 1 && (cl.last_switch < 0 || now_ - cl.last_switch >= 2 * wait)) {
    client_switch(cl, cl.belief % scenario_.system.m + 1);
  }
  client_submit(cl, p.txn, true);
}

void Simulator::client_reply(ClientId c, const MessagePtr& msg) {
  if (c >= clients_.size() || !authentic(*msg, keys_) || msg->sender() >= scenario_.system.n) return;
  const auto* reply = msg->as<ClientReply>();
  if (!reply) return;
  auto& cl = clients_[c];
  for (auto it = cl.pending.begin(); it != cl.pending.end(); ++it) {
    if (it->second.txn->digest() != reply->txn) continue;
    auto& voters = it->second.replies[reply->result];
    voters.insert(msg->sender());
    if (voters.size() >= scenario_.system.f + 1) {
      if (it->second.stage > 0) {
        result_.trace.push_back("t=" + std::to_string(now_) + " c=" + std::to_string(c) + " forced-complete nonce=" +
                                std::to_string(it->first) + " digest=" + reply->txn.short_hex());
      }
      ++completed_;
      latency_sum_ += static_cast<std::uint64_t>(now_ - it->second.sent);
      ++completed_per_second_[now_ / kTicksPerSecond];
      cl.pending.erase(it);
    }
    return;
  }
}

void Simulator::run_action(const ClientAction& a) {
  if (a.client >= clients_.size()) return;
  auto& cl = clients_[a.client];
  if (a.kind == ActionKind::switch_instance) {
    client_switch(cl, a.targets.front());
    return;
  }
  const InstanceId before = cl.belief;
  for (auto t : a.targets) client_switch(cl, t);
  cl.spray = a.targets;
  cl.spray.push_back(before);
}

// --- event loop -------------------------------------------------------------------------

void Simulator::deliver(std::uint32_t to, const MessagePtr& msg) {
  if (is_client_node(to)) return client_reply(to - kClientNodeBase, msg);
  if (crashed(to)) return;
  replicas_[to]->on_message(msg);
}

void Simulator::dispatch(const Event& e) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Deliver>) {
          deliver(p.to, p.msg);
        } else if constexpr (std::is_same_v<T, Timer>) {
          if (!crashed(p.owner)) replicas_[p.owner]->on_timer(p.token);
        } else if constexpr (std::is_same_v<T, ClientTick>) {
          client_tick(p.client);
        } else if constexpr (std::is_same_v<T, ClientTimeout>) {
          client_timeout(p.client, p.nonce);
        } else if constexpr (std::is_same_v<T, Action>) {
          run_action(scenario_.workload.actions[p.index]);
        } else {
          for (auto& r : replicas_) {
            if (!crashed(r->id())) r->on_unpause();
          }
        }
      },
      e.payload);
}

RunResult Simulator::run() {
  const auto& cfg = scenario_.system;
  {
    std::ostringstream os;
    os << "meta scenario=" << scenario_.name << " n=" << cfg.n << " f=" << cfg.f << " m=" << cfg.m
       << " sigma=" << cfg.sigma << " base_timeout=" << cfg.base_timeout << " seed=" << scenario_.seed << " horizon=" << scenario_.horizon << " end=" << end_
       << " faulty=" << join_ids(faulty_) << " observer=" << observer_ << " lossy=" << scenario_.network.lossy()
       << " paused=" << !scenario_.network.pauses.empty() << " ordering=" << to_string(cfg.ordering);
    result_.trace.push_back(os.str());
  }
  for (const auto& f : scenario_.faults) {
    std::ostringstream os;
    os << "fault kind=" << to_string(f.kind) << " replica=" << f.replica;
    if (f.kind == FaultKind::crash) os << " at=" << f.at;
    result_.trace.push_back(os.str());
  }
  for (auto& r : replicas_) r->start();
  const auto& w = scenario_.workload;
  for (ClientId c = 0; c < clients_.size(); ++c) {
    schedule(static_cast<SimTime>(c) * w.interval / std::max<std::uint32_t>(w.clients, 1), ClientTick{c});
  }
  for (std::size_t k = 0; k < w.actions.size(); ++k) schedule(w.actions[k].at, Action{k});
  for (const auto& p : scenario_.network.pauses) schedule(p.to, Unpause{});

  try {
    while (!queue_.empty()) {
      Event e = queue_.top();
      if (e.time > end_) break;
      queue_.pop();
      now_ = e.time;
      dispatch(e);
    }
  } catch (const ProtocolViolation& v) {
    result_.violation = v.what();
    result_.trace.push_back("t=" + std::to_string(now_) + " violation " + v.what());
  }
  now_ = end_;
  return finish();
}

RunResult Simulator::finish() {
  const auto& cfg = scenario_.system;
  RunResult& res = result_;
  res.name = scenario_.name;
  res.observer = observer_;
  for (ReplicaId r = 0; r < cfg.n; ++r) {
    const auto& rep = *replicas_[r];
    const auto& led = rep.ledger();
    ReplicaSummary s;
    s.id = r;
    s.honest = !faulty_.contains(r);
    s.last_round = rep.coordinator().next_round() - 1;
    s.blocks = led.blocks().size();
    s.head = led.head();
    s.state = led.state_digest();
    s.chain_ok = verify_chain(led.blocks());
    s.replay_ok = replay(genesis_, led.blocks()).digest() == s.state;
    s.clamped = led.state().clamped_withdrawals();
    s.stats = rep.stats();
    res.checkpoint_msgs += s.stats.checkpoint_msgs;
    if (s.honest && last_dark_round_ != kNoRound && s.last_round >= last_dark_round_) ++res.dark_round_executors;
    std::ostringstream os;
    os << "final r=" << r << " honest=" << s.honest << " rounds=" << s.last_round + 1 << " blocks=" << s.blocks
       << " head=" << s.head.short_hex() << " state=" << s.state.short_hex()
       << " replay=" << (s.replay_ok ? "ok" : "bad") << " chain=" << (s.chain_ok ? "ok" : "bad")
       << " clamped=" << s.clamped;
    res.trace.push_back(os.str());
    std::ostringstream dump;
    led.dump(dump);
    res.ledger_dumps.push_back(dump.str());
    res.replicas.push_back(s);
  }
  const SimTime seconds = (end_ + kTicksPerSecond - 1) / kTicksPerSecond;
  for (SimTime s = 0; s < seconds; ++s) {
    SecondSample sample{s, 0, 0, 0};
    if (auto it = executed_per_second_.find(s); it != executed_per_second_.end()) {
      sample.executed_txns = it->second.first;
      sample.executed_commands = it->second.second;
    }
    if (auto it = completed_per_second_.find(s); it != completed_per_second_.end()) sample.completed_requests = it->second;
    res.metrics.push_back(sample);
    auto row = std::vector<std::uint64_t>(cfg.m, 0);
    if (auto it = accepts_per_second_.find(s); it != accepts_per_second_.end()) row = it->second;
    res.instance_accepts.push_back(std::move(row));
  }
  res.completed_requests = completed_;
  res.mean_latency = completed_ ? static_cast<double>(latency_sum_) / static_cast<double>(completed_) : 0.0;
  return std::move(result_);
}

RunResult run_scenario(const Scenario& s) {
  Simulator sim(s);
  return sim.run();
}

}  // namespace rcc::sim
