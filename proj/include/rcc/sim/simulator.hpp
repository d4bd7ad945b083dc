#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rcc/replica.hpp"
#include "rcc/sim/scenario.hpp"

namespace rcc::sim {

struct SecondSample {
  SimTime second = 0;
  std::uint64_t executed_txns = 0;
  std::uint64_t executed_commands = 0;
  std::uint64_t completed_requests = 0;
};

struct ReplicaSummary {
  ReplicaId id = 0;
  bool honest = true;
  Round last_round = kNoRound;
  std::size_t blocks = 0;
  Digest head;
  Digest state;
  bool replay_ok = false;
  bool chain_ok = false;
  std::uint64_t clamped = 0;
  ReplicaStats stats;
};

struct RunResult {
  std::string name;
  std::vector<std::string> trace;
  // Observer replica: the lowest-numbered honest one.
  ReplicaId observer = 0;
  std::vector<SecondSample> metrics;
  // accepts[second][instance - 1] at the observer.
  std::vector<std::vector<std::uint64_t>> instance_accepts;
  std::vector<std::string> ledger_dumps;
  std::vector<ReplicaSummary> replicas;
  std::optional<std::string> violation;

  std::uint64_t checkpoint_msgs = 0;
  std::uint64_t completed_requests = 0;
  std::uint64_t submitted_requests = 0;
  double mean_latency = 0;
  // Claim counts reported by every checkpoint trigger.
  std::vector<std::uint32_t> trigger_claims;
  // Honest replicas holding every dark (instance, round) when the first
  // checkpoint contribution went out; -1 without dark faults or checkpoints.
  int dark_holders_before_checkpoint = -1;
  // Honest replicas whose ledger reaches the last dark round.
  int dark_round_executors = 0;

  std::string trace_text() const;
  std::string metrics_csv() const;
  std::string instances_csv() const;
  std::string summary_json() const;
  // trace.txt, metrics.csv, instances.csv, summary.json, ledger_r<id>.txt.
  void write(const std::string& dir) const;
};

class Simulator final : public ReplicaEnv {
 public:
  explicit Simulator(Scenario scenario);
  ~Simulator() override;

  RunResult run();

  const Scenario& scenario() const { return scenario_; }
  const Replica& replica(ReplicaId r) const { return *replicas_[r]; }

  SimTime now() const override { return now_; }
  void broadcast(ReplicaId from, const MessagePtr& msg) override;
  void send(ReplicaId from, std::uint32_t to, const MessagePtr& msg) override;
  void set_timer(ReplicaId owner, SimTime delay, const TimerToken& token) override;
  void trace(ReplicaId from, const std::string& event) override;
  bool paused() const override;
  void on_accept(ReplicaId r, InstanceId i, Round round, AcceptVia via) override;
  void on_execute(ReplicaId r, Round round, const Block* block) override;
  void on_checkpoint_send(ReplicaId r, Round round) override;

 private:
  struct Deliver {
    std::uint32_t to = 0;
    MessagePtr msg;
  };
  struct Timer {
    ReplicaId owner = 0;
    TimerToken token;
  };
  struct ClientTick {
    ClientId client = 0;
  };
  struct ClientTimeout {
    ClientId client = 0;
    std::uint64_t nonce = 0;
  };
  struct Action {
    std::size_t index = 0;
  };
  struct Unpause {};
  using Payload = std::variant<Deliver, Timer, ClientTick, ClientTimeout, Action, Unpause>;
  struct Event {
    SimTime time = 0;
    std::uint64_t seq = 0;
    Payload payload;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  struct Pending {
    TxnPtr txn;
    SimTime sent = 0;
    std::map<Digest, std::set<ReplicaId>> replies;
    bool done = false;
    std::uint32_t stage = 0;
  };
  struct Client {
    ClientId id = 0;
    Signer signer;
    InstanceId belief = 1;
    std::uint64_t next_nonce = 1;
    std::uint64_t switch_nonce = 0;
    SimTime last_switch = -1;
    // Adversarial: sends every request to several primaries.
    std::vector<InstanceId> spray;
    std::map<std::uint64_t, Pending> pending;
  };

  void schedule(SimTime at, Payload p);
  void dispatch(const Event& e);
  void deliver(std::uint32_t to, const MessagePtr& msg);
  void transmit(ReplicaId from, std::uint32_t to, const MessagePtr& msg);
  bool crashed(ReplicaId r) const;
  MessagePtr outbound(ReplicaId from, std::uint32_t to, const MessagePtr& msg);
  bool partitioned(std::uint32_t a, std::uint32_t b) const;
  double drop_probability() const;
  SimTime link_delay();

  void client_tick(ClientId c);
  void client_timeout(ClientId c, std::uint64_t nonce);
  void client_reply(ClientId c, const MessagePtr& msg);
  void client_submit(Client& cl, const TxnPtr& txn, bool forced);
  void client_switch(Client& cl, InstanceId target);
  void run_action(const ClientAction& a);
  std::vector<Command> make_batch();

  void sample_second(SimTime second);
  RunResult finish();

  Scenario scenario_;
  KeyRing keys_;
  std::mt19937_64 rng_;
  std::vector<std::unique_ptr<Replica>> replicas_;
  std::vector<Client> clients_;
  std::set<ReplicaId> faulty_;
  std::map<ReplicaId, SimTime> crash_at_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  SimTime now_ = 0;
  SimTime end_ = 0;
  ReplicaId observer_ = 0;
  KvState genesis_;

  // Equivocation: the alternative proposal per (instance, round).
  std::map<std::pair<InstanceId, Round>, MessagePtr> forged_alt_;
  std::map<ReplicaId, TxnPtr> last_legit_;

  RunResult result_;
  std::vector<std::set<std::pair<InstanceId, Round>>> accepted_;
  std::set<std::pair<InstanceId, Round>> dark_slots_;
  Round last_dark_round_ = kNoRound;
  std::uint64_t completed_ = 0;
  std::uint64_t latency_sum_ = 0;
  std::map<SimTime, std::uint64_t> completed_per_second_;
  std::uint64_t observed_txns_ = 0;
  std::uint64_t observed_commands_ = 0;
  std::map<SimTime, std::pair<std::uint64_t, std::uint64_t>> executed_per_second_;
  std::map<SimTime, std::vector<std::uint64_t>> accepts_per_second_;
};

// Parses and validates, then runs.
RunResult run_scenario(const Scenario& s);

}  // namespace rcc::sim
