#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "rcc/types.hpp"

namespace rcc::sim {

enum class FaultKind { crash, equivocate, dark, throttle, censor, bad_stop, forge };

const char* to_string(FaultKind k);

struct FaultSpec {
  FaultKind kind = FaultKind::crash;
  ReplicaId replica = 0;
  SimTime at = 0;                   // crash
  std::set<ReplicaId> victims;      // equivocate, dark
  Round from_round = 0;             // equivocate, dark
  Round to_round = std::numeric_limits<Round>::max();
  std::uint32_t factor = 1;         // throttle
  ClientId client = 0;              // censor
};

struct DropWindow {
  SimTime from = 0;
  SimTime to = 0;
  double probability = 1.0;
};

struct PartitionWindow {
  SimTime from = 0;
  SimTime to = 0;
  std::vector<std::set<ReplicaId>> groups;
};

struct PauseWindow {
  SimTime from = 0;
  SimTime to = 0;
};

struct NetworkSpec {
  SimTime delay = 1;
  SimTime jitter = 0;
  std::vector<DropWindow> drops;
  std::vector<PartitionWindow> partitions;
  std::vector<PauseWindow> pauses;

  bool lossy() const { return !drops.empty() || !partitions.empty(); }
};

enum class ActionKind { switch_instance, overlapping_switch };

struct ClientAction {
  ActionKind kind = ActionKind::switch_instance;
  SimTime at = 0;
  ClientId client = 0;
  std::vector<InstanceId> targets;
};

struct Workload {
  std::uint32_t clients = 8;
  // Each client submits one transaction every `interval` units.
  SimTime interval = 10;
  std::uint32_t batch = 10;
  std::uint32_t accounts = 64;
  std::uint64_t initial_balance = 1000;
  double write_ratio = 0.9;
  SimTime client_timeout = 400;
  std::vector<ClientAction> actions;
};

struct Scenario {
  std::string name = "unnamed";
  SystemConfig system;
  Workload workload;
  std::vector<FaultSpec> faults;
  NetworkSpec network;
  // Clients submit until `horizon`; the run ends at horizon + drain.
  SimTime horizon = 1000;
  SimTime drain = 1000;
  std::uint64_t seed = 1;

  std::set<ReplicaId> faulty() const;
  // Throws ConfigError on an invalid system, a fault budget above f, or a
  // script that asks for forged signatures.
  void validate() const;
};

// Sections [system], [workload], [faults], [network]; see docs/scenarios.md.
Scenario parse_scenario(std::istream& in, const std::string& name = "unnamed");
Scenario load_scenario(const std::string& path);

}  // namespace rcc::sim
