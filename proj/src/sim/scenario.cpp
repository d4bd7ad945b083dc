#include "rcc/sim/scenario.hpp"

#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace rcc::sim {

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::crash:
      return "crash";
    case FaultKind::equivocate:
      return "equivocate";
    case FaultKind::dark:
      return "dark";
    case FaultKind::throttle:
      return "throttle";
    case FaultKind::censor:
      return "censor";
    case FaultKind::bad_stop:
      return "bad_stop";
    case FaultKind::forge:
      return "forge";
  }
  return "?";
}

std::set<ReplicaId> Scenario::faulty() const {
  std::set<ReplicaId> s;
  for (const auto& f : faults) s.insert(f.replica);
  return s;
}

void Scenario::validate() const {
  system.validate();
  for (const auto& f : faults) {
    if (f.kind == FaultKind::forge) {
      throw ConfigError("replica " + std::to_string(f.replica) + " cannot forge other nodes' signatures");
    }
    if (f.replica >= system.n) throw ConfigError("fault names replica outside 0..n-1");
    if (f.kind == FaultKind::throttle && f.factor < 1) throw ConfigError("throttle factor must be >= 1");
    for (auto v : f.victims) {
      if (v >= system.n) throw ConfigError("victim outside 0..n-1");
    }
  }
  if (faulty().size() > system.f) {
    throw ConfigError("fault budget exceeded: " + std::to_string(faulty().size()) + " faulty replicas with f = " +
                      std::to_string(system.f));
  }
  if (horizon <= 0 || drain < 0) throw ConfigError("horizon must be positive");
  if (workload.interval <= 0 || workload.batch == 0 || workload.accounts < 2) {
    throw ConfigError("workload needs interval > 0, batch > 0, accounts >= 2");
  }
  if (network.delay < 0 || network.jitter < 0) throw ConfigError("negative network delay");
  for (const auto& a : workload.actions) {
    for (auto t : a.targets) {
      if (t < 1 || t > system.m) throw ConfigError("switch target outside 1..m");
    }
  }
}

namespace {

struct Line {
  int number = 0;
  std::string head;
  std::map<std::string, std::string> kv;
};

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("scenario line " + std::to_string(line) + ": " + what);
}

std::int64_t to_int(const Line& l, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto x = std::stoll(v, &used);
    if (used != v.size()) fail(l.number, "not an integer: " + v);
    return x;
  } catch (const std::logic_error&) {
    fail(l.number, "not an integer: " + v);
  }
}

double to_double(const Line& l, const std::string& v) {
  try {
    return std::stod(v);
  } catch (const std::logic_error&) {
    fail(l.number, "not a number: " + v);
  }
}

bool to_bool(const Line& l, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(l.number, "not a boolean: " + v);
}

const std::string& need(const Line& l, const std::string& key) {
  const auto it = l.kv.find(key);
  if (it == l.kv.end()) fail(l.number, "'" + l.head + "' needs " + key + "=");
  return it->second;
}

std::set<ReplicaId> id_set(const Line& l, const std::string& v) {
  std::set<ReplicaId> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(static_cast<ReplicaId>(to_int(l, item)));
  }
  return out;
}

void round_range(const Line& l, FaultSpec& f) {
  const auto it = l.kv.find("rounds");
  if (it == l.kv.end()) return;
  const auto dash = it->second.find('-');
  if (dash == std::string::npos) {
    f.from_round = f.to_round = to_int(l, it->second);
  } else {
    f.from_round = to_int(l, it->second.substr(0, dash));
    f.to_round = to_int(l, it->second.substr(dash + 1));
  }
}

void system_setting(Scenario& s, const Line& l, const std::string& key, const std::string& v) {
  auto& c = s.system;
  if (key == "n") c.n = static_cast<std::uint32_t>(to_int(l, v));
  else if (key == "f") c.f = static_cast<std::uint32_t>(to_int(l, v));
  else if (key == "m") c.m = static_cast<std::uint32_t>(to_int(l, v));
  else if (key == "sigma") c.sigma = to_int(l, v);
  else if (key == "base_timeout") c.base_timeout = to_int(l, v);
  else if (key == "window") c.window = to_int(l, v);
  else if (key == "max_timeout_doublings") c.max_timeout_doublings = static_cast<std::uint32_t>(to_int(l, v));
  else if (key == "ordering") c.ordering = parse_ordering(v);
  else if (key == "propose_interval") c.propose_interval = to_int(l, v);
  else if (key == "state_to_leader_only") c.failure_state_to_leader_only = to_bool(l, v);
  else if (key == "checkpoint_retries") c.checkpoint_retries = static_cast<std::uint32_t>(to_int(l, v));
  else if (key == "name") s.name = v;
  else fail(l.number, "unknown [system] key " + key);
}

void workload_setting(Scenario& s, const Line& l, const std::string& key, const std::string& v) {
  auto& w = s.workload;
  if (key == "clients") w.clients = static_cast<std::uint32_t>(to_int(l, v));
  else if (key == "interval") w.interval = to_int(l, v);
  else if (key == "batch") w.batch = static_cast<std::uint32_t>(to_int(l, v));
  else if (key == "accounts") w.accounts = static_cast<std::uint32_t>(to_int(l, v));
  else if (key == "initial_balance") w.initial_balance = static_cast<std::uint64_t>(to_int(l, v));
  else if (key == "write_ratio") w.write_ratio = to_double(l, v);
  else if (key == "client_timeout") w.client_timeout = to_int(l, v);
  else if (key == "horizon") s.horizon = to_int(l, v);
  else if (key == "drain") s.drain = to_int(l, v);
  else if (key == "seed") s.seed = static_cast<std::uint64_t>(to_int(l, v));
  else fail(l.number, "unknown [workload] key " + key);
}

void workload_command(Scenario& s, const Line& l) {
  ClientAction a;
  a.client = static_cast<ClientId>(to_int(l, need(l, "client")));
  a.at = to_int(l, need(l, "at"));
  if (l.head == "switch") {
    a.kind = ActionKind::switch_instance;
    a.targets.push_back(static_cast<InstanceId>(to_int(l, need(l, "to"))));
  } else if (l.head == "overlapping_switch") {
    a.kind = ActionKind::overlapping_switch;
    for (auto t : id_set(l, need(l, "targets"))) a.targets.push_back(t);
  } else {
    fail(l.number, "unknown workload action " + l.head);
  }
  s.workload.actions.push_back(std::move(a));
}

void fault_command(Scenario& s, const Line& l) {
  FaultSpec f;
  f.replica = static_cast<ReplicaId>(to_int(l, need(l, "replica")));
  if (l.head == "crash") {
    f.kind = FaultKind::crash;
    f.at = to_int(l, need(l, "at"));
  } else if (l.head == "equivocate" || l.head == "dark") {
    f.kind = l.head == "dark" ? FaultKind::dark : FaultKind::equivocate;
    f.victims = id_set(l, need(l, "victims"));
    round_range(l, f);
  } else if (l.head == "throttle") {
    f.kind = FaultKind::throttle;
    f.factor = static_cast<std::uint32_t>(to_int(l, need(l, "factor")));
  } else if (l.head == "censor") {
    f.kind = FaultKind::censor;
    f.client = static_cast<ClientId>(to_int(l, need(l, "client")));
  } else if (l.head == "bad_stop") {
    f.kind = FaultKind::bad_stop;
  } else if (l.head == "forge") {
    f.kind = FaultKind::forge;
  } else {
    fail(l.number, "unknown fault " + l.head);
  }
  s.faults.push_back(std::move(f));
}

void network_setting(Scenario& s, const Line& l, const std::string& key, const std::string& v) {
  if (key == "delay") s.network.delay = to_int(l, v);
  else if (key == "jitter") s.network.jitter = to_int(l, v);
  else fail(l.number, "unknown [network] key " + key);
}

void network_command(Scenario& s, const Line& l) {
  const SimTime from = to_int(l, need(l, "from"));
  const SimTime to = to_int(l, need(l, "to"));
  if (l.head == "drop") {
    const auto it = l.kv.find("prob");
    s.network.drops.push_back({from, to, it == l.kv.end() ? 1.0 : to_double(l, it->second)});
  } else if (l.head == "partition") {
    PartitionWindow p{from, to, {}};
    std::stringstream ss(need(l, "groups"));
    std::string group;
    while (std::getline(ss, group, '|')) p.groups.push_back(id_set(l, group));
    s.network.partitions.push_back(std::move(p));
  } else if (l.head == "pause") {
    s.network.pauses.push_back({from, to});
  } else {
    fail(l.number, "unknown network rule " + l.head);
  }
}

}  // namespace

Scenario parse_scenario(std::istream& in, const std::string& name) {
  Scenario s;
  s.name = name;
  std::string section;
  std::string raw;
  int number = 0;
  static const std::regex around_eq(R"(\s*=\s*)");
  while (std::getline(in, raw)) {
    ++number;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    raw = std::regex_replace(raw, around_eq, "=");
    std::istringstream ss(raw);
    std::vector<std::string> tokens;
    for (std::string t; ss >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (tokens.size() == 1 && tokens[0].front() == '[' && tokens[0].back() == ']') {
      section = tokens[0].substr(1, tokens[0].size() - 2);
      if (section != "system" && section != "workload" && section != "faults" && section != "network") {
        fail(number, "unknown section " + tokens[0]);
      }
      continue;
    }
    if (section.empty()) fail(number, "setting outside any section");
    Line l;
    l.number = number;
    if (tokens.size() == 1) {
      const auto eq = tokens[0].find('=');
      if (eq == std::string::npos) {
        l.head = tokens[0];
      } else {
        const std::string key = tokens[0].substr(0, eq);
        const std::string value = tokens[0].substr(eq + 1);
        if (section == "system") system_setting(s, l, key, value);
        else if (section == "workload") workload_setting(s, l, key, value);
        else if (section == "network") network_setting(s, l, key, value);
        else fail(number, "[faults] takes only fault lines");
        continue;
      }
    } else {
      l.head = tokens[0];
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        const auto eq = tokens[k].find('=');
        if (eq == std::string::npos) fail(number, "expected key=value, got " + tokens[k]);
        l.kv[tokens[k].substr(0, eq)] = tokens[k].substr(eq + 1);
      }
    }
    if (section == "faults") fault_command(s, l);
    else if (section == "workload") workload_command(s, l);
    else if (section == "network") network_command(s, l);
    else fail(number, "unexpected command in [system]");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path);
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name.erase(0, slash + 1);
  if (const auto dot = name.rfind('.'); dot != std::string::npos) name.erase(dot);
  return parse_scenario(in, name);
}

}  // namespace rcc::sim
