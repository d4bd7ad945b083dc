#include "rcc/check/trace_checker.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <sstream>

namespace rcc::check {

const char* to_string(Status s) {
  switch (s) {
    case Status::pass:
      return "PASS";
    case Status::fail:
      return "FAIL";
    case Status::skipped:
      return "SKIP";
  }
  return "?";
}

bool CheckReport::ok() const {
  for (const auto& r : results) {
    if (r.status == Status::fail) return false;
  }
  return true;
}

const InvariantResult* CheckReport::find(const std::string& name) const {
  for (const auto& r : results) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

void CheckReport::print(std::ostream& out) const {
  for (const auto& r : results) {
    out << to_string(r.status) << ' ' << r.name;
    if (!r.detail.empty()) out << ": " << r.detail;
    out << '\n';
  }
}

namespace {

using Fields = std::map<std::string, std::string>;

struct Event {
  std::int64_t t = 0;
  std::uint32_t replica = 0;
  std::string kind;
  Fields f;
};

Fields parse_fields(std::istringstream& in) {
  Fields out;
  for (std::string tok; in >> tok;) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

std::int64_t num(const Fields& f, const std::string& key, std::int64_t fallback = 0) {
  const auto it = f.find(key);
  if (it == f.end() || it->second.empty() || it->second == "-") return fallback;
  return std::stoll(it->second);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty() || s == "-") return out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  return out;
}

struct Trace {
  Fields meta;
  std::set<std::uint32_t> faulty;
  std::vector<Event> events;
  std::vector<Fields> finals;
  std::vector<std::string> violations;
  std::uint32_t n = 0;
  std::uint32_t f = 0;
  std::int64_t end = 0;
  std::int64_t margin = 0;
  bool lossy = false;
  bool paused = false;
  bool has_faults = false;

  bool honest(std::uint32_t r) const { return !faulty.contains(r); }
};

Trace parse(std::istream& in) {
  Trace tr;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ss(line);
    std::string head;
    if (!(ss >> head)) continue;
    if (head == "meta") {
      tr.meta = parse_fields(ss);
      continue;
    }
    if (head == "fault") {
      tr.has_faults = true;
      continue;
    }
    if (head == "final") {
      tr.finals.push_back(parse_fields(ss));
      continue;
    }
    if (head.rfind("t=", 0) != 0) continue;
    std::string who;
    ss >> who;
    if (who == "violation") {
      tr.violations.push_back(line);
      continue;
    }
    if (who.rfind("r=", 0) != 0) continue;
    Event e;
    e.t = std::stoll(head.substr(2));
    e.replica = static_cast<std::uint32_t>(std::stoul(who.substr(2)));
    ss >> e.kind;
    e.f = parse_fields(ss);
    tr.events.push_back(std::move(e));
  }
  tr.n = static_cast<std::uint32_t>(num(tr.meta, "n"));
  tr.f = static_cast<std::uint32_t>(num(tr.meta, "f"));
  tr.end = num(tr.meta, "end");
  tr.margin = 8 * num(tr.meta, "base_timeout", 50);
  tr.lossy = num(tr.meta, "lossy") != 0;
  tr.paused = num(tr.meta, "paused") != 0;
  for (const auto& id : split(tr.meta["faulty"], ',')) tr.faulty.insert(static_cast<std::uint32_t>(std::stoul(id)));
  return tr;
}

using Slot = std::pair<std::int64_t, std::int64_t>;  // (instance, round)

InvariantResult fault_budget(const Trace& tr) {
  InvariantResult r{"fault-budget", Status::pass, ""};
  if (tr.meta.empty()) return {"fault-budget", Status::fail, "trace has no meta line"};
  if (tr.faulty.size() > tr.f) {
    r.status = Status::fail;
    r.detail = std::to_string(tr.faulty.size()) + " misbehaving replicas with f = " + std::to_string(tr.f);
  }
  return r;
}

InvariantResult no_violation(const Trace& tr) {
  if (tr.violations.empty()) return {"no-violation", Status::pass, ""};
  return {"no-violation", Status::fail, tr.violations.front()};
}

InvariantResult agreement(const Trace& tr) {
  std::map<Slot, std::pair<std::string, std::uint32_t>> seen;
  for (const auto& e : tr.events) {
    if (e.kind != "accept" || !tr.honest(e.replica)) continue;
    const Slot s{num(e.f, "inst"), num(e.f, "round")};
    const std::string& d = e.f.at("digest");
    auto [it, fresh] = seen.emplace(s, std::pair{d, e.replica});
    if (!fresh && it->second.first != d) {
      std::ostringstream os;
      os << "instance " << s.first << " round " << s.second << ": r" << it->second.second << " accepted "
         << it->second.first << ", r" << e.replica << " accepted " << d;
      return {"agreement", Status::fail, os.str()};
    }
  }
  return {"agreement", Status::pass, std::to_string(seen.size()) + " slots"};
}

InvariantResult execution_order(const Trace& tr) {
  // round -> (order, state) of the first honest replica to execute it.
  std::map<std::int64_t, std::tuple<std::string, std::string, std::uint32_t>> first;
  std::size_t compared = 0;
  for (const auto& e : tr.events) {
    if (e.kind != "execute" || !tr.honest(e.replica)) continue;
    const auto round = num(e.f, "round");
    const std::string order = e.f.at("order");
    const auto st = e.f.find("state");
    const std::string state = st == e.f.end() ? "" : st->second;
    auto [it, fresh] = first.emplace(round, std::tuple{order, state, e.replica});
    if (fresh) continue;
    ++compared;
    const auto& [o, s, who] = it->second;
    if (o != order || (!s.empty() && !state.empty() && s != state)) {
      std::ostringstream os;
      os << "round " << round << ": r" << who << " executed " << o << ", r" << e.replica << " executed " << order;
      return {"execution-order", Status::fail, os.str()};
    }
  }
  return {"execution-order", Status::pass, std::to_string(compared) + " comparisons"};
}

InvariantResult final_state(const Trace& tr) {
  std::map<std::int64_t, std::pair<std::string, std::string>> by_rounds;
  for (const auto& f : tr.finals) {
    if (num(f, "honest") == 0) continue;
    const auto rounds = num(f, "rounds");
    const std::pair<std::string, std::string> v{f.at("head"), f.at("state")};
    auto [it, fresh] = by_rounds.emplace(rounds, v);
    if (!fresh && it->second != v) {
      return {"final-state", Status::fail,
              "replicas with " + std::to_string(rounds) + " executed rounds disagree on state or head"};
    }
  }
  if (tr.finals.empty()) return {"final-state", Status::skipped, "no final lines"};
  return {"final-state", Status::pass, ""};
}

InvariantResult ledger_integrity(const Trace& tr) {
  if (tr.finals.empty()) return {"ledger-integrity", Status::skipped, "no final lines"};
  for (const auto& f : tr.finals) {
    if (f.at("replay") != "ok" || f.at("chain") != "ok") {
      return {"ledger-integrity", Status::fail, "replica " + f.at("r") + " ledger does not replay or chain"};
    }
  }
  return {"ledger-integrity", Status::pass, ""};
}

InvariantResult recovery(const Trace& tr) {
  struct StopRecord {
    std::string signature;
    std::int64_t rho = 0;
    std::int64_t next = 0;
    std::int64_t stops = 0;
    std::map<std::int64_t, std::string> recovered;
  };
  // instance -> seq -> record
  std::map<std::int64_t, std::map<std::int64_t, StopRecord>> stops;
  for (const auto& e : tr.events) {
    if (e.kind != "stop" || !tr.honest(e.replica)) continue;
    StopRecord rec;
    rec.rho = num(e.f, "rho");
    rec.next = num(e.f, "next");
    rec.stops = num(e.f, "stops");
    rec.signature = e.f.at("rho") + "/" + e.f.at("next") + "/" + e.f.at("stops") + "/" + e.f.at("recovered");
    for (const auto& item : split(e.f.at("recovered"), ',')) {
      const auto colon = item.find(':');
      rec.recovered[std::stoll(item.substr(0, colon))] = item.substr(colon + 1);
    }
    const auto inst = num(e.f, "inst");
    const auto seq = num(e.f, "seq");
    auto [it, fresh] = stops[inst].emplace(seq, rec);
    if (!fresh && it->second.signature != rec.signature) {
      return {"recovery", Status::fail,
              "instance " + std::to_string(inst) + " stop " + std::to_string(seq) + " differs between replicas"};
    }
    if (rec.next != rec.rho + (std::int64_t{1} << rec.stops)) {
      return {"recovery", Status::fail, "instance " + std::to_string(inst) + " restart round is not rho + 2^stops"};
    }
  }
  if (stops.empty()) return {"recovery", Status::skipped, "no stop decisions"};

  // Epoch boundaries per instance: [start, next) for each stop in order.
  for (const auto& [inst, seqs] : stops) {
    std::int64_t start = 0;
    std::int64_t k = 0;
    std::vector<std::tuple<std::int64_t, std::int64_t, const StopRecord*>> epochs;
    for (const auto& [seq, rec] : seqs) {
      if (rec.next <= start || rec.stops != ++k) {
        return {"recovery", Status::fail, "instance " + std::to_string(inst) + " restart rounds not monotone"};
      }
      epochs.emplace_back(start, rec.next, &rec);
      start = rec.next;
    }
    for (const auto& e : tr.events) {
      if (e.kind != "accept" || !tr.honest(e.replica) || num(e.f, "inst") != inst) continue;
      if (e.f.at("via") == "recovered") continue;
      const auto round = num(e.f, "round");
      for (const auto& [from, to, rec] : epochs) {
        if (round < from || round >= to) continue;
        const auto it = rec->recovered.find(round);
        if (it == rec->recovered.end() || it->second != e.f.at("digest")) {
          return {"recovery", Status::fail,
                  "instance " + std::to_string(inst) + " round " + std::to_string(round) + " accepted by r" +
                      std::to_string(e.replica) + " missing from recovered state"};
        }
      }
    }
  }
  std::size_t total = 0;
  for (const auto& [inst, seqs] : stops) total += seqs.size();
  return {"recovery", Status::pass, std::to_string(total) + " stop decisions"};
}

InvariantResult quorum_acceptance(const Trace& tr) {
  if (tr.lossy) return {"quorum-acceptance", Status::skipped, "lossy network"};
  std::set<std::int64_t> confirmed;
  for (const auto& e : tr.events) {
    if (e.kind == "confirm" && tr.honest(e.replica)) confirmed.insert(num(e.f, "inst"));
  }
  std::map<Slot, std::set<std::uint32_t>> accepters;
  for (const auto& e : tr.events) {
    if (e.kind != "accept" || !tr.honest(e.replica)) continue;
    accepters[{num(e.f, "inst"), num(e.f, "round")}].insert(e.replica);
  }
  const std::size_t need = tr.n - 2 * tr.f;
  std::size_t checked = 0;
  for (const auto& e : tr.events) {
    if (e.kind != "accept" || !tr.honest(e.replica) || e.f.at("via") != "normal") continue;
    if (e.t > tr.end - tr.margin) continue;
    const Slot s{num(e.f, "inst"), num(e.f, "round")};
    if (confirmed.contains(s.first)) continue;
    ++checked;
    if (accepters[s].size() < need) {
      return {"quorum-acceptance", Status::fail,
              "instance " + std::to_string(s.first) + " round " + std::to_string(s.second) + " accepted by only " +
                  std::to_string(accepters[s].size()) + " honest replicas"};
    }
  }
  return {"quorum-acceptance", Status::pass, std::to_string(checked) + " accepts"};
}

InvariantResult liveness(const Trace& tr) {
  if (tr.has_faults || tr.lossy || tr.paused) return {"liveness", Status::skipped, "not a failure-free run"};
  std::size_t honest = 0;
  for (std::uint32_t r = 0; r < tr.n; ++r) honest += tr.honest(r);
  std::map<Slot, std::pair<std::int64_t, std::set<std::uint32_t>>> accepters;
  for (const auto& e : tr.events) {
    if (e.kind == "detect") {
      return {"liveness", Status::fail, "failure detected in a failure-free run at t=" + std::to_string(e.t)};
    }
    if (e.kind != "accept") continue;
    auto& a = accepters[{num(e.f, "inst"), num(e.f, "round")}];
    if (a.second.empty()) a.first = e.t;
    a.second.insert(e.replica);
  }
  for (const auto& [s, a] : accepters) {
    if (a.first > tr.end - tr.margin) continue;
    if (a.second.size() != honest) {
      return {"liveness", Status::fail,
              "instance " + std::to_string(s.first) + " round " + std::to_string(s.second) + " accepted by " +
                  std::to_string(a.second.size()) + " of " + std::to_string(honest) + " replicas"};
    }
  }
  return {"liveness", Status::pass, std::to_string(accepters.size()) + " slots"};
}

InvariantResult single_proposer(const Trace& tr) {
  std::size_t rounds = 0;
  for (const auto& e : tr.events) {
    if (e.kind != "execute" || !tr.honest(e.replica)) continue;
    const auto order = split(e.f.at("order"), ',');
    const auto clients = split(e.f.count("clients") ? e.f.at("clients") : "-", ',');
    if (order.size() != clients.size()) continue;
    ++rounds;
    std::map<std::string, std::set<std::string>> via;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (clients[k] == "-") continue;
      auto& s = via[clients[k]];
      s.insert(order[k].substr(0, order[k].find(':')));
      if (s.size() > 1) {
        return {"single-proposer", Status::fail,
                "round " + e.f.at("round") + ": client " + clients[k] + " executed via several instances"};
      }
    }
  }
  return {"single-proposer", Status::pass, std::to_string(rounds) + " rounds"};
}

InvariantResult checkpoint_silence(const Trace& tr) {
  if (tr.has_faults || tr.lossy) return {"checkpoint-silence", Status::skipped, "faults or message loss present"};
  for (const auto& e : tr.events) {
    if (e.kind.rfind("checkpoint", 0) == 0) {
      return {"checkpoint-silence", Status::fail, "checkpoint traffic at t=" + std::to_string(e.t)};
    }
  }
  return {"checkpoint-silence", Status::pass, ""};
}

}  // namespace

CheckReport check_trace(std::istream& in) {
  const Trace tr = parse(in);
  CheckReport rep;
  rep.results.push_back(fault_budget(tr));
  rep.results.push_back(no_violation(tr));
  rep.results.push_back(agreement(tr));
  rep.results.push_back(execution_order(tr));
  rep.results.push_back(final_state(tr));
  rep.results.push_back(ledger_integrity(tr));
  rep.results.push_back(recovery(tr));
  rep.results.push_back(quorum_acceptance(tr));
  rep.results.push_back(liveness(tr));
  rep.results.push_back(single_proposer(tr));
  rep.results.push_back(checkpoint_silence(tr));
  return rep;
}

CheckReport check_trace_text(const std::string& trace) {
  std::istringstream in(trace);
  return check_trace(in);
}

}  // namespace rcc::check
