#include <gtest/gtest.h>

#include <sstream>

#include "rcc/check/trace_checker.hpp"
#include "rcc/sim/simulator.hpp"

using namespace rcc;
using namespace rcc::sim;

namespace {

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in, "inline");
}

const char* kSmall = R"(
[system]
n = 4
f = 1
m = 4
[workload]
clients = 4
interval = 10
horizon = 400
drain = 600
)";

std::string replace_first(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

TEST(ScenarioParse, AllSections) {
  const auto s = parse(R"(
# comment
[system]
n = 7
f = 2
m = 5
sigma = 3
ordering = hash
name = demo
[workload]
clients = 3
batch = 2
seed = 9
switch client=1 to=3 at=100
overlapping_switch client=2 at=200 targets=4,5
[faults]
crash replica=0 at=50
dark replica=1 victims=2,3 rounds=10-12
[network]
delay = 2
jitter = 1
drop from=10 to=20 prob=0.5
partition from=30 to=40 groups=0,1,2|3,4,5,6
pause from=50 to=60
)");
  EXPECT_EQ(s.name, "demo");
  EXPECT_EQ(s.system.n, 7u);
  EXPECT_EQ(s.system.sigma, 3);
  EXPECT_EQ(s.system.ordering, OrderingPolicy::hash_permuted);
  EXPECT_EQ(s.seed, 9u);
  ASSERT_EQ(s.workload.actions.size(), 2u);
  EXPECT_EQ(s.workload.actions[1].targets, (std::vector<InstanceId>{4, 5}));
  ASSERT_EQ(s.faults.size(), 2u);
  EXPECT_EQ(s.faults[1].kind, FaultKind::dark);
  EXPECT_EQ(s.faults[1].from_round, 10);
  EXPECT_EQ(s.faults[1].to_round, 12);
  EXPECT_EQ(s.network.partitions.at(0).groups.size(), 2u);
  EXPECT_DOUBLE_EQ(s.network.drops.at(0).probability, 0.5);
  EXPECT_TRUE(s.network.lossy());
  EXPECT_NO_THROW(s.validate());
}

TEST(ScenarioParse, Errors) {
  EXPECT_THROW(parse("[system]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse("[system]\nn = four\n"), ConfigError);
  EXPECT_THROW(parse("[extra]\n"), ConfigError);
  EXPECT_THROW(parse("n = 4\n"), ConfigError);
  EXPECT_THROW(parse("[faults]\ncrash at=5\n"), ConfigError);
  EXPECT_THROW(parse("[faults]\nmeteor replica=1\n"), ConfigError);
}

TEST(ScenarioValidate, FaultBudgetAndForgery) {
  EXPECT_THROW(parse("[faults]\ncrash replica=0 at=1\ncrash replica=1 at=1\n").validate(), ConfigError);
  // Two faults on one replica are a single faulty replica.
  EXPECT_NO_THROW(parse("[faults]\ncrash replica=0 at=1\nthrottle replica=0 factor=2\n").validate());
  EXPECT_THROW(parse("[faults]\nforge replica=0\n").validate(), ConfigError);
  EXPECT_THROW(parse("[faults]\ncrash replica=9 at=1\n").validate(), ConfigError);
  EXPECT_THROW(parse("[workload]\nswitch client=0 to=5 at=1\n").validate(), ConfigError);
  EXPECT_THROW(parse("[system]\nn = 3\n").validate(), ConfigError);
  EXPECT_THROW(run_scenario(parse("[faults]\nforge replica=2\n")), ConfigError);
}

TEST(Simulator, SameSeedSameOutput) {
  const auto s = parse(kSmall);
  const auto a = run_scenario(s);
  const auto b = run_scenario(s);
  EXPECT_EQ(a.trace_text(), b.trace_text());
  EXPECT_EQ(a.metrics_csv(), b.metrics_csv());
  EXPECT_EQ(a.instances_csv(), b.instances_csv());
  EXPECT_EQ(a.summary_json(), b.summary_json());
  auto other = s;
  other.seed = 2;
  EXPECT_NE(run_scenario(other).trace_text(), a.trace_text());
}

TEST(Simulator, FailureFreeRunConverges) {
  const auto r = run_scenario(parse(kSmall));
  EXPECT_FALSE(r.violation);
  EXPECT_EQ(r.completed_requests, r.submitted_requests);
  EXPECT_EQ(r.checkpoint_msgs, 0u);
  ASSERT_EQ(r.replicas.size(), 4u);
  for (const auto& rep : r.replicas) {
    EXPECT_TRUE(rep.chain_ok);
    EXPECT_TRUE(rep.replay_ok);
    EXPECT_EQ(rep.head, r.replicas[0].head);
    EXPECT_EQ(rep.state, r.replicas[0].state);
  }
  const auto report = check::check_trace_text(r.trace_text());
  EXPECT_TRUE(report.ok());
  EXPECT_EQ(report.find("liveness")->status, check::Status::pass);
  EXPECT_EQ(report.find("recovery")->status, check::Status::skipped);
}

TEST(Simulator, CrashedPrimaryIsReplaced) {
  auto s = parse(kSmall);
  s.faults.push_back({FaultKind::crash, 0, 150, {}, 0, 0, 1, 0});
  const auto r = run_scenario(s);
  EXPECT_FALSE(r.violation);
  const auto report = check::check_trace_text(r.trace_text());
  EXPECT_TRUE(report.ok());
  EXPECT_EQ(report.find("recovery")->status, check::Status::pass);
  EXPECT_GT(r.completed_requests, 0u);
}

TEST(Simulator, EquivocationIsContained) {
  auto s = parse(kSmall);
  FaultSpec f;
  f.kind = FaultKind::equivocate;
  f.replica = 0;
  f.victims = {2, 3};
  f.from_round = 5;
  f.to_round = 8;
  s.faults.push_back(f);
  const auto r = run_scenario(s);
  EXPECT_FALSE(r.violation);
  EXPECT_TRUE(check::check_trace_text(r.trace_text()).ok());
}

TEST(Checker, DetectsTamperedAccept) {
  const auto r = run_scenario(parse(kSmall));
  const std::string text = r.trace_text();
  ASSERT_TRUE(check::check_trace_text(text).ok());

  // Rewrite one replica's accepted digest for instance 2 round 3.
  const std::string key = " r=1 accept inst=2 round=3 digest=";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  std::string bad = text;
  bad[pos + key.size()] = bad[pos + key.size()] == '0' ? '1' : '0';
  const auto report = check::check_trace_text(bad);
  EXPECT_FALSE(report.ok());
  EXPECT_EQ(report.find("agreement")->status, check::Status::fail);
}

TEST(Checker, DetectsDivergentExecution) {
  const auto r = run_scenario(parse(kSmall));
  const std::string text = r.trace_text();
  const std::string key = " r=2 execute round=4 order=1:";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  std::string bad = text;
  bad.replace(pos + key.size() - 2, 1, "3");
  EXPECT_EQ(check::check_trace_text(bad).find("execution-order")->status, check::Status::fail);
}

TEST(Checker, DetectsWrongRestartRound) {
  auto s = parse(kSmall);
  s.faults.push_back({FaultKind::crash, 0, 150, {}, 0, 0, 1, 0});
  const std::string text = run_scenario(s).trace_text();
  const auto pos = text.find(" stop inst=1 seq=0 rho=");
  ASSERT_NE(pos, std::string::npos);
  const auto next = text.find("next=", pos);
  const auto end = text.find(' ', next);
  const long long value = std::stoll(text.substr(next + 5, end - next - 5));
  const std::string bad = text.substr(0, next + 5) + std::to_string(value + 1) + text.substr(end);
  EXPECT_EQ(check::check_trace_text(bad).find("recovery")->status, check::Status::fail);
}

TEST(Checker, DetectsExcessFaults) {
  const std::string text = run_scenario(parse(kSmall)).trace_text();
  const std::string bad = replace_first(text, "faulty=-", "faulty=0,1");
  EXPECT_EQ(check::check_trace_text(bad).find("fault-budget")->status, check::Status::fail);
}
