#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rcc/check/trace_checker.hpp"
#include "rcc/model.hpp"
#include "rcc/sim/simulator.hpp"

namespace {

struct RunOptions {
  std::string scenario;
  std::optional<std::uint32_t> n, f, m, batch;
  std::optional<std::int64_t> sigma;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> ordering;
  std::string out = "out";
  bool quiet = false;
};

int cmd_run(const RunOptions& o) {
  rcc::sim::Scenario s = rcc::sim::load_scenario(o.scenario);
  if (o.n) s.system.n = *o.n;
  if (o.f) s.system.f = *o.f;
  if (o.m) s.system.m = *o.m;
  if (o.sigma) s.system.sigma = *o.sigma;
  if (o.batch) s.workload.batch = *o.batch;
  if (o.seed) s.seed = *o.seed;
  if (o.ordering) s.system.ordering = rcc::parse_ordering(*o.ordering);

  const rcc::sim::RunResult res = rcc::sim::run_scenario(s);
  res.write(o.out);
  const auto report = rcc::check::check_trace_text(res.trace_text());
  if (!o.quiet) {
    std::cout << "scenario " << res.name << ": " << res.completed_requests << "/" << res.submitted_requests
              << " requests completed, " << res.checkpoint_msgs << " checkpoint messages\n";
    report.print(std::cout);
  }
  return report.ok() && !res.violation ? 0 : 1;
}

int cmd_check(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 2;
  }
  const auto report = rcc::check::check_trace(in);
  report.print(std::cout);
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrent multi-primary BFT simulator"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Run a scenario; writes trace, metrics and ledgers");
  run->add_option("scenario", ro.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--n", ro.n, "Replicas");
  run->add_option("--f", ro.f, "Tolerated faulty replicas");
  run->add_option("--m", ro.m, "Concurrent instances");
  run->add_option("--sigma", ro.sigma, "Lag bound and switch window unit, in rounds");
  run->add_option("--batch", ro.batch, "Commands per transaction");
  run->add_option("--seed", ro.seed, "Random seed");
  run->add_option("--ordering", ro.ordering, "Per-round execution order")
      ->check(CLI::IsMember({"by-instance", "hash"}));
  run->add_option("--out", ro.out, "Output directory")->capture_default_str();
  run->add_flag("--quiet", ro.quiet, "Print nothing");

  std::string trace_path;
  auto* check = app.add_subcommand("check", "Check a trace against the invariant suite");
  check->add_option("trace", trace_path, "Trace file")->required();

  rcc::model::Params mp;
  std::vector<std::uint32_t> ns{4, 7, 10, 16, 31, 46, 61, 76, 91};
  std::string model_out;
  auto* model = app.add_subcommand("model", "Throughput bounds as CSV");
  model->add_option("--bandwidth", mp.bandwidth, "Bytes per second")->capture_default_str();
  model->add_option("--proposal-size", mp.proposal_size, "Bytes per proposal")->capture_default_str();
  model->add_option("--message-size", mp.message_size, "Bytes per state-exchange message")->capture_default_str();
  model->add_option("--txns-per-proposal", mp.txns_per_proposal)->capture_default_str();
  model->add_option("--ns", ns, "Replica counts to sweep")->delimiter(',')->capture_default_str();
  model->add_option("--out", model_out, "CSV file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(ro);
    if (*check) return cmd_check(trace_path);
    if (*model) {
      const auto points = rcc::model::sweep(mp, ns);
      if (model_out.empty()) {
        rcc::model::write_csv(std::cout, points);
      } else {
        std::ofstream out(model_out);
        rcc::model::write_csv(out, points);
      }
      return 0;
    }
  } catch (const rcc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
