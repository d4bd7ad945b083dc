#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

namespace rcc::model {

// Bandwidth-bound throughput of primary-backup replication. Sizes in bytes,
// bandwidth in bytes per second, results in proposals per second.
struct Params {
  double bandwidth = 125e6;  // 1 Gbit/s
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  double proposal_size = 10240;
  double message_size = 1024;
  double txns_per_proposal = 20;

  std::uint32_t nf() const { return n - f; }
  // Throws rcc::ConfigError.
  void validate() const;
};

// Primary sends every proposal to n - 1 backups.
double tp_max(const Params& p);
// Plus three state-exchange messages per proposal.
double tp_pbft(const Params& p);
// nf concurrent primaries, each also receiving the others' proposals.
double tp_cmax(const Params& p);
double tp_cpbft(const Params& p);

struct CurvePoint {
  std::uint32_t n = 0;
  // Transactions per second.
  double tp_max = 0;
  double tp_pbft = 0;
  double tp_cmax = 0;
  double tp_cpbft = 0;
};

// For each n, f = (n - 1) / 3; other parameters from `base`.
std::vector<CurvePoint> sweep(const Params& base, const std::vector<std::uint32_t>& ns);
void write_csv(std::ostream& out, const std::vector<CurvePoint>& points);

}  // namespace rcc::model
