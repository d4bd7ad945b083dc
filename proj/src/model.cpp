#include "rcc/model.hpp"

#include <cstdio>

#include "rcc/types.hpp"

namespace rcc::model {

void Params::validate() const {
  if (bandwidth <= 0 || proposal_size <= 0 || message_size < 0 || txns_per_proposal <= 0) {
    throw ConfigError("model parameters must be positive");
  }
  if (n < 2 || f >= n) throw ConfigError("model needs n >= 2 and f < n");
}

double tp_max(const Params& p) {
  p.validate();
  return p.bandwidth / ((p.n - 1) * p.proposal_size);
}

double tp_pbft(const Params& p) {
  p.validate();
  return p.bandwidth / ((p.n - 1) * (p.proposal_size + 3 * p.message_size));
}

double tp_cmax(const Params& p) {
  p.validate();
  const double nf = p.nf();
  return nf * p.bandwidth / ((p.n - 1) * p.proposal_size + (nf - 1) * p.proposal_size);
}

double tp_cpbft(const Params& p) {
  p.validate();
  const double nf = p.nf();
  const double own = (p.n - 1) * (p.proposal_size + 3 * p.message_size);
  const double others = (nf - 1) * (p.proposal_size + 4 * (p.n - 1) * p.message_size);
  return nf * p.bandwidth / (own + others);
}

std::vector<CurvePoint> sweep(const Params& base, const std::vector<std::uint32_t>& ns) {
  std::vector<CurvePoint> out;
  for (auto n : ns) {
    Params p = base;
    p.n = n;
    p.f = (n - 1) / 3;
    const double k = p.txns_per_proposal;
    out.push_back({n, tp_max(p) * k, tp_pbft(p) * k, tp_cmax(p) * k, tp_cpbft(p) * k});
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<CurvePoint>& points) {
  out << "n,tp_max,tp_pbft,tp_cmax,tp_cpbft\n";
  char buf[160];
  for (const auto& c : points) {
    std::snprintf(buf, sizeof buf, "%u,%.3f,%.3f,%.3f,%.3f\n", c.n, c.tp_max, c.tp_pbft, c.tp_cmax, c.tp_cpbft);
    out << buf;
  }
}

}  // namespace rcc::model
