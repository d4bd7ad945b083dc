#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rcc/model.hpp"
#include "rcc/types.hpp"

using namespace rcc::model;

namespace {

Params base() {
  Params p;
  p.bandwidth = 1e9 / 8;
  p.n = 4;
  p.f = 1;
  p.proposal_size = 10 * 1024;
  p.message_size = 1024;
  p.txns_per_proposal = 20;
  return p;
}

void expect_rel(double got, double want, double tol) { EXPECT_LE(std::abs(got - want) / want, tol) << got << " vs " << want; }

}  // namespace

TEST(Model, ReferencePoint) {
  const Params p = base();
  expect_rel(tp_max(p), 4069.0, 1e-3);
  expect_rel(tp_pbft(p), 3130.0, 1e-3);
  expect_rel(tp_cmax(p), 7324.2, 1e-3);
  expect_rel(tp_cpbft(p), 4412.2, 1e-3);
  // Exact arithmetic for the same point.
  EXPECT_DOUBLE_EQ(tp_max(p), 125e6 / 30720);
  EXPECT_DOUBLE_EQ(tp_pbft(p), 125e6 / (3 * (10240 + 3072)));
  EXPECT_DOUBLE_EQ(tp_cmax(p), 375e6 / 51200);
  EXPECT_DOUBLE_EQ(tp_cpbft(p), 375e6 / 84992);
}

TEST(Model, Orderings) {
  const Params p = base();
  EXPECT_GT(tp_cmax(p), tp_cpbft(p));
  EXPECT_GT(tp_cpbft(p), tp_max(p));
  EXPECT_GT(tp_max(p), tp_pbft(p));
}

TEST(Model, LargeProposalsHideStateExchange) {
  Params p = base();
  p.proposal_size = 2 * 1024 * 1024;
  expect_rel(tp_pbft(p), tp_max(p), 0.01);
  p.message_size = 0;
  EXPECT_DOUBLE_EQ(tp_pbft(p), tp_max(p));
}

TEST(Model, ConcurrencyGainGrowsWithN) {
  for (double st : {10.0 * 1024, 2.0 * 1024 * 1024}) {
    double prev = 0;
    for (std::uint32_t f = 1; f <= 30; ++f) {
      Params p = base();
      p.proposal_size = st;
      p.f = f;
      p.n = 3 * f + 1;
      const double ratio = tp_cmax(p) / tp_max(p);
      const double nf = p.n - p.f;
      EXPECT_NEAR(ratio, nf * (p.n - 1) / (p.n + nf - 2), 1e-9);
      EXPECT_GT(ratio, prev);
      prev = ratio;
      EXPECT_GE(tp_cmax(p), tp_cpbft(p));
      EXPECT_GE(tp_max(p), tp_pbft(p));
    }
  }
}

TEST(Model, Degenerate) {
  Params p = base();
  p.n = 2;
  p.f = 1;
  EXPECT_DOUBLE_EQ(tp_max(p), p.bandwidth / p.proposal_size);
  EXPECT_DOUBLE_EQ(tp_cmax(p), tp_max(p));
  Params q = base();
  const double one = tp_max(q);
  q.proposal_size *= 2;
  EXPECT_DOUBLE_EQ(tp_max(q), one / 2);
  Params bad = base();
  bad.bandwidth = 0;
  EXPECT_THROW(tp_max(bad), rcc::ConfigError);
}

TEST(Model, SweepCsv) {
  const auto pts = sweep(base(), {4, 7});
  ASSERT_EQ(pts.size(), 2u);
  expect_rel(pts[0].tp_max, 4069.0 * 20, 1e-3);
  expect_rel(pts[0].tp_cpbft, 4412.2 * 20, 1e-3);
  std::ostringstream os;
  write_csv(os, pts);
  EXPECT_EQ(os.str().rfind("n,tp_max,tp_pbft,tp_cmax,tp_cpbft\n4,", 0), 0u);
}
