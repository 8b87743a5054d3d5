#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <sstream>

#include "helpers.hpp"

using namespace tridiff;
using namespace tridiff::dgp;

namespace {

std::string serialize(const PanelDataset& d) {
  std::ostringstream out;
  write_panel_csv(out, d);
  return out.str();
}

}  // namespace

TEST(Sim1, NoiseFreeOutcomes) {
  Sim1Config c;
  c.n_units = 40;
  c.mu_u = 0.0;
  c.sigma_u = 0.0;
  c.sigma_t = 0.0;
  c.sigma_eps = 0.0;
  const auto g = gen_sim1(c, Sim1Scenario::SUTVA);
  for (const auto& r : g.data.rows()) {
    const double expected = (r.s == 1 && r.g == 1 && r.time >= 6) ? 0.2 : 0.0;
    EXPECT_DOUBLE_EQ(r.outcome, expected);
  }
}

TEST(Sim1, CellAndInterferenceCounts) {
  for (double share : {0.10, 0.50}) {
    Sim1Config c;
    c.interference_share = share;
    c.seed = 4;
    const auto d = gen_sim1(c, Sim1Scenario::SUTVA).data;
    EXPECT_EQ(d.n_units(), 2000U);
    EXPECT_EQ(d.time_values().size(), 10U);
    EXPECT_EQ(d.size(), 20000U);
    const auto p = validate_partition(d);
    const std::size_t m = share == 0.10 ? 50 : 250;
    for (int s = 0; s < 2; ++s) {
      EXPECT_EQ(p.units[s][0], 500U);
      EXPECT_EQ(p.units[s][1], m);
      EXPECT_EQ(p.units[s][1] + p.units[s][2], 500U);
    }
  }
}

TEST(Sim1, Deterministic) {
  Sim1Config c;
  c.n_units = 200;
  c.seed = 77;
  const auto a = gen_sim1(c, Sim1Scenario::S1);
  const auto b = gen_sim1(c, Sim1Scenario::S1);
  EXPECT_EQ(serialize(a.data), serialize(b.data));
  c.seed = 78;
  const auto other = gen_sim1(c, Sim1Scenario::S1);
  EXPECT_NE(serialize(a.data), serialize(other.data));
  int same = 0;
  for (std::size_t r = 0; r < a.data.size(); ++r) same += a.data.rows()[r].outcome == other.data.rows()[r].outcome;
  EXPECT_EQ(same, 0);
}

TEST(Sim1, LabelsConstantAndDisjoint) {
  Sim1Config c;
  c.n_units = 400;
  c.interference_share = 0.5;
  const auto d = gen_sim1(c, Sim1Scenario::SUTVA).data;
  for (const auto& r : d.rows()) EXPECT_EQ(r.g * r.i, 0);
  // PanelDataset construction already rejects time-varying labels; spot check.
  EXPECT_EQ(d.unit_cell(0), d.rows()[0].cell());
}

TEST(Sim1, ScenarioAddersAreExact) {
  Sim1Config c;
  c.n_units = 400;
  c.interference_share = 0.5;
  c.psi1 = 0.1;
  c.psi2 = -0.1;
  c.seed = 12;
  const auto sutva = gen_sim1(c, Sim1Scenario::SUTVA);
  const auto s2 = gen_sim1(c, Sim1Scenario::S2);
  EXPECT_EQ(s2.truth.psi1, 0.1);
  EXPECT_EQ(s2.truth.psi2, -0.1);
  EXPECT_EQ(sutva.truth.psi1, 0.0);
  for (std::size_t r = 0; r < s2.data.size(); ++r) {
    const auto& o = s2.data.rows()[r];
    const int post = o.time >= c.treat_from;
    const double removed = o.outcome - c.psi1 * o.s * o.i * post - c.psi2 * (1 - o.s) * o.i * post;
    EXPECT_NEAR(removed, sutva.data.rows()[r].outcome, 1e-12);
    EXPECT_EQ(o.cell(), sutva.data.rows()[r].cell());
  }
  c.psi2 = 0.0;
  const auto s1 = gen_sim1(c, Sim1Scenario::S1);
  EXPECT_EQ(s1.truth.psi2, 0.0);
}

TEST(Sim1, ConfigValidation) {
  Sim1Config c;
  c.interference_share = 1.0;
  EXPECT_THROW(gen_sim1(c, Sim1Scenario::SUTVA), InputError);
  c = {};
  c.n_units = 2002;
  EXPECT_THROW(gen_sim1(c, Sim1Scenario::SUTVA), InputError);
  c = {};
  c.psi2 = 0.1;
  EXPECT_THROW(gen_sim1(c, Sim1Scenario::S1), InputError);
}

TEST(KangSchafer, RawTransformAtZero) {
  const Eigen::MatrixXd x = kang_schafer_raw(Eigen::MatrixXd::Zero(1, 4));
  EXPECT_DOUBLE_EQ(x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(x(0, 1), 10.0);
  EXPECT_NEAR(x(0, 2), 0.216, 1e-15);
  EXPECT_DOUBLE_EQ(x(0, 3), 400.0);
}

TEST(KangSchafer, StandardizedColumns) {
  const auto x = kang_schafer_covariates(1000, 3);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double mean = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / 999.0);
    EXPECT_NEAR(mean, 0.0, 1e-10);
    EXPECT_NEAR(sd, 1.0, 1e-10);
  }
  EXPECT_THROW(kang_schafer_covariates(1, 3), InputError);
}

TEST(KangSchafer, FourthColumnRightSkewed) {
  const auto x = kang_schafer_covariates(10000, 5);
  const double skew = x.col(3).array().cube().mean();  // standardized column
  EXPECT_GT(skew, 0.0);
}

TEST(Assignment, ProbabilitiesAtZero) {
  const Gammas gam;
  const auto p = subgroup_probabilities(Eigen::RowVectorXd::Zero(4), gam);
  EXPECT_NEAR(p[0], 0.1749, 1e-4);
  EXPECT_NEAR(p[1], 0.1749, 1e-4);
  EXPECT_NEAR(p[2], 0.1749, 1e-4);
  EXPECT_NEAR(p[3], 0.4754, 1e-4);
  // Pairwise probability of (1,1) against any other cell: e / (1 + e).
  EXPECT_NEAR(p[3] / (p[3] + p[0]), 0.7311, 1e-4);
}

TEST(Assignment, SymmetricSoftmaxIsUniform) {
  Gammas zero;
  zero.g00 = zero.g01 = zero.g10 = {0, 0, 0, 0};
  zero.f11 = 0.0;
  Eigen::RowVectorXd x(4);
  x << 0.3, -1.2, 2.0, 0.7;
  for (double v : subgroup_probabilities(x, zero)) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Assignment, ProbabilitiesSumToOne) {
  const auto x = kang_schafer_covariates(500, 8);
  const Gammas gam;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto p = subgroup_probabilities(x.row(i), gam);
    EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-12);
  }
}

TEST(Assignment, EmpiricalSharesMatchSoftmax) {
  const int n = 20000;
  const auto x = kang_schafer_covariates(n, 9);
  const Gammas gam;
  const auto a = assign_subgroups(x, gam, 9);
  std::array<double, 4> expected{}, observed{};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto p = subgroup_probabilities(x.row(i), gam);
    for (std::size_t k = 0; k < 4; ++k) expected[k] += p[k] / n;
    observed[static_cast<std::size_t>(2 * a.s[static_cast<std::size_t>(i)] + a.g[static_cast<std::size_t>(i)])] += 1.0 / n;
  }
  for (std::size_t k = 0; k < 4; ++k)
    EXPECT_LT(std::abs(observed[k] - expected[k]), 2.0 * std::sqrt(expected[k] * (1 - expected[k]) / n) + 1e-3) << k;
}

// With zeroed gammas the assignment does not depend on X: a chi-square test of
// (cell x above-median X1) independence is not rejected at 1% for 20 seeds.
TEST(Assignment, ZeroGammasIndependentOfCovariates) {
  Gammas zero;
  zero.g00 = zero.g01 = zero.g10 = {0, 0, 0, 0};
  const boost::math::chi_squared dist(3);
  const double critical = boost::math::quantile(boost::math::complement(dist, 0.01));
  int rejections = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 2000;
    const auto x = kang_schafer_covariates(n, seed);
    const auto a = assign_subgroups(x, zero, seed);
    double table[4][2] = {};
    for (int i = 0; i < n; ++i) {
      const auto cell = static_cast<std::size_t>(2 * a.s[static_cast<std::size_t>(i)] + a.g[static_cast<std::size_t>(i)]);
      table[cell][x(i, 0) > 0 ? 1 : 0] += 1.0;
    }
    double row[4] = {}, col[2] = {};
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 2; ++k) {
        row[r] += table[r][k];
        col[k] += table[r][k];
      }
    double stat = 0.0;
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 2; ++k) {
        const double e = row[r] * col[k] / n;
        stat += (table[r][k] - e) * (table[r][k] - e) / e;
      }
    rejections += stat > critical;
  }
  EXPECT_EQ(rejections, 0);
}

TEST(Sim2, StructureAndTruth) {
  Sim2Config c;
  c.seed = 10;
  const auto g = gen_sim2(c, Sim2Scenario::SPILL);
  EXPECT_EQ(g.data.time_values(), (std::vector<int>{0, 1}));
  EXPECT_EQ(g.data.n_units(), 2000U);
  EXPECT_EQ(g.data.covariate_names(), (std::vector<std::string>{"x1", "x2", "x3", "x4"}));
  EXPECT_EQ(g.truth.delta, 50.0);
  EXPECT_EQ(g.truth.psi1, 25.0);
  EXPECT_EQ(gen_sim2(c, Sim2Scenario::SUTVA).truth.psi1, 0.0);
  const auto p = validate_partition(g.data);
  for (int s = 0; s < 2; ++s) EXPECT_NEAR(p.interference_share[s], 0.5, 0.01);
  EXPECT_FALSE(p.dtd_blocked);
}

TEST(Sim2, Deterministic) {
  Sim2Config c;
  c.n_units = 300;
  c.seed = 11;
  EXPECT_EQ(serialize(gen_sim2(c, Sim2Scenario::SPILL).data), serialize(gen_sim2(c, Sim2Scenario::SPILL).data));
}

TEST(Sim2, SpilloverAdderIsExact) {
  Sim2Config c;
  c.n_units = 500;
  c.seed = 13;
  const auto a = gen_sim2(c, Sim2Scenario::SUTVA).data;
  const auto b = gen_sim2(c, Sim2Scenario::SPILL).data;
  for (std::size_t r = 0; r < a.size(); ++r) {
    const auto& o = b.rows()[r];
    EXPECT_NEAR(o.outcome - c.psi * o.s * o.i * o.time, a.rows()[r].outcome, 1e-9);
  }
}

// Randomized assignment: cell-dummy regression of dY recovers delta.
TEST(Sim2, RandomizedAssignmentRecoversDelta) {
  Sim2Config c;
  c.gamma.g00 = c.gamma.g01 = c.gamma.g10 = {0, 0, 0, 0};
  c.gamma.f11 = 0.0;
  c.beta1 = c.beta0 = {0, 0, 0, 0};
  std::vector<double> est;
  for (std::uint64_t k = 0; k < 20; ++k) {
    c.seed = 300 + k;
    est.push_back(dtd_two_period(gen_sim2(c, Sim2Scenario::SUTVA).data).delta.point);
  }
  double mean = 0.0, ss = 0.0;
  for (double v : est) mean += v;
  mean /= 20.0;
  for (double v : est) ss += (v - mean) * (v - mean);
  EXPECT_LT(std::abs(mean - 50.0), 3.0 * std::sqrt(ss / 19.0 / 20.0));
}

TEST(Sim2, ConfigJsonRoundTrip) {
  Sim2Config c;
  c.n_units = 5000;
  c.psi = 10.0;
  c.gamma.f11 = 0.5;
  c.seed = 99;
  const nlohmann::json j = c;
  const auto back = j.get<Sim2Config>();
  EXPECT_EQ(back.n_units, 5000);
  EXPECT_EQ(back.psi, 10.0);
  EXPECT_EQ(back.gamma.f11, 0.5);
  EXPECT_EQ(back.gamma.g10, c.gamma.g10);
  EXPECT_EQ(back.beta0, c.beta0);
  EXPECT_EQ(back.seed, 99U);
  // beta0 defaults to beta1 / 2.
  const auto half = nlohmann::json{{"beta1", {2, 4, 6, 8}}}.get<Sim2Config>();
  EXPECT_EQ(half.beta0, (std::array<double, 4>{1, 2, 3, 4}));
}

TEST(Sim2, TargetPredictorIsConstant) {
  const Gammas gam;
  EXPECT_EQ(gam.f11, 1.0);
  Eigen::RowVectorXd a(4);
  a << 1, 2, 3, 4;
  // Only the other three predictors move with X; (1,1) keeps f = 1, so the
  // ratio p11 / p00 equals exp(1 - f00).
  const auto pa = subgroup_probabilities(a, gam);
  double f00 = 0.0;
  for (int j = 0; j < 4; ++j) f00 += 0.2 * a(j) * gam.g00[static_cast<std::size_t>(j)];
  EXPECT_NEAR(pa[3] / pa[0], std::exp(1.0 - f00), 1e-9);
}
