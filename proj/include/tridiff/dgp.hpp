#pragma once

// Seeded data-generating processes for the two simulation designs.
//
// Design 1: balanced panel, N units x T periods, three-way fixed-effects
// outcome with random-walk time effects, optional spillovers on the
// interference groups.
//
// Design 2: two periods, Kang-Schafer covariates, softmax subgroup
// assignment, covariate-dependent trends.
//
// Every random quantity has its own Philox stream keyed by (seed, purpose),
// so the draws of one component never depend on the scenario or on the draws
// of another component.

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "paneldata.hpp"
#include "rng.hpp"

namespace tridiff::dgp {

struct Truth {
  double delta = 0.0;
  double psi1 = 0.0;  // spillover on the treated-stratum interference group
  double psi2 = 0.0;  // spillover on the placebo-stratum interference group
};

struct GeneratedPanel {
  PanelDataset data;
  Truth truth;
};

namespace detail {

inline std::string unit_label(std::size_t k) {
  std::string s = std::to_string(k + 1);
  return "u" + std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

// Fisher-Yates on a Philox stream; the first m entries are a uniform sample
// without replacement.
inline void partial_shuffle(std::vector<std::size_t>& v, std::size_t m, rng::Philox& gen) {
  for (std::size_t k = 0; k < m && k + 1 < v.size(); ++k) {
    const auto j = k + static_cast<std::size_t>(gen.uniform() * static_cast<double>(v.size() - k));
    std::swap(v[k], v[j]);
  }
}

inline std::size_t share_count(double share, std::size_t n) {
  return static_cast<std::size_t>(std::llround(share * static_cast<double>(n)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Design 1

enum class Sim1Scenario { SUTVA, S1, S2 };

inline std::string to_string(Sim1Scenario s) {
  switch (s) {
    case Sim1Scenario::SUTVA: return "SUTVA";
    case Sim1Scenario::S1: return "S1";
    case Sim1Scenario::S2: return "S2";
  }
  return "?";
}

struct Sim1Config {
  int n_units = 2000;
  int n_periods = 10;
  int treat_from = 6;
  double delta = 0.20;
  double psi1 = 0.0;
  double psi2 = 0.0;
  double interference_share = 0.10;
  double mu_u = 0.90;
  double sigma_u = 1.0;
  double sigma_t = 0.05;
  double sigma_eps = 0.50;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(interference_share > 0.0 && interference_share < 1.0))
      throw InputError("Sim1Config: interference_share must lie in (0,1)");
    if (n_units < 4 || n_units % 4 != 0) throw InputError("Sim1Config: n_units must be a positive multiple of 4");
    if (n_periods < 2) throw InputError("Sim1Config: n_periods must be at least 2");
    if (treat_from < 2 || treat_from > n_periods) throw InputError("Sim1Config: treat_from must lie in [2, n_periods]");
    if (sigma_u < 0 || sigma_t < 0 || sigma_eps < 0) throw InputError("Sim1Config: negative standard deviation");
  }
};

inline GeneratedPanel gen_sim1(const Sim1Config& cfg, Sim1Scenario scenario) {
  cfg.validate();
  if (scenario == Sim1Scenario::S1 && cfg.psi2 != 0.0)
    throw InputError("gen_sim1: scenario S1 requires psi2 = 0");
  const auto n = static_cast<std::size_t>(cfg.n_units);
  const auto periods = static_cast<std::size_t>(cfg.n_periods);
  const std::size_t quarter = n / 4;

  // Cells: a random permutation split into four equal blocks.
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < n; ++k) perm[k] = k;
  rng::Philox assign(cfg.seed, "sim1.assign");
  detail::partial_shuffle(perm, n, assign);
  std::vector<int> s(n), g(n), in(n, 0);
  constexpr std::array<std::array<int, 2>, 4> kBlocks = {{{1, 1}, {1, 0}, {0, 1}, {0, 0}}};
  for (std::size_t k = 0; k < n; ++k) {
    s[perm[k]] = kBlocks[k / quarter][0];
    g[perm[k]] = kBlocks[k / quarter][1];
  }
  for (int stratum = 0; stratum < 2; ++stratum) {
    std::vector<std::size_t> controls;
    for (std::size_t u = 0; u < n; ++u)
      if (s[u] == stratum && g[u] == 0) controls.push_back(u);
    const auto m = detail::share_count(cfg.interference_share, controls.size());
    rng::Philox gen(cfg.seed, "sim1.interference", static_cast<std::uint64_t>(stratum));
    detail::partial_shuffle(controls, m, gen);
    for (std::size_t k = 0; k < m; ++k) in[controls[k]] = 1;
  }

  std::vector<double> unit_fe(n);
  {
    rng::Philox gen(cfg.seed, "sim1.unit_fe");
    std::normal_distribution<double> z;
    for (auto& b : unit_fe) b = cfg.mu_u + cfg.sigma_u * z(gen);
  }
  // Random walks: beta_1 ~ N(0, sigma_t^2), beta_t ~ N(beta_{t-1}, sigma_t^2).
  std::array<std::vector<double>, 3> walks;  // common, G-specific, S-specific
  for (std::size_t w = 0; w < 3; ++w) {
    rng::Philox gen(cfg.seed, "sim1.time_fe", w);
    std::normal_distribution<double> z;
    double level = 0.0;
    for (std::size_t t = 0; t < periods; ++t) {
      level += cfg.sigma_t * z(gen);
      walks[w].push_back(level);
    }
  }

  const double psi1 = scenario == Sim1Scenario::SUTVA ? 0.0 : cfg.psi1;
  const double psi2 = scenario == Sim1Scenario::S2 ? cfg.psi2 : 0.0;
  rng::Philox noise(cfg.seed, "sim1.noise");
  std::normal_distribution<double> z;
  std::vector<Observation> rows;
  rows.reserve(n * periods);
  for (std::size_t u = 0; u < n; ++u) {
    const std::string id = detail::unit_label(u);
    for (std::size_t t = 0; t < periods; ++t) {
      const int time = static_cast<int>(t) + 1;
      const int post = time >= cfg.treat_from ? 1 : 0;
      double y = unit_fe[u] + walks[0][t] + walks[1][t] * g[u] + walks[2][t] * s[u] +
                 cfg.delta * s[u] * g[u] * post + cfg.sigma_eps * z(noise);
      y += psi1 * s[u] * in[u] * post + psi2 * (1 - s[u]) * in[u] * post;
      rows.push_back({id, time, y, s[u], g[u], in[u], {}, id});
    }
  }
  return {PanelDataset(std::move(rows), {}, {"sim1:" + to_string(scenario), 0}), {cfg.delta, psi1, psi2}};
}

// ---------------------------------------------------------------------------
// Design 2

struct Gammas {
  std::array<double, 4> g00 = {-1.0, 0.5, -0.25, -0.1};
  std::array<double, 4> g01 = {-0.5, 2.0, 0.5, -0.2};
  std::array<double, 4> g10 = {3.0, -1.5, 0.75, -0.3};
  double f11 = 1.0;  // constant predictor of the (S=1,G=1) cell
};

enum class Sim2Scenario { SUTVA, SPILL };

inline std::string to_string(Sim2Scenario s) { return s == Sim2Scenario::SUTVA ? "SUTVA" : "SPILL"; }

struct Sim2Config {
  int n_units = 2000;
  double delta = 50.0;
  double psi = 25.0;
  double interference_share = 0.5;
  Gammas gamma;
  std::array<double, 4> beta1 = {27.4, 13.7, 13.7, 13.7};
  std::array<double, 4> beta0 = {13.7, 6.85, 6.85, 6.85};
  std::uint64_t seed = 0;

  void validate() const {
    if (n_units < 8) throw InputError("Sim2Config: n_units must be at least 8");
    if (!(interference_share > 0.0 && interference_share < 1.0))
      throw InputError("Sim2Config: interference_share must lie in (0,1)");
  }
};

// Z ~ N(0, I4); X~ = (exp(Z1/2), 10 + Z2/(1+exp(Z1)), (0.6 + Z1 Z3/25)^3,
// (20 + Z1 + Z4)^2); columns standardized to mean 0, sample sd 1.
inline Eigen::MatrixXd kang_schafer_raw(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd x(z.rows(), 4);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double z1 = z(i, 0), z2 = z(i, 1), z3 = z(i, 2), z4 = z(i, 3);
    x(i, 0) = std::exp(0.5 * z1);
    x(i, 1) = 10.0 + z2 / (1.0 + std::exp(z1));
    x(i, 2) = std::pow(0.6 + z1 * z3 / 25.0, 3);
    x(i, 3) = std::pow(20.0 + z1 + z4, 2);
  }
  return x;
}

inline Eigen::MatrixXd standardize_columns(Eigen::MatrixXd x) {
  const auto n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    x.col(j).array() -= mean;
    const double sd = std::sqrt(x.col(j).squaredNorm() / (n - 1.0));
    if (sd > 0) x.col(j) /= sd;
  }
  return x;
}

inline Eigen::MatrixXd kang_schafer_covariates(int n, std::uint64_t seed) {
  if (n < 2) throw InputError("kang_schafer_covariates: n must be at least 2");
  rng::Philox gen(seed, "sim2.covariates");
  std::normal_distribution<double> nd;
  Eigen::MatrixXd z(n, 4);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) z(i, j) = nd(gen);
  return standardize_columns(kang_schafer_raw(z));
}

// Softmax cell probabilities in the order (0,0), (0,1), (1,0), (1,1).
inline std::array<double, 4> subgroup_probabilities(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                                    const Gammas& gam) {
  auto dot = [&](const std::array<double, 4>& v) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < 4; ++j) acc += x(j) * v[static_cast<std::size_t>(j)];
    return acc;
  };
  const std::array<double, 4> f = {0.2 * dot(gam.g00), 0.2 * dot(gam.g01), 0.05 * dot(gam.g10), gam.f11};
  const double mx = std::max(std::max(f[0], f[1]), std::max(f[2], f[3]));
  std::array<double, 4> p{};
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) total += (p[k] = std::exp(f[k] - mx));
  for (auto& v : p) v /= total;
  return p;
}

struct Assignment {
  std::vector<int> s;
  std::vector<int> g;
};

// Cumulative-uniform rule over the cells in order (0,0), (0,1), (1,0), (1,1).
inline Assignment assign_subgroups(const Eigen::MatrixXd& x, const Gammas& gam, std::uint64_t seed) {
  rng::Philox gen(seed, "sim2.assign");
  Assignment out;
  constexpr std::array<std::array<int, 2>, 4> kCells = {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto p = subgroup_probabilities(x.row(i), gam);
    const double u = gen.uniform();
    std::size_t k = 0;
    double cum = p[0];
    while (k < 3 && u > cum) cum += p[++k];
    out.s.push_back(kCells[k][0]);
    out.g.push_back(kCells[k][1]);
  }
  return out;
}

inline GeneratedPanel gen_sim2(const Sim2Config& cfg, Sim2Scenario scenario) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_units);
  const Eigen::MatrixXd x = kang_schafer_covariates(cfg.n_units, cfg.seed);
  const Assignment a = assign_subgroups(x, cfg.gamma, cfg.seed);

  std::vector<int> in(n, 0);
  for (int stratum = 0; stratum < 2; ++stratum) {
    std::vector<std::size_t> pool;
    for (std::size_t u = 0; u < n; ++u)
      if (a.s[u] == stratum && a.g[u] == 0) pool.push_back(u);
    const auto m = detail::share_count(cfg.interference_share, pool.size());
    rng::Philox gen(cfg.seed, "sim2.interference", static_cast<std::uint64_t>(stratum));
    detail::partial_shuffle(pool, m, gen);
    for (std::size_t k = 0; k < m; ++k) in[pool[k]] = 1;
  }

  rng::Philox nu_gen(cfg.seed, "sim2.nu");
  rng::Philox noise(cfg.seed, "sim2.noise");
  std::normal_distribution<double> z;
  const double psi = scenario == Sim2Scenario::SPILL ? cfg.psi : 0.0;
  std::vector<Observation> rows;
  rows.reserve(2 * n);
  const std::vector<std::string> names = {"x1", "x2", "x3", "x4"};
  for (std::size_t u = 0; u < n; ++u) {
    const auto i = static_cast<Eigen::Index>(u);
    double xb1 = 0.0, xb0 = 0.0;
    for (Eigen::Index j = 0; j < 4; ++j) {
      xb1 += x(i, j) * cfg.beta1[static_cast<std::size_t>(j)];
      xb0 += x(i, j) * cfg.beta0[static_cast<std::size_t>(j)];
    }
    const int s = a.s[u], g = a.g[u];
    const double freg = 2010.0 + s * xb1 + (1 - s) * xb0;
    const double nu = 2010.0 * g + s * g * xb1 + (1 - s) * g * xb0 + z(nu_gen);
    const std::string id = detail::unit_label(u);
    std::vector<double> cov = {x(i, 0), x(i, 1), x(i, 2), x(i, 3)};
    for (int t = 0; t < 2; ++t) {
      const double y = freg + freg * t + nu + cfg.delta * s * g * t + psi * s * in[u] * t + z(noise);
      rows.push_back({id, t, y, s, g, in[u], cov, id});
    }
  }
  return {PanelDataset(std::move(rows), names, {"sim2:" + to_string(scenario), 0}), {cfg.delta, psi, 0.0}};
}

}  // namespace tridiff::dgp
