#pragma once

// Doubly-robust triple-difference estimators under conditional parallel
// trend-in-trends.
//
// Each estimator is a signed sum of three doubly-robust DiD terms, one per
// comparison cell c:
//
//   term_c = mean_i[(w_target_i - w_c_i(X)) * (dY_i - m_c(X_i))]
//
// with dY = Y_1 - Y_0, m_c an OLS fit of dY on (1, X) inside cell c,
// w_target = 1{target} / mean(1{target}) and
// w_c(X) = 1{c} * p/(1-p) / mean(1{c} * p/(1-p)), where p is the pairwise
// propensity of the target cell against c, fit by a two-cell logit.
//
//   ATT (delta_dr):  target (1,1,0); + (1,0,0), + (0,1,0), - (0,0,0)
//   ASU (phi_dr):    target (1,0,1); + (1,0,0), + (0,0,1), - (0,0,0)
//   pooled TD:       target (1,1,.); + (1,0,.), + (0,1,.), - (0,0,.)

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paneldata.hpp"
#include "parallel.hpp"
#include "regress.hpp"
#include "rng.hpp"
#include "tdiff.hpp"

namespace tridiff {

// A partition cell, optionally pooled over the interference indicator.
struct CellGroup {
  Cell cell;
  bool pool_i = false;

  bool contains(const Cell& c) const { return c.s == cell.s && c.g == cell.g && (pool_i || c.i == cell.i); }
  std::string label() const {
    return pool_i ? "(S=" + std::to_string(cell.s) + ",G=" + std::to_string(cell.g) + ")" : to_string(cell);
  }
};

struct DrDesign {
  Estimand estimand;
  CellGroup target;
  std::array<CellGroup, 3> comparisons;
  std::array<int, 3> signs;
};

namespace dr_design {
inline DrDesign att() {
  return {Estimand::DR_delta, {{1, 1, 0}}, {{{{1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 0}}}}, {1, 1, -1}};
}
inline DrDesign asu() {
  return {Estimand::DR_phi, {{1, 0, 1}}, {{{{1, 0, 0}}, {{0, 0, 1}}, {{0, 0, 0}}}}, {1, 1, -1}};
}
inline DrDesign pooled_td() {
  return {Estimand::DR_delta,
          {{1, 1, 0}, true},
          {{{{1, 0, 0}, true}, {{0, 1, 0}, true}, {{0, 0, 0}, true}}},
          {1, 1, -1}};
}
}  // namespace dr_design

// One row per unit of a two-period panel.
struct UnitDiffs {
  std::vector<Cell> cells;
  VectorXd dy;
  MatrixXd x;  // n_units x P
  std::vector<std::string> covariate_names;

  std::size_t size() const { return cells.size(); }

  UnitDiffs take(const std::vector<std::size_t>& idx) const {
    UnitDiffs out;
    out.covariate_names = covariate_names;
    out.dy.resize(static_cast<Eigen::Index>(idx.size()));
    out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.cells.push_back(cells[idx[k]]);
      out.dy(static_cast<Eigen::Index>(k)) = dy(static_cast<Eigen::Index>(idx[k]));
      out.x.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(idx[k]));
    }
    return out;
  }
};

// Units lacking either period are skipped.
inline UnitDiffs unit_differences(const PanelDataset& data) {
  const auto& tv = data.time_values();
  if (tv.size() != 2) throw EstimationError("doubly-robust estimators require two periods (use to_two_period)");
  const std::size_t nu = data.n_units();
  std::vector<double> y0(nu), y1(nu);
  std::vector<int> seen(nu, 0);
  std::vector<std::size_t> pre_row(nu, 0);
  const auto& rows = data.rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto u = data.unit_of(r);
    if (rows[r].time == tv[1]) {
      y1[u] = rows[r].outcome;
      seen[u] |= 2;
    } else {
      y0[u] = rows[r].outcome;
      pre_row[u] = r;
      seen[u] |= 1;
    }
  }
  UnitDiffs out;
  out.covariate_names = data.covariate_names();
  const auto p = static_cast<Eigen::Index>(data.covariate_names().size());
  std::size_t n = 0;
  for (std::size_t u = 0; u < nu; ++u) n += seen[u] == 3;
  out.dy.resize(static_cast<Eigen::Index>(n));
  out.x.resize(static_cast<Eigen::Index>(n), p);
  Eigen::Index k = 0;
  for (std::size_t u = 0; u < nu; ++u) {
    if (seen[u] != 3) continue;
    out.cells.push_back(data.unit_cell(u));
    out.dy(k) = y1[u] - y0[u];
    const auto& cov = rows[pre_row[u]].covariates;
    for (Eigen::Index j = 0; j < p; ++j) out.x(k, j) = cov[static_cast<std::size_t>(j)];
    ++k;
  }
  return out;
}

struct DrOptions {
  // Covariate columns (by position) in each working model; nullopt = all,
  // empty = intercept only.
  std::optional<std::vector<std::size_t>> gps_covariates;
  std::optional<std::vector<std::size_t>> outcome_covariates;
  double trim = 0.001;         // fitted propensities winsorized to [trim, 1 - trim]
  double weight_cap = 0.10;    // max share of a comparison weight family on one unit
  int bootstrap_b = 400;       // 0 = point estimate only (se reported as 0)
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<int> post_from;  // collapse multi-period input with to_two_period
};

struct GPSModel {
  struct Pair {
    CellGroup comparison;
    FitResult logit;
    VectorXd p;  // pairwise probability of the target cell, per subsample unit
    std::size_t winsorized = 0;
  };
  CellGroup target;
  std::vector<Pair> pairs;
};

struct OutcomeModel {
  CellGroup cell;
  FitResult fit;
  VectorXd m;  // prediction for every subsample unit
};

struct DRWeights {
  VectorXd target;      // 1{target} / mean(1{target})
  VectorXd comparison;  // 1{c} p/(1-p) / mean(1{c} p/(1-p))
};

namespace detail {

inline std::vector<std::size_t> all_columns(Eigen::Index p) {
  std::vector<std::size_t> v(static_cast<std::size_t>(p));
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = j;
  return v;
}

inline DesignMatrix covariate_design(const UnitDiffs& d, const std::optional<std::vector<std::size_t>>& cols) {
  const auto use = cols.value_or(all_columns(d.x.cols()));
  std::vector<std::string> names{"const"};
  for (auto j : use) {
    if (static_cast<Eigen::Index>(j) >= d.x.cols()) throw InputError("covariate index out of range");
    names.push_back(d.covariate_names.empty() ? "x" + std::to_string(j) : d.covariate_names[j]);
  }
  DesignMatrix out(static_cast<Eigen::Index>(d.size()), names);
  out.x.col(0).setOnes();
  for (std::size_t k = 0; k < use.size(); ++k)
    out.x.col(static_cast<Eigen::Index>(k + 1)) = d.x.col(static_cast<Eigen::Index>(use[k]));
  return out;
}

inline std::vector<std::size_t> rows_in(const UnitDiffs& d, const CellGroup& g) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < d.size(); ++k)
    if (g.contains(d.cells[k])) out.push_back(k);
  return out;
}

inline DesignMatrix take_rows(const DesignMatrix& x, const std::vector<std::size_t>& idx) {
  DesignMatrix out(static_cast<Eigen::Index>(idx.size()), x.names);
  for (std::size_t k = 0; k < idx.size(); ++k)
    out.x.row(static_cast<Eigen::Index>(k)) = x.x.row(static_cast<Eigen::Index>(idx[k]));
  return out;
}

inline UnitDiffs restrict_to(const UnitDiffs& d, const DrDesign& design) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < d.size(); ++k) {
    bool in = design.target.contains(d.cells[k]);
    for (const auto& c : design.comparisons) in = in || c.contains(d.cells[k]);
    if (in) idx.push_back(k);
  }
  return d.take(idx);
}

inline std::size_t min_units(const UnitDiffs& d, const std::optional<std::vector<std::size_t>>& cols) {
  return (cols ? cols->size() : static_cast<std::size_t>(d.x.cols())) + 2;
}

}  // namespace detail

// Pairwise logits of target-cell membership against each comparison cell,
// fit on the rows of the two cells and predicted for the whole subsample.
inline GPSModel fit_gps(const UnitDiffs& sub, const DrDesign& design, const DrOptions& opt = {}) {
  GPSModel out;
  out.target = design.target;
  const DesignMatrix x = detail::covariate_design(sub, opt.gps_covariates);
  const auto need = detail::min_units(sub, opt.gps_covariates);
  const auto target_rows = detail::rows_in(sub, design.target);
  if (target_rows.size() < need)
    throw EmptyCellError("fit_gps: target cell " + design.target.label() + " has " +
                         std::to_string(target_rows.size()) + " units, need " + std::to_string(need));
  for (const auto& comp : design.comparisons) {
    const auto comp_rows = detail::rows_in(sub, comp);
    if (comp_rows.size() < need)
      throw EmptyCellError("fit_gps: comparison cell " + comp.label() + " has " + std::to_string(comp_rows.size()) +
                           " units, need " + std::to_string(need));
    std::vector<std::size_t> idx = target_rows;
    idx.insert(idx.end(), comp_rows.begin(), comp_rows.end());
    VectorXd y = VectorXd::Zero(static_cast<Eigen::Index>(idx.size()));
    y.head(static_cast<Eigen::Index>(target_rows.size())).setOnes();
    GPSModel::Pair pair;
    pair.comparison = comp;
    pair.logit = logit_fit(detail::take_rows(x, idx), y);
    pair.p = logistic(linear_predictor(pair.logit, x));
    for (Eigen::Index k = 0; k < pair.p.size(); ++k) {
      const double clamped = std::clamp(pair.p(k), opt.trim, 1.0 - opt.trim);
      if (clamped != pair.p(k) && comp.contains(sub.cells[static_cast<std::size_t>(k)])) ++pair.winsorized;
      pair.p(k) = clamped;
    }
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

// OLS of dY on (1, X) within one cell, predicted for the whole subsample.
inline OutcomeModel fit_outcome_reg(const UnitDiffs& sub, const CellGroup& cell, const DrOptions& opt = {}) {
  const DesignMatrix x = detail::covariate_design(sub, opt.outcome_covariates);
  const auto rows = detail::rows_in(sub, cell);
  const auto need = detail::min_units(sub, opt.outcome_covariates);
  if (rows.size() < need)
    throw EmptyCellError("fit_outcome_reg: cell " + cell.label() + " has " + std::to_string(rows.size()) +
                         " units, need " + std::to_string(need));
  VectorXd y(static_cast<Eigen::Index>(rows.size()));
  std::vector<std::size_t> singleton(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    y(static_cast<Eigen::Index>(k)) = sub.dy(static_cast<Eigen::Index>(rows[k]));
    singleton[k] = k;
  }
  OutcomeModel out;
  out.cell = cell;
  out.fit = ols_fit(detail::take_rows(x, rows), y, singleton);
  out.m = linear_predictor(out.fit, x);
  return out;
}

inline DRWeights dr_weights(const UnitDiffs& sub, const CellGroup& target, const CellGroup& comp, const VectorXd& p) {
  const auto n = static_cast<Eigen::Index>(sub.size());
  DRWeights w{VectorXd::Zero(n), VectorXd::Zero(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& c = sub.cells[static_cast<std::size_t>(k)];
    if (target.contains(c)) w.target(k) = 1.0;
    if (comp.contains(c)) w.comparison(k) = p(k) / (1.0 - p(k));
  }
  w.target /= w.target.mean();
  w.comparison /= w.comparison.mean();
  return w;
}

struct DrPoint {
  double value = 0.0;
  std::array<double, 3> terms{};
  std::size_t n_units = 0;
  std::size_t winsorized = 0;
};

// Sample analogue of the three-term doubly-robust contrast on precomputed
// unit differences.
inline DrPoint dr_point(const UnitDiffs& all, const DrDesign& design, const DrOptions& opt = {}) {
  const UnitDiffs sub = detail::restrict_to(all, design);
  const GPSModel gps = fit_gps(sub, design, opt);
  DrPoint out;
  out.n_units = sub.size();
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& comp = design.comparisons[c];
    const OutcomeModel om = fit_outcome_reg(sub, comp, opt);
    const DRWeights w = dr_weights(sub, design.target, comp, gps.pairs[c].p);
    const double total = w.comparison.sum();
    const double n_comp = static_cast<double>(detail::rows_in(sub, comp).size());
    const double cap = std::max(opt.weight_cap, 10.0 / n_comp);
    if (opt.weight_cap < 1.0 && w.comparison.maxCoeff() / total > cap)
      throw OverlapError("extreme propensity weight in comparison cell " + comp.label() + ": " +
                         std::to_string(w.comparison.maxCoeff() / total) + " of the total");
    out.terms[c] = ((w.target - w.comparison).array() * (sub.dy - om.m).array()).mean();
    out.value += design.signs[c] * out.terms[c];
    out.winsorized += gps.pairs[c].winsorized;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bootstrap

namespace detail {
// The weight guard judges the observed sample; resamples that duplicate a
// heavy unit are not evidence of an overlap failure.
inline DrOptions replicate_options(DrOptions opt) {
  opt.weight_cap = 1.0;
  return opt;
}
}  // namespace detail

struct BootstrapResult {
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t replicates = 0;
  std::size_t failures = 0;
};

// Resamples units with replacement within each (S,G,I) cell. Replicate r
// draws from Philox(seed, "bootstrap", r); replicates run concurrently and
// are reduced in index order.
template <typename Estimator>
BootstrapResult bootstrap(const UnitDiffs& data, double point, Estimator&& estimator, int b, std::uint64_t seed,
                          unsigned threads) {
  if (b < 50) throw InputError("bootstrap: B must be at least 50");
  std::map<Cell, std::vector<std::size_t>> strata;
  for (std::size_t k = 0; k < data.size(); ++k) strata[data.cells[k]].push_back(k);

  std::vector<double> reps(static_cast<std::size_t>(b), std::nan(""));
  parallel_for(reps.size(), threads, [&](std::size_t r) {
    rng::Philox gen(seed, "bootstrap", r);
    std::vector<std::size_t> idx;
    idx.reserve(data.size());
    for (const auto& [cell, members] : strata) {
      const auto m = members.size();
      for (std::size_t k = 0; k < m; ++k) idx.push_back(members[static_cast<std::size_t>(gen.uniform() * m)]);
    }
    try {
      reps[r] = estimator(data.take(idx));
    } catch (const EstimationError&) {
    }
  });

  BootstrapResult out;
  double sum = 0.0;
  for (double v : reps)
    if (std::isfinite(v)) {
      sum += v;
      ++out.replicates;
    }
  out.failures = reps.size() - out.replicates;
  if (out.failures * 10 > reps.size())
    throw EstimationError("bootstrap: " + std::to_string(out.failures) + " of " + std::to_string(reps.size()) +
                          " replicates failed (likely overlap failure)");
  const double mean = sum / static_cast<double>(out.replicates);
  double ss = 0.0;
  for (double v : reps)
    if (std::isfinite(v)) ss += (v - mean) * (v - mean);
  out.se = out.replicates > 1 ? std::sqrt(ss / static_cast<double>(out.replicates - 1)) : 0.0;
  out.ci_low = point - kZ95 * out.se;
  out.ci_high = point + kZ95 * out.se;
  return out;
}

namespace detail {

inline UnitDiffs prepare_dr_input(const PanelDataset& data, const DrOptions& opt) {
  if (!data.has_covariates())
    throw InputError("doubly-robust estimators require covariate columns");
  if (data.time_values().size() != 2 && opt.post_from) return unit_differences(to_two_period(data, *opt.post_from));
  return unit_differences(data);
}

inline Estimate dr_estimate(const PanelDataset& data, const DrDesign& design, const DrOptions& opt) {
  const UnitDiffs diffs = prepare_dr_input(data, opt);
  const DrPoint point = dr_point(diffs, design, opt);
  const DrOptions replicate_opt = detail::replicate_options(opt);
  Estimate e = make_estimate(design.estimand, point.value, 0.0, 2 * point.n_units, point.n_units);
  if (opt.bootstrap_b > 0) {
    const auto bs = bootstrap(
        diffs, point.value, [&](const UnitDiffs& d) { return dr_point(d, design, replicate_opt).value; }, opt.bootstrap_b,
        opt.seed, opt.threads);
    e = make_estimate(design.estimand, point.value, bs.se, 2 * point.n_units, point.n_units);
  }
  return e;
}

}  // namespace detail

// ATT of the target cell (S=1,G=1,I=0) on the target/pure-control subsample.
inline Estimate dr_att(const PanelDataset& data, const DrOptions& opt = {}) {
  return detail::dr_estimate(data, dr_design::att(), opt);
}

// Spillover on the interference cell (S=1,G=0,I=1) on the interference/pure-control subsample.
inline Estimate dr_asu(const PanelDataset& data, const DrOptions& opt = {}) {
  return detail::dr_estimate(data, dr_design::asu(), opt);
}

// Doubly-robust TD with controls pooled over the interference indicator.
inline Estimate dr_td(const PanelDataset& data, const DrOptions& opt = {}) {
  return detail::dr_estimate(data, dr_design::pooled_td(), opt);
}

// Bootstrap SE and normal interval for one of the doubly-robust estimators.
inline BootstrapResult bootstrap_ci(const DrDesign& design, const PanelDataset& data, int b, std::uint64_t seed,
                                    const DrOptions& opt = {}) {
  const UnitDiffs diffs = detail::prepare_dr_input(data, opt);
  const double point = dr_point(diffs, design, opt).value;
  const DrOptions replicate_opt = detail::replicate_options(opt);
  return bootstrap(
      diffs, point, [&](const UnitDiffs& d) { return dr_point(d, design, replicate_opt).value; }, b, seed,
      opt.threads);
}

}  // namespace tridiff
