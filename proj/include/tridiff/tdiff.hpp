#pragma once

// Triple-difference (TD) and double-triple-difference (DTD) estimators:
// saturated two-period regressions, three-way fixed-effects panel
// specifications, and a brute-force cell-mean contrast evaluator.

#include <optional>
#include <string>
#include <vector>

#include "paneldata.hpp"
#include "regress.hpp"

namespace tridiff {

enum class Estimand { ATT_delta, Spillover_psi, DR_delta, DR_phi };

inline std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::ATT_delta: return "ATT_delta";
    case Estimand::Spillover_psi: return "Spillover_psi";
    case Estimand::DR_delta: return "DR_delta";
    case Estimand::DR_phi: return "DR_phi";
  }
  return "?";
}

// "ATT" or "spillover", the parameter type column of the simulation tables.
inline std::string estimand_type(Estimand e) {
  return (e == Estimand::ATT_delta || e == Estimand::DR_delta) ? "ATT" : "spillover";
}

inline constexpr double kZ95 = 1.96;

struct Estimate {
  Estimand estimand = Estimand::ATT_delta;
  double point = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_units = 0;
};

inline Estimate make_estimate(Estimand e, double point, double se, std::size_t n_obs, std::size_t n_units) {
  return {e, point, se, point - kZ95 * se, point + kZ95 * se, n_obs, n_units};
}

// ---------------------------------------------------------------------------
// Cell-mean contrasts

struct ContrastTerm {
  int s = 0;
  int g = 0;
  int i = 0;  // -1 pools over i
  int t = 0;
  int sign = 1;
};

class ContrastSpec {
 public:
  explicit ContrastSpec(std::vector<ContrastTerm> terms) : terms_(std::move(terms)) {
    int plus = 0, minus = 0;
    for (const auto& k : terms_) {
      if (k.sign == 1) ++plus;
      else if (k.sign == -1) ++minus;
      else throw InputError("ContrastSpec: signs must be +1 or -1");
    }
    if (plus != minus || terms_.empty()) throw InputError("ContrastSpec: signs must balance");
  }
  const std::vector<ContrastTerm>& terms() const { return terms_; }

  // sign * (cell at t=1 - cell at t=0) for each listed cell
  static ContrastSpec from_differences(const std::vector<std::pair<Cell, int>>& cells, int pool_i_as = 0) {
    std::vector<ContrastTerm> terms;
    for (const auto& [c, sign] : cells) {
      const int i = pool_i_as == -1 && c.g == 0 ? -1 : c.i;
      terms.push_back({c.s, c.g, i, 1, sign});
      terms.push_back({c.s, c.g, i, 0, -sign});
    }
    return ContrastSpec(std::move(terms));
  }

 private:
  std::vector<ContrastTerm> terms_;
};

namespace contrast {
// (T1 - C1) - (T0 - C0)
inline ContrastSpec dtd_delta() {
  return ContrastSpec::from_differences(
      {{{1, 1, 0}, 1}, {{1, 0, 0}, -1}, {{0, 1, 0}, -1}, {{0, 0, 0}, 1}});
}
// (I1 - C1) - (I0 - C0)
inline ContrastSpec dtd_psi() {
  return ContrastSpec::from_differences(
      {{{1, 0, 1}, 1}, {{1, 0, 0}, -1}, {{0, 0, 1}, -1}, {{0, 0, 0}, 1}});
}
// controls pooled over i
inline ContrastSpec td_delta() {
  return ContrastSpec::from_differences(
      {{{1, 1, 0}, 1}, {{1, 0, 0}, -1}, {{0, 1, 0}, -1}, {{0, 0, 0}, 1}}, -1);
}
inline ContrastSpec td_psi() {
  return ContrastSpec::from_differences({{{1, 0, 0}, 1}, {{0, 0, 0}, -1}}, -1);
}
}  // namespace contrast

// Sum of sign * mean(outcome) over the referenced (s,g,i,t) cells of a
// two-period panel. Times are mapped to 0 (earlier) and 1 (later).
inline double cell_mean_oracle(const PanelDataset& data, const ContrastSpec& spec) {
  const auto& tv = data.time_values();
  if (tv.size() != 2) throw EstimationError("cell_mean_oracle: expected two periods");
  double total = 0.0;
  for (const auto& term : spec.terms()) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : data.rows()) {
      const int t = r.time == tv[1] ? 1 : 0;
      if (r.s == term.s && r.g == term.g && (term.i < 0 || r.i == term.i) && t == term.t) {
        sum += r.outcome;
        ++n;
      }
    }
    if (n == 0)
      throw EmptyCellError("cell_mean_oracle: empty cell (S=" + std::to_string(term.s) + ",G=" +
                           std::to_string(term.g) + ",I=" + std::to_string(term.i) + ",t=" + std::to_string(term.t) +
                           ")");
    total += term.sign * sum / static_cast<double>(n);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Two-period saturated regressions

struct TwoPeriodResult {
  Estimate delta;
  Estimate psi;
  FitResult fit;
};

namespace detail {

inline void require_two_periods(const PanelDataset& data, const char* who) {
  if (data.time_values().size() != 2)
    throw EstimationError(std::string(who) + ": requires exactly two periods, got " +
                          std::to_string(data.time_values().size()));
}

inline void require_cells(const PanelDataset& data, const std::vector<Cell>& cells, bool pool_i, const char* who) {
  const int later = data.time_values()[1];
  for (const auto& c : cells) {
    bool seen[2] = {false, false};
    for (const auto& r : data.rows())
      if (r.s == c.s && r.g == c.g && (pool_i || r.i == c.i)) seen[r.time == later ? 1 : 0] = true;
    if (!seen[0] || !seen[1])
      throw EmptyCellError(std::string(who) + ": empty cell " + to_string(c) +
                           (seen[0] ? " in the post period" : " in the pre period"));
  }
}

struct Regressor {
  std::string name;
  int s, g, i, t;  // exponents: product of the listed indicators
};

inline TwoPeriodResult fit_saturated(const PanelDataset& data, const std::vector<Regressor>& regs,
                                     const std::string& delta_name, const std::string& psi_name,
                                     Estimand psi_estimand) {
  const int later = data.time_values()[1];
  const auto n = static_cast<Eigen::Index>(data.size());
  std::vector<std::string> names;
  for (const auto& r : regs) names.push_back(r.name);
  DesignMatrix x(n, names);
  VectorXd y(n);
  const auto& rows = data.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& o = rows[static_cast<std::size_t>(k)];
    const int t = o.time == later ? 1 : 0;
    y(k) = o.outcome;
    for (std::size_t j = 0; j < regs.size(); ++j) {
      const auto& r = regs[j];
      const int v = (r.s ? o.s : 1) * (r.g ? o.g : 1) * (r.i ? o.i : 1) * (r.t ? t : 1);
      x.x(k, static_cast<Eigen::Index>(j)) = v;
    }
  }
  TwoPeriodResult out;
  out.fit = ols_fit(x, y, data.cluster_index());
  const auto nobs = data.size();
  const auto nunits = data.n_units();
  out.delta = make_estimate(Estimand::ATT_delta, out.fit.coef(delta_name), out.fit.se(delta_name), nobs, nunits);
  out.psi = make_estimate(psi_estimand, out.fit.coef(psi_name), out.fit.se(psi_name), nobs, nunits);
  return out;
}

}  // namespace detail

// Y = b0 + b1 S + b2 G + b3 T + b4 SG + b5 GT + psi ST + delta SGT + e.
// The interference indicator is ignored (controls pooled).
inline TwoPeriodResult td_two_period(const PanelDataset& data) {
  detail::require_two_periods(data, "td_two_period");
  detail::require_cells(data, {{1, 1, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 0}}, true, "td_two_period");
  return detail::fit_saturated(data,
                               {{"const", 0, 0, 0, 0},
                                {"S", 1, 0, 0, 0},
                                {"G", 0, 1, 0, 0},
                                {"T", 0, 0, 0, 1},
                                {"SxG", 1, 1, 0, 0},
                                {"GxT", 0, 1, 0, 1},
                                {"SxT", 1, 0, 0, 1},
                                {"SxGxT", 1, 1, 0, 1}},
                               "SxGxT", "SxT", Estimand::Spillover_psi);
}

// Saturated DTD regression; delta is the S x G x T and psi the S x I x T
// coefficient.
inline TwoPeriodResult dtd_two_period(const PanelDataset& data) {
  detail::require_two_periods(data, "dtd_two_period");
  detail::require_cells(data, {kAllCells.begin(), kAllCells.end()}, false, "dtd_two_period");
  return detail::fit_saturated(data,
                               {{"const", 0, 0, 0, 0},
                                {"S", 1, 0, 0, 0},
                                {"T", 0, 0, 0, 1},
                                {"G", 0, 1, 0, 0},
                                {"I", 0, 0, 1, 0},
                                {"SxG", 1, 1, 0, 0},
                                {"SxT", 1, 0, 0, 1},
                                {"GxT", 0, 1, 0, 1},
                                {"SxI", 1, 0, 1, 0},
                                {"IxT", 0, 0, 1, 1},
                                {"SxGxT", 1, 1, 0, 1},
                                {"SxIxT", 1, 0, 1, 1}},
                               "SxGxT", "SxIxT", Estimand::Spillover_psi);
}

// ---------------------------------------------------------------------------
// Three-way fixed effects

struct ThreeWayOptions {
  std::optional<int> base_year;  // default: earliest period
  // Adds year x I effects to the DTD specification. Not part of the reference
  // specification; for sensitivity analysis only.
  bool year_by_interference = false;
};

struct ThreeWayResult {
  Estimate delta;
  std::optional<Estimate> psi;
  FitResult fit;
};

namespace detail {

inline ThreeWayResult fit_threeway(const PanelDataset& data, int post_from, bool with_psi, const ThreeWayOptions& opt,
                                   const char* who) {
  const auto& tv = data.time_values();
  if (tv.size() < 2) throw EstimationError(std::string(who) + ": requires at least two periods");
  if (post_from <= tv.front() || post_from > tv.back())
    throw InputError(std::string(who) + ": post_from " + std::to_string(post_from) + " outside (" +
                     std::to_string(tv.front()) + ", " + std::to_string(tv.back()) + "]");
  const int base = opt.base_year.value_or(tv.front());
  if (std::find(tv.begin(), tv.end(), base) == tv.end())
    throw InputError(std::string(who) + ": base year " + std::to_string(base) + " not observed");

  std::vector<int> years;
  for (int t : tv)
    if (t != base) years.push_back(t);
  const bool year_i = with_psi && opt.year_by_interference;

  std::vector<std::string> names;
  for (int t : years) names.push_back("year_" + std::to_string(t));
  for (int t : years) names.push_back("S_x_year_" + std::to_string(t));
  for (int t : years) names.push_back("G_x_year_" + std::to_string(t));
  if (year_i)
    for (int t : years) names.push_back("I_x_year_" + std::to_string(t));
  names.push_back("SxGxT");
  if (with_psi) names.push_back("SxIxT");

  const auto n = static_cast<Eigen::Index>(data.size());
  const auto ny = static_cast<Eigen::Index>(years.size());
  DesignMatrix x(n, names);
  VectorXd y(n);
  const auto& rows = data.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& o = rows[static_cast<std::size_t>(k)];
    y(k) = o.outcome;
    const auto it = std::find(years.begin(), years.end(), o.time);
    if (it != years.end()) {
      const auto j = static_cast<Eigen::Index>(it - years.begin());
      x.x(k, j) = 1.0;
      x.x(k, ny + j) = o.s;
      x.x(k, 2 * ny + j) = o.g;
      if (year_i) x.x(k, 3 * ny + j) = o.i;
    }
    const int post = o.time >= post_from ? 1 : 0;
    const Eigen::Index tail = (year_i ? 4 : 3) * ny;
    x.x(k, tail) = o.s * o.g * post;
    if (with_psi) x.x(k, tail + 1) = o.s * o.i * post;
  }
  const auto& units = data.unit_index();
  const DesignMatrix xd = within_demean(x, units);
  const VectorXd yd = within_demean(MatrixXd(y), units).col(0);

  ThreeWayResult out;
  out.fit = ols_fit(xd, yd, data.cluster_index());
  const auto nobs = data.size();
  const auto nunits = data.n_units();
  out.delta = make_estimate(Estimand::ATT_delta, out.fit.coef("SxGxT"), out.fit.se("SxGxT"), nobs, nunits);
  if (with_psi)
    out.psi = make_estimate(Estimand::Spillover_psi, out.fit.coef("SxIxT"), out.fit.se("SxIxT"), nobs, nunits);
  return out;
}

}  // namespace detail

// Y = unit FE + year FE + year x S + year x G + delta S G T + e, with unit
// effects absorbed by within-unit demeaning.
inline ThreeWayResult td_threeway_fe(const PanelDataset& data, int post_from, const ThreeWayOptions& opt = {}) {
  return detail::fit_threeway(data, post_from, false, opt, "td_threeway_fe");
}

// As td_threeway_fe plus psi S I T. There are no year x I effects unless
// opt.year_by_interference is set.
inline ThreeWayResult dtd_threeway_fe(const PanelDataset& data, int post_from, const ThreeWayOptions& opt = {}) {
  return detail::fit_threeway(data, post_from, true, opt, "dtd_threeway_fe");
}

}  // namespace tridiff
