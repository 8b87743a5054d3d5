#pragma once

// Numerical engine: least squares with cluster-robust (CR0) covariance,
// within-unit demeaning, logistic regression by IRLS, and Wald tests.

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "paneldata.hpp"

namespace tridiff {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DesignMatrix {
  MatrixXd x;
  std::vector<std::string> names;

  DesignMatrix() = default;
  DesignMatrix(Eigen::Index rows, std::vector<std::string> column_names)
      : x(MatrixXd::Zero(rows, static_cast<Eigen::Index>(column_names.size()))), names(std::move(column_names)) {}

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }

  std::optional<Eigen::Index> find(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - names.begin());
  }

  void add_column(std::string name, const VectorXd& values) {
    x.conservativeResize(values.size(), x.cols() + 1);
    x.col(x.cols() - 1) = values;
    names.push_back(std::move(name));
  }
};

struct FitResult {
  std::vector<std::string> names;
  VectorXd coefficients;
  MatrixXd vcov;
  VectorXd residuals;
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
  std::size_t df = 0;
  std::vector<std::string> pruned;  // collinear columns dropped before fitting
  int iterations = 0;               // IRLS only

  std::optional<Eigen::Index> find(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - names.begin());
  }
  Eigen::Index index_of(const std::string& name) const {
    auto k = find(name);
    if (!k) throw RankError("coefficient " + name + " is not identified (pruned or absent)");
    return *k;
  }
  double coef(const std::string& name) const { return coefficients(index_of(name)); }
  double se(const std::string& name) const {
    const auto k = index_of(name);
    return std::sqrt(std::max(0.0, vcov(k, k)));
  }
};

struct TestResult {
  double statistic = 0.0;
  int df = 1;
  double p_value = 1.0;
};

// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, int df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

// Two-sided normal p-value for a z statistic.
inline double normal_two_sided_p(double z) { return chi_square_sf(z * z, 1); }

// ---------------------------------------------------------------------------
// Collinearity pruning

// Columns are admitted in order; a column whose squared residual after
// projection on the admitted ones is below tol times its squared norm is
// dropped. Later columns lose to earlier ones.
inline std::vector<Eigen::Index> independent_columns(const MatrixXd& x, double tol = 1e-9) {
  const MatrixXd gram = x.transpose() * x;
  std::vector<Eigen::Index> kept;
  MatrixXd chol(gram.rows(), gram.cols());
  for (Eigen::Index j = 0; j < gram.cols(); ++j) {
    const double ajj = gram(j, j);
    if (!(ajj > 0.0)) continue;
    const auto k = static_cast<Eigen::Index>(kept.size());
    VectorXd l(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      double v = gram(kept[a], j);
      for (Eigen::Index b = 0; b < a; ++b) v -= chol(a, b) * l(b);
      l(a) = v / chol(a, a);
    }
    const double d = ajj - l.squaredNorm();
    if (d <= tol * ajj) continue;
    chol.row(k).head(k) = l.transpose();
    chol(k, k) = std::sqrt(d);
    kept.push_back(j);
  }
  return kept;
}

inline DesignMatrix select_columns(const DesignMatrix& d, const std::vector<Eigen::Index>& cols) {
  DesignMatrix out;
  out.x.resize(d.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.x.col(static_cast<Eigen::Index>(k)) = d.x.col(cols[k]);
    out.names.push_back(d.names[cols[k]]);
  }
  return out;
}

namespace detail {

inline std::vector<std::string> pruned_names(const DesignMatrix& d, const std::vector<Eigen::Index>& kept) {
  std::vector<std::string> out;
  std::size_t k = 0;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    if (k < kept.size() && kept[k] == j)
      ++k;
    else
      out.push_back(d.names[j]);
  }
  return out;
}

inline std::size_t count_clusters(std::span<const std::size_t> clusters) {
  if (clusters.empty()) return 0;
  return *std::max_element(clusters.begin(), clusters.end()) + 1;
}

}  // namespace detail

// Maps arbitrary labels to dense 0-based indices in order of first appearance.
template <typename T>
std::vector<std::size_t> dense_index(std::span<const T> labels) {
  std::unordered_map<T, std::size_t> seen;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(seen.try_emplace(l, seen.size()).first->second);
  return out;
}

// ---------------------------------------------------------------------------
// OLS

struct OlsOptions {
  bool cr1 = false;  // G/(G-1) * (n-1)/(n-k) small-sample factor
  double prune_tol = 1e-9;
};

// clusters: dense cluster index per row (0..G-1).
inline FitResult ols_fit(const DesignMatrix& design, const VectorXd& y, std::span<const std::size_t> clusters,
                         const OlsOptions& opt = {}) {
  const auto n = design.rows();
  if (y.size() != n || static_cast<Eigen::Index>(clusters.size()) != n)
    throw InputError("ols_fit: dimension mismatch");
  const std::size_t n_clusters = detail::count_clusters(clusters);
  if (n_clusters < 2) throw EstimationError("ols_fit: fewer than 2 clusters");

  const auto kept = independent_columns(design.x, opt.prune_tol);
  if (kept.empty()) throw RankError("ols_fit: no identifiable columns");
  const DesignMatrix d = select_columns(design, kept);
  const auto p = d.cols();
  if (n < p) throw RankError("ols_fit: more columns than observations");

  Eigen::HouseholderQR<MatrixXd> qr(d.x);
  const MatrixXd r = qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < p; ++j)
    if (std::abs(r(j, j)) < 1e-12 * std::max(1.0, d.x.col(j).norm())) throw RankError("ols_fit: rank-deficient design");

  FitResult fit;
  fit.names = d.names;
  fit.pruned = detail::pruned_names(design, kept);
  fit.coefficients = qr.solve(y);
  fit.residuals = y - d.x * fit.coefficients;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_clusters = n_clusters;
  fit.df = static_cast<std::size_t>(n - p);

  // (X'X)^-1 = R^-1 R^-T
  const MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(p, p));
  const MatrixXd bread = rinv * rinv.transpose();

  MatrixXd scores = MatrixXd::Zero(static_cast<Eigen::Index>(n_clusters), p);
  for (Eigen::Index i = 0; i < n; ++i)
    scores.row(static_cast<Eigen::Index>(clusters[i])) += fit.residuals(i) * d.x.row(i);
  const MatrixXd meat = scores.transpose() * scores;
  MatrixXd v = bread * meat * bread;
  if (opt.cr1) {
    const double g = static_cast<double>(n_clusters);
    v *= g / (g - 1.0) * (static_cast<double>(n) - 1.0) / static_cast<double>(n - p);
  }
  fit.vcov = 0.5 * (v + v.transpose());
  return fit;
}

// ---------------------------------------------------------------------------
// Within-unit demeaning

// Subtracts unit means from every column; units given by dense index per row.
inline MatrixXd within_demean(const MatrixXd& x, std::span<const std::size_t> units) {
  const std::size_t n_units = detail::count_clusters(units);
  MatrixXd sums = MatrixXd::Zero(static_cast<Eigen::Index>(n_units), x.cols());
  std::vector<double> counts(n_units, 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    sums.row(static_cast<Eigen::Index>(units[i])) += x.row(i);
    counts[units[i]] += 1.0;
  }
  for (std::size_t u = 0; u < n_units; ++u) sums.row(static_cast<Eigen::Index>(u)) /= counts[u];
  MatrixXd out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) -= sums.row(static_cast<Eigen::Index>(units[i]));
  return out;
}

inline DesignMatrix within_demean(const DesignMatrix& d, std::span<const std::size_t> units) {
  DesignMatrix out;
  out.x = within_demean(d.x, units);
  out.names = d.names;
  return out;
}

// Builds the named dataset columns ("outcome", "s", "g", "i", or a covariate)
// and demeans them within unit.
inline DesignMatrix within_demean(const PanelDataset& data, const std::vector<std::string>& columns) {
  DesignMatrix d(static_cast<Eigen::Index>(data.size()), columns);
  const auto& rows = data.rows();
  const auto& cov = data.covariate_names();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& name = columns[c];
    std::optional<std::size_t> cov_k;
    if (auto it = std::find(cov.begin(), cov.end(), name); it != cov.end()) cov_k = it - cov.begin();
    if (!cov_k && name != "outcome" && name != "s" && name != "g" && name != "i")
      throw InputError("within_demean: unknown column " + name);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& o = rows[r];
      double v = 0.0;
      if (cov_k) v = o.covariates[*cov_k];
      else if (name == "outcome") v = o.outcome;
      else if (name == "s") v = o.s;
      else if (name == "g") v = o.g;
      else v = o.i;
      d.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return within_demean(d, data.unit_index());
}

// ---------------------------------------------------------------------------
// Logistic regression

struct LogitOptions {
  double score_tol = 1e-8;
  int max_iter = 100;
  double divergence_norm = 1e3;
};

inline VectorXd logistic(const VectorXd& eta) {
  return eta.unaryExpr([](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
}

namespace detail {
inline double bernoulli_loglik(const VectorXd& eta, const VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta(i);
    // log(1 + exp(e)) without overflow
    const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y(i) * e - log1pexp;
  }
  return ll;
}
}  // namespace detail

// Bernoulli maximum likelihood by Newton/IRLS with step halving. The design
// must contain a column of ones. vcov is the inverse observed information.
inline FitResult logit_fit(const DesignMatrix& design, const VectorXd& y, const LogitOptions& opt = {}) {
  const auto n = design.rows();
  if (y.size() != n) throw InputError("logit_fit: dimension mismatch");
  double ones = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw InputError("logit_fit: response is not binary");
    ones += y(i);
  }
  if (ones == 0.0 || ones == static_cast<double>(n)) throw SeparationError("logit_fit: response has a single class");
  bool has_intercept = false;
  for (Eigen::Index j = 0; j < design.cols() && !has_intercept; ++j)
    has_intercept = (design.x.col(j).array() == 1.0).all();
  if (!has_intercept) throw InputError("logit_fit: design has no intercept column");

  const auto kept = independent_columns(design.x);
  const DesignMatrix d = select_columns(design, kept);
  const auto p = d.cols();

  VectorXd beta = VectorXd::Zero(p);
  VectorXd eta = VectorXd::Zero(n);
  double ll = detail::bernoulli_loglik(eta, y);
  int iter = 0;
  bool converged = false;
  Eigen::LDLT<MatrixXd> info;
  for (; iter <= opt.max_iter; ++iter) {
    const VectorXd prob = logistic(eta);
    const VectorXd score = d.x.transpose() * (y - prob);
    const VectorXd w = (prob.array() * (1.0 - prob.array())).matrix();
    info.compute(d.x.transpose() * w.asDiagonal() * d.x);
    if (score.cwiseAbs().maxCoeff() < opt.score_tol) {
      converged = true;
      break;
    }
    if (iter == opt.max_iter) break;
    if (info.info() != Eigen::Success || !(info.vectorD().array() > 0.0).all())
      throw SeparationError("logit_fit: information matrix is singular (perfect separation)");
    const VectorXd step = info.solve(score);
    double scale = 1.0;
    VectorXd next = beta + step;
    VectorXd next_eta = d.x * next;
    double next_ll = detail::bernoulli_loglik(next_eta, y);
    for (int halve = 0; halve < 30 && !(next_ll >= ll - 1e-12 * std::abs(ll)); ++halve) {
      scale *= 0.5;
      next = beta + scale * step;
      next_eta = d.x * next;
      next_ll = detail::bernoulli_loglik(next_eta, y);
    }
    beta = std::move(next);
    eta = std::move(next_eta);
    ll = next_ll;
    if (beta.norm() > opt.divergence_norm)
      throw SeparationError("logit_fit: coefficients diverge (perfect separation)");
  }
  if (!converged) throw SeparationError("logit_fit: no convergence in " + std::to_string(opt.max_iter) + " iterations");
  // A linear predictor that orders the classes perfectly means the data are
  // separable and the likelihood has no maximum, even if the score is tiny.
  double min_one = std::numeric_limits<double>::infinity(), max_zero = -min_one;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) == 1.0)
      min_one = std::min(min_one, eta(i));
    else
      max_zero = std::max(max_zero, eta(i));
  }
  if (min_one > max_zero) throw SeparationError("logit_fit: outcome classes are perfectly separated");
  // Polish with one more Newton step; the score then sits at rounding level.
  if (info.info() == Eigen::Success && (info.vectorD().array() > 0.0).all()) {
    beta += info.solve(d.x.transpose() * (y - logistic(eta)));
    eta = d.x * beta;
    const VectorXd prob = logistic(eta);
    const VectorXd w = (prob.array() * (1.0 - prob.array())).matrix();
    info.compute(d.x.transpose() * w.asDiagonal() * d.x);
  }

  FitResult fit;
  fit.names = d.names;
  fit.pruned = detail::pruned_names(design, kept);
  fit.coefficients = beta;
  fit.vcov = info.solve(MatrixXd::Identity(p, p));
  fit.vcov = 0.5 * (fit.vcov + fit.vcov.transpose()).eval();
  fit.residuals = y - logistic(eta);
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_clusters = static_cast<std::size_t>(n);
  fit.df = static_cast<std::size_t>(n - p);
  fit.iterations = iter;
  return fit;
}

// Linear predictor of a fit on a design with (a superset of) its columns.
inline VectorXd linear_predictor(const FitResult& fit, const DesignMatrix& design) {
  VectorXd eta = VectorXd::Zero(design.rows());
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    auto j = design.find(fit.names[k]);
    if (!j) throw InputError("linear_predictor: design lacks column " + fit.names[k]);
    eta += fit.coefficients(static_cast<Eigen::Index>(k)) * design.x.col(*j);
  }
  return eta;
}

// ---------------------------------------------------------------------------
// Wald test

// W = c' V^-1 c on the named coefficients, chi-square with |names| df.
// A covariance block whose condition number exceeds 1e10 is singular, except
// that numerically zero coefficients (|c| <= 1e-10) with a numerically zero
// block give W = 0: exact noise-free fits land there.
inline TestResult joint_wald(const FitResult& fit, const std::vector<std::string>& names) {
  if (names.empty()) throw InputError("joint_wald: empty coefficient set");
  const auto q = static_cast<Eigen::Index>(names.size());
  VectorXd c(q);
  MatrixXd v(q, q);
  std::vector<Eigen::Index> idx;
  for (const auto& nm : names) idx.push_back(fit.index_of(nm));
  for (Eigen::Index a = 0; a < q; ++a) {
    c(a) = fit.coefficients(idx[a]);
    for (Eigen::Index b = 0; b < q; ++b) v(a, b) = fit.vcov(idx[a], idx[b]);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(v);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const bool singular = !(hi > 1e-24) || !(lo > 0.0) || hi / lo > 1e10;
  TestResult out;
  out.df = static_cast<int>(q);
  if (singular) {
    if (c.cwiseAbs().maxCoeff() <= 1e-10) return out;
    // Zero sampling variance (an exact fit): any nonzero contrast is certain.
    if (!(hi > 1e-24)) {
      out.statistic = std::numeric_limits<double>::infinity();
      out.p_value = 0.0;
      return out;
    }
    throw SingularError("joint_wald: covariance sub-block is singular");
  }
  const VectorXd z = eig.eigenvectors().transpose() * c;
  out.statistic = std::max(0.0, (z.array().square() / eig.eigenvalues().array()).sum());
  out.p_value = chi_square_sf(out.statistic, out.df);
  return out;
}

}  // namespace tridiff
