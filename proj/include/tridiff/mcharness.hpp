#pragma once

// Monte Carlo driver: K replications of generate -> estimate per grid point
// and model, summarized as bias, MSE and normal-interval coverage.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "dgp.hpp"
#include "drdtd.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "tdiff.hpp"

namespace tridiff::mc {

enum class Model { TD_3FE, DTD_3FE, TD_2P, DTD_2P, DR_TD, DR_DTD };

inline std::string to_string(Model m) {
  switch (m) {
    case Model::TD_3FE: return "TD_3FE";
    case Model::DTD_3FE: return "DTD_3FE";
    case Model::TD_2P: return "TD_2P";
    case Model::DTD_2P: return "DTD_2P";
    case Model::DR_TD: return "DR_TD";
    case Model::DR_DTD: return "DR_DTD";
  }
  return "?";
}

inline Model parse_model(const std::string& s) {
  for (Model m : {Model::TD_3FE, Model::DTD_3FE, Model::TD_2P, Model::DTD_2P, Model::DR_TD, Model::DR_DTD})
    if (to_string(m) == s) return m;
  throw InputError("unknown model: " + s);
}

struct Sim1Point {
  dgp::Sim1Config config;
  dgp::Sim1Scenario scenario = dgp::Sim1Scenario::SUTVA;
};

struct Sim2Point {
  dgp::Sim2Config config;
  dgp::Sim2Scenario scenario = dgp::Sim2Scenario::SUTVA;
};

struct GridPoint {
  std::string id;
  std::variant<Sim1Point, Sim2Point> design;
};

struct StudyConfig {
  std::vector<GridPoint> grid;
  std::vector<Model> models;
  int K = 100;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;  // 0 = all cores
  int bootstrap_b = 200;
  std::optional<std::vector<std::size_t>> gps_covariates;
  std::optional<std::vector<std::size_t>> outcome_covariates;
  double max_failure_rate = 0.05;
  bool keep_raw = false;

  void validate() const {
    if (K < 2) throw InputError("StudyConfig: K must be at least 2");
    if (grid.empty()) throw InputError("StudyConfig: empty scenario grid");
    if (models.empty()) throw InputError("StudyConfig: no models selected");
  }
};

struct Metrics {
  double bias = 0.0;
  double mse = 0.0;
  double coverage = 0.0;
};

struct MetricRow {
  std::string scenario;
  Model model = Model::TD_3FE;
  std::string type;  // "ATT" or "spillover"
  double bias = 0.0;
  double mse = 0.0;
  double coverage = 0.0;
  int k_effective = 0;
  double mc_se = 0.0;  // sd(estimates) / sqrt(K_effective)
};

struct RawRecord {
  std::string scenario;
  int iteration = 0;
  Model model = Model::TD_3FE;
  std::string type;
  double point = 0.0;
  double se = 0.0;
};

struct StudyReport {
  std::vector<MetricRow> rows;
  std::vector<RawRecord> raw;
  StudyConfig config;
  double wall_seconds = 0.0;

  const MetricRow& row(const std::string& scenario, Model model, const std::string& type) const {
    for (const auto& r : rows)
      if (r.scenario == scenario && r.model == model && r.type == type) return r;
    throw InputError("no report row for " + scenario + "/" + to_string(model) + "/" + type);
  }
};

// bias = mean(est - truth), mse = mean((est - truth)^2),
// coverage = share of |est - truth| <= 1.96 se.
inline Metrics summarize(const std::vector<std::pair<double, double>>& estimates, double truth) {
  if (estimates.empty()) throw InputError("summarize: empty estimate list");
  Metrics m;
  double covered = 0.0;
  for (const auto& [point, se] : estimates) {
    if (se < 0) throw InputError("summarize: negative standard error");
    const double err = point - truth;
    m.bias += err;
    m.mse += err * err;
    if (std::abs(err) <= kZ95 * se) covered += 1.0;
  }
  const auto k = static_cast<double>(estimates.size());
  m.bias /= k;
  m.mse /= k;
  m.coverage = covered / k;
  return m;
}

namespace detail {

struct Fitted {
  Model model;
  std::string type;
  double point;
  double se;
  double truth;
};

struct Iteration {
  std::vector<Fitted> estimates;
  std::vector<Model> failed;
};

inline void run_model(Model model, const dgp::GeneratedPanel& panel, int post_from, const StudyConfig& cfg,
                      std::uint64_t seed, std::vector<Fitted>& out) {
  const auto& data = panel.data;
  const auto& truth = panel.truth;
  auto push = [&](const Estimate& e) {
    const auto type = estimand_type(e.estimand);
    out.push_back({model, type, e.point, e.se, type == "ATT" ? truth.delta : truth.psi1});
  };
  auto two_period = [&] { return data.time_values().size() == 2 ? data : to_two_period(data, post_from); };
  DrOptions dro;
  dro.bootstrap_b = cfg.bootstrap_b;
  dro.seed = rng::derive_seed(seed, "bootstrap", 0);
  dro.gps_covariates = cfg.gps_covariates;
  dro.outcome_covariates = cfg.outcome_covariates;
  dro.threads = 1;
  switch (model) {
    case Model::TD_3FE: push(td_threeway_fe(data, post_from).delta); break;
    case Model::DTD_3FE: {
      const auto r = dtd_threeway_fe(data, post_from);
      push(r.delta);
      push(*r.psi);
      break;
    }
    case Model::TD_2P: push(td_two_period(two_period()).delta); break;
    case Model::DTD_2P: {
      const auto r = dtd_two_period(two_period());
      push(r.delta);
      push(r.psi);
      break;
    }
    case Model::DR_TD: push(dr_td(two_period(), dro)); break;
    case Model::DR_DTD: {
      const auto d2 = two_period();
      push(dr_att(d2, dro));
      push(dr_asu(d2, dro));
      break;
    }
  }
}

inline dgp::GeneratedPanel generate(const GridPoint& gp, std::uint64_t seed, int& post_from) {
  if (const auto* p1 = std::get_if<Sim1Point>(&gp.design)) {
    auto c = p1->config;
    c.seed = seed;
    post_from = c.treat_from;
    return dgp::gen_sim1(c, p1->scenario);
  }
  const auto& p2 = std::get<Sim2Point>(gp.design);
  auto c = p2.config;
  c.seed = seed;
  post_from = 1;
  return dgp::gen_sim2(c, p2.scenario);
}

}  // namespace detail

// Seed of iteration k at grid point g: derive(derive(master, "grid", g), "iteration", k).
inline std::uint64_t iteration_seed(std::uint64_t master, std::size_t grid, std::size_t k) {
  return rng::derive_seed(rng::derive_seed(master, "grid", grid), "iteration", k);
}

inline StudyReport run_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto K = static_cast<std::size_t>(cfg.K);
  const std::size_t n_grid = cfg.grid.size();
  std::vector<detail::Iteration> results(n_grid * K);

  parallel_for(results.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t g = job / K, k = job % K;
    const auto seed = iteration_seed(cfg.master_seed, g, k);
    int post_from = 0;
    const auto panel = detail::generate(cfg.grid[g], seed, post_from);
    auto& it = results[job];
    for (Model m : cfg.models) {
      std::vector<detail::Fitted> fitted;
      try {
        detail::run_model(m, panel, post_from, cfg, seed, fitted);
        it.estimates.insert(it.estimates.end(), fitted.begin(), fitted.end());
      } catch (const EstimationError&) {
        it.failed.push_back(m);
      }
    }
  });

  StudyReport report;
  report.config = cfg;
  for (std::size_t g = 0; g < n_grid; ++g) {
    const auto& id = cfg.grid[g].id;
    for (Model m : cfg.models) {
      std::size_t failures = 0;
      std::map<std::string, std::vector<std::pair<double, double>>> by_type;
      std::map<std::string, double> truth;
      for (std::size_t k = 0; k < K; ++k) {
        const auto& it = results[g * K + k];
        if (std::find(it.failed.begin(), it.failed.end(), m) != it.failed.end()) ++failures;
        for (const auto& f : it.estimates) {
          if (f.model != m) continue;
          by_type[f.type].emplace_back(f.point, f.se);
          truth[f.type] = f.truth;
          if (cfg.keep_raw) report.raw.push_back({id, static_cast<int>(k), m, f.type, f.point, f.se});
        }
      }
      if (static_cast<double>(failures) > cfg.max_failure_rate * static_cast<double>(K))
        throw StudyQualityError("study cell " + id + "/" + to_string(m) + ": " + std::to_string(failures) + " of " +
                                std::to_string(K) + " iterations failed");
      for (const std::string type : {"ATT", "spillover"}) {
        auto found = by_type.find(type);
        if (found == by_type.end()) continue;
        const auto& est = found->second;
        const Metrics mt = summarize(est, truth[type]);
        const double var = mt.mse - mt.bias * mt.bias;
        const double kk = static_cast<double>(est.size());
        const double mc_se = est.size() > 1 ? std::sqrt(std::max(0.0, var) * kk / (kk - 1.0) / kk) : 0.0;
        report.rows.push_back({id, m, type, mt.bias, mt.mse, mt.coverage, static_cast<int>(est.size()), mc_se});
      }
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// scenario,model,type,bias,mse,coverage,k
inline void write_report_csv(std::ostream& out, const StudyReport& r) {
  out << "scenario,model,type,bias,mse,coverage,k\n";
  for (const auto& row : r.rows)
    out << csv::quote(row.scenario) << ',' << to_string(row.model) << ',' << row.type << ','
        << csv::format_real(row.bias) << ',' << csv::format_real(row.mse) << ',' << csv::format_real(row.coverage)
        << ',' << row.k_effective << '\n';
}

// scenario,iteration,model,type,point,se
inline void write_raw_csv(std::ostream& out, const StudyReport& r) {
  out << "scenario,iteration,model,type,point,se\n";
  for (const auto& x : r.raw)
    out << csv::quote(x.scenario) << ',' << x.iteration << ',' << to_string(x.model) << ',' << x.type << ','
        << csv::format_real(x.point) << ',' << csv::format_real(x.se) << '\n';
}

}  // namespace tridiff::mc
