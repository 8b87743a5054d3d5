#pragma once

// JSON schemas for simulation configs and the JSON mirrors of the CSV
// outputs. Field names follow the C++ struct members.

#include <string>

#include "json.hpp"

#include "dgp.hpp"
#include "mcharness.hpp"
#include "paneldata.hpp"
#include "pretrend.hpp"
#include "tdiff.hpp"

namespace tridiff::dgp {

inline void to_json(nlohmann::json& j, const Gammas& g) {
  j = {{"g00", g.g00}, {"g01", g.g01}, {"g10", g.g10}, {"f11", g.f11}};
}
inline void from_json(const nlohmann::json& j, Gammas& g) {
  g.g00 = j.value("g00", g.g00);
  g.g01 = j.value("g01", g.g01);
  g.g10 = j.value("g10", g.g10);
  g.f11 = j.value("f11", g.f11);
}

inline void to_json(nlohmann::json& j, const Sim1Config& c) {
  j = {{"n_units", c.n_units},   {"n_periods", c.n_periods},
       {"treat_from", c.treat_from}, {"delta", c.delta},
       {"psi1", c.psi1},         {"psi2", c.psi2},
       {"interference_share", c.interference_share},
       {"mu_u", c.mu_u},         {"sigma_u", c.sigma_u},
       {"sigma_t", c.sigma_t},   {"sigma_eps", c.sigma_eps},
       {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, Sim1Config& c) {
  c.n_units = j.value("n_units", c.n_units);
  c.n_periods = j.value("n_periods", c.n_periods);
  c.treat_from = j.value("treat_from", c.treat_from);
  c.delta = j.value("delta", c.delta);
  c.psi1 = j.value("psi1", c.psi1);
  c.psi2 = j.value("psi2", c.psi2);
  c.interference_share = j.value("interference_share", c.interference_share);
  c.mu_u = j.value("mu_u", c.mu_u);
  c.sigma_u = j.value("sigma_u", c.sigma_u);
  c.sigma_t = j.value("sigma_t", c.sigma_t);
  c.sigma_eps = j.value("sigma_eps", c.sigma_eps);
  c.seed = j.value("seed", c.seed);
}

inline void to_json(nlohmann::json& j, const Sim2Config& c) {
  j = {{"n_units", c.n_units}, {"delta", c.delta}, {"psi", c.psi}, {"interference_share", c.interference_share},
       {"gamma", c.gamma},     {"beta1", c.beta1}, {"beta0", c.beta0}, {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, Sim2Config& c) {
  c.n_units = j.value("n_units", c.n_units);
  c.delta = j.value("delta", c.delta);
  c.psi = j.value("psi", c.psi);
  c.interference_share = j.value("interference_share", c.interference_share);
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<Gammas>();
  c.beta1 = j.value("beta1", c.beta1);
  if (j.contains("beta0"))
    c.beta0 = j.at("beta0").get<std::array<double, 4>>();
  else
    for (std::size_t k = 0; k < 4; ++k) c.beta0[k] = 0.5 * c.beta1[k];
  c.seed = j.value("seed", c.seed);
}

}  // namespace tridiff::dgp

namespace tridiff::mc {

// {
//   "K": 200, "master_seed": 1, "threads": 0, "bootstrap_b": 200,
//   "models": ["TD_3FE", "DTD_3FE"],
//   "keep_raw": false,
//   "gps_covariates": [0, 1], "outcome_covariates": [0, 1],   (optional)
//   "grid": [{"id": "SUTVA_50", "design": "sim1", "scenario": "SUTVA",
//             "config": { Sim1Config fields }}, ...]
// }
// design "sim1" takes scenario SUTVA | S1 | S2, design "sim2" SUTVA | SPILL.
inline StudyConfig study_config_from_json(const nlohmann::json& j) {
  try {
    StudyConfig c;
    c.K = j.at("K").get<int>();
    c.master_seed = j.value("master_seed", c.master_seed);
    c.threads = j.value("threads", c.threads);
    c.bootstrap_b = j.value("bootstrap_b", c.bootstrap_b);
    c.keep_raw = j.value("keep_raw", c.keep_raw);
    c.max_failure_rate = j.value("max_failure_rate", c.max_failure_rate);
    if (j.contains("gps_covariates")) c.gps_covariates = j.at("gps_covariates").get<std::vector<std::size_t>>();
    if (j.contains("outcome_covariates"))
      c.outcome_covariates = j.at("outcome_covariates").get<std::vector<std::size_t>>();
    for (const auto& m : j.at("models")) c.models.push_back(parse_model(m.get<std::string>()));
    for (const auto& g : j.at("grid")) {
      GridPoint gp;
      gp.id = g.at("id").get<std::string>();
      const auto design = g.value("design", std::string("sim1"));
      const auto scenario = g.at("scenario").get<std::string>();
      const auto cfg = g.value("config", nlohmann::json::object());
      if (design == "sim1") {
        Sim1Point p;
        p.config = cfg.get<dgp::Sim1Config>();
        if (scenario == "SUTVA") p.scenario = dgp::Sim1Scenario::SUTVA;
        else if (scenario == "S1") p.scenario = dgp::Sim1Scenario::S1;
        else if (scenario == "S2") p.scenario = dgp::Sim1Scenario::S2;
        else throw InputError("grid " + gp.id + ": unknown sim1 scenario " + scenario);
        p.config.validate();
        gp.design = p;
      } else if (design == "sim2") {
        Sim2Point p;
        p.config = cfg.get<dgp::Sim2Config>();
        if (scenario == "SUTVA") p.scenario = dgp::Sim2Scenario::SUTVA;
        else if (scenario == "SPILL") p.scenario = dgp::Sim2Scenario::SPILL;
        else throw InputError("grid " + gp.id + ": unknown sim2 scenario " + scenario);
        p.config.validate();
        gp.design = p;
      } else {
        throw InputError("grid " + gp.id + ": unknown design " + design);
      }
      c.grid.push_back(std::move(gp));
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("study config: ") + e.what());
  }
}

inline nlohmann::json to_json(const StudyConfig& c) {
  nlohmann::json j;
  j["K"] = c.K;
  j["master_seed"] = c.master_seed;
  j["threads"] = c.threads;
  j["bootstrap_b"] = c.bootstrap_b;
  j["keep_raw"] = c.keep_raw;
  j["max_failure_rate"] = c.max_failure_rate;
  if (c.gps_covariates) j["gps_covariates"] = *c.gps_covariates;
  if (c.outcome_covariates) j["outcome_covariates"] = *c.outcome_covariates;
  for (auto m : c.models) j["models"].push_back(to_string(m));
  for (const auto& g : c.grid) {
    nlohmann::json gj{{"id", g.id}};
    if (const auto* p1 = std::get_if<Sim1Point>(&g.design)) {
      gj["design"] = "sim1";
      gj["scenario"] = dgp::to_string(p1->scenario);
      gj["config"] = p1->config;
    } else {
      const auto& p2 = std::get<Sim2Point>(g.design);
      gj["design"] = "sim2";
      gj["scenario"] = dgp::to_string(p2.scenario);
      gj["config"] = p2.config;
    }
    j["grid"].push_back(gj);
  }
  return j;
}

// Wall time and the thread count are left out so that reports are
// reproducible byte for byte.
inline nlohmann::json to_json(const StudyReport& r) {
  nlohmann::json j;
  j["config"] = to_json(r.config);
  j["config"].erase("threads");
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"scenario", row.scenario},
                         {"model", to_string(row.model)},
                         {"type", row.type},
                         {"bias", row.bias},
                         {"mse", row.mse},
                         {"coverage", row.coverage},
                         {"k", row.k_effective},
                         {"mc_se", row.mc_se}});
  if (!r.raw.empty())
    for (const auto& x : r.raw)
      j["raw"].push_back({{"scenario", x.scenario},
                          {"iteration", x.iteration},
                          {"model", to_string(x.model)},
                          {"type", x.type},
                          {"point", x.point},
                          {"se", x.se}});
  return j;
}

}  // namespace tridiff::mc

namespace tridiff {

inline nlohmann::json to_json(const Estimate& e) {
  return {{"estimand", to_string(e.estimand)}, {"point", e.point},       {"se", e.se},
          {"ci_low", e.ci_low},                {"ci_high", e.ci_high},   {"n_obs", e.n_obs},
          {"n_units", e.n_units}};
}

inline nlohmann::json to_json(const PartitionSummary& p) {
  nlohmann::json j;
  const char* kinds[] = {"target", "interference", "control"};
  for (int s = 1; s >= 0; --s) {
    nlohmann::json st;
    for (int k = 0; k < 3; ++k) st[kinds[k]] = p.units[s][k];
    st["interference_share"] = std::isnan(p.interference_share[s]) ? nlohmann::json() : nlohmann::json(p.interference_share[s]);
    j["stratum_" + std::to_string(s)] = st;
  }
  j["td_blocked"] = p.td_blocked;
  j["dtd_blocked"] = p.dtd_blocked;
  return j;
}

inline nlohmann::json to_json(const LeadsResult& r) {
  nlohmann::json j;
  j["base_period"] = r.base_period;
  j["leads"] = nlohmann::json::array();
  for (const auto& l : r.leads)
    j["leads"].push_back({{"family", l.family}, {"period", l.period}, {"coef", l.coef}, {"se", l.se}, {"p", l.p}});
  j["joint"] = {{"family", r.joint_family},
                {"statistic", r.joint.statistic},
                {"df", r.joint.df},
                {"p", r.joint.p_value}};
  return j;
}

}  // namespace tridiff
