#pragma once

// Command-line front end: estimate, simulate, pretrend.
// Exit codes: 0 ok, 2 input/validation, 3 estimation, 4 study quality.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "drdtd.hpp"
#include "io_json.hpp"
#include "mcharness.hpp"
#include "paneldata.hpp"
#include "pretrend.hpp"
#include "tdiff.hpp"

namespace tridiff::cli {

enum ExitCode : int { kOk = 0, kInput = 2, kEstimation = 3, kStudyQuality = 4 };

struct CliConfig {
  std::string data;
  std::string model;
  std::string unit = "unit", time = "time", outcome = "outcome", s = "s", g = "g";
  std::string i, covariates, cluster;
  std::optional<int> post_from, pre_through, base;
  std::string design = "tt", subset = "all";
  std::string config;
  std::string out;
  std::string raw;
  std::string format = "csv";
  std::uint64_t seed = 1;
  std::optional<unsigned> threads;
  int bootstrap_b = 400;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!csv::trim(item).empty()) out.emplace_back(csv::trim(item));
  return out;
}

inline ColumnMapping mapping(const CliConfig& c) {
  ColumnMapping m;
  m.unit = c.unit;
  m.time = c.time;
  m.outcome = c.outcome;
  m.s = c.s;
  m.g = c.g;
  if (!c.i.empty()) m.i = c.i;
  if (!c.cluster.empty()) m.cluster = c.cluster;
  m.covariates = split_list(c.covariates);
  m.post_from = c.post_from;
  return m;
}

inline unsigned threads(const CliConfig& c) {
  if (c.threads) return *c.threads;
  if (const char* env = std::getenv("TRIDIFF_THREADS")) {
    if (auto v = csv::parse_int(env); v && *v >= 0) return static_cast<unsigned>(*v);
    throw InputError("TRIDIFF_THREADS must be a non-negative integer");
  }
  return 0;
}

// Pre window: times < post_from (or <= pre_through); post: times >= post_from.
inline PanelDataset collapse(const PanelDataset& d, const CliConfig& c) {
  if (d.time_values().size() == 2) return d;
  if (!c.post_from) throw InputError("--post-from is required to collapse multi-period data to two periods");
  std::set<int> pre, post;
  for (int t : d.time_values()) {
    if (t >= *c.post_from) post.insert(t);
    else if (!c.pre_through || t <= *c.pre_through) pre.insert(t);
  }
  return to_two_period(d, pre, post);
}

inline int post_period(const PanelDataset& d, const CliConfig& c) {
  if (c.post_from) return *c.post_from;
  if (d.time_values().size() == 2) return d.time_values()[1];
  throw InputError("--post-from is required for three-way fixed-effects models");
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InputError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

inline void write_estimates_csv(std::ostream& out, const std::vector<Estimate>& est) {
  out << "estimand,point,se,ci_low,ci_high,n_obs,n_units\n";
  for (const auto& e : est)
    out << to_string(e.estimand) << ',' << csv::format_real(e.point) << ',' << csv::format_real(e.se) << ','
        << csv::format_real(e.ci_low) << ',' << csv::format_real(e.ci_high) << ',' << e.n_obs << ',' << e.n_units
        << '\n';
}

// stratum,target,interference,control,interference_share
inline void write_partition_csv(std::ostream& out, const PartitionSummary& p) {
  out << "stratum,target,interference,control,interference_share\n";
  for (int s = 1; s >= 0; --s)
    out << s << ',' << p.units[s][0] << ',' << p.units[s][1] << ',' << p.units[s][2] << ','
        << (std::isnan(p.interference_share[s]) ? std::string() : csv::format_real(p.interference_share[s])) << '\n';
}

}  // namespace detail

inline int cmd_estimate(const CliConfig& c) {
  static const std::set<std::string> kModels = {"td", "dtd", "td3fe", "dtd3fe", "dr-td", "dr-dtd"};
  if (!kModels.count(c.model)) throw InputError("unknown --model " + c.model);
  const bool needs_i = c.model == "dtd" || c.model == "dtd3fe" || c.model == "dr-dtd";
  const bool needs_x = c.model == "dr-td" || c.model == "dr-dtd";
  if (needs_i && c.i.empty()) throw InputError("interference column required for model " + c.model + " (--i)");
  if (needs_x && c.covariates.empty()) throw InputError("covariate columns required for model " + c.model + " (--covariates)");

  const auto data = load_panel_csv(c.data, detail::mapping(c));
  const auto partition = validate_partition(data);
  std::vector<Estimate> est;
  if (c.model == "td") {
    const auto r = td_two_period(detail::collapse(data, c));
    est = {r.delta, r.psi};
  } else if (c.model == "dtd") {
    const auto r = dtd_two_period(detail::collapse(data, c));
    est = {r.delta, r.psi};
  } else if (c.model == "td3fe" || c.model == "dtd3fe") {
    ThreeWayOptions opt;
    opt.base_year = c.base;
    const auto r = c.model == "td3fe" ? td_threeway_fe(data, detail::post_period(data, c), opt)
                                      : dtd_threeway_fe(data, detail::post_period(data, c), opt);
    est = {r.delta};
    if (r.psi) est.push_back(*r.psi);
  } else {
    DrOptions opt;
    opt.bootstrap_b = c.bootstrap_b;
    opt.seed = c.seed;
    opt.threads = detail::threads(c);
    const auto d2 = detail::collapse(data, c);
    if (c.model == "dr-td") {
      est = {dr_td(d2, opt)};
    } else {
      est = {dr_att(d2, opt), dr_asu(d2, opt)};
    }
  }

  detail::Output out(c.out);
  if (c.format == "json") {
    nlohmann::json j;
    j["model"] = c.model;
    for (const auto& e : est) j["estimates"].push_back(to_json(e));
    j["partition"] = to_json(partition);
    out.stream() << j.dump(2) << '\n';
  } else {
    detail::write_estimates_csv(out.stream(), est);
    if (c.out.empty()) {
      std::cout << '\n';
      detail::write_partition_csv(std::cout, partition);
    } else {
      std::ofstream part(c.out + ".partition.csv");
      detail::write_partition_csv(part, partition);
    }
  }
  return kOk;
}

inline int cmd_simulate(const CliConfig& c) {
  std::ifstream in(c.config);
  if (!in) throw InputError("cannot open config " + c.config);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  auto cfg = mc::study_config_from_json(j);
  if (c.threads || std::getenv("TRIDIFF_THREADS")) cfg.threads = detail::threads(c);
  if (!c.raw.empty()) cfg.keep_raw = true;
  const auto report = mc::run_study(cfg);
  std::cerr << "simulate: " << report.rows.size() << " rows in " << report.wall_seconds << " s\n";

  detail::Output out(c.out);
  if (c.format == "json")
    out.stream() << mc::to_json(report).dump(2) << '\n';
  else
    mc::write_report_csv(out.stream(), report);
  if (!c.raw.empty()) {
    std::ofstream raw(c.raw);
    if (!raw) throw InputError("cannot write " + c.raw);
    mc::write_raw_csv(raw, report);
  }
  return kOk;
}

inline int cmd_pretrend(const CliConfig& c) {
  if (c.design != "did" && c.design != "tt") throw InputError("--design must be did or tt");
  if (c.subset != "all" && c.subset != "i0" && c.subset != "g0") throw InputError("--subset must be all, i0 or g0");
  if (c.subset == "g0" && c.i.empty()) throw InputError("interference column required for --subset g0 (--i)");
  auto data = load_panel_csv(c.data, detail::mapping(c));
  if (c.subset == "i0") data = subset(data, select::i0);
  if (c.subset == "g0") data = subset(data, select::g0);
  if (c.post_from || c.pre_through) {
    const auto keep = [&](int t) {
      return (!c.post_from || t < *c.post_from) && (!c.pre_through || t <= *c.pre_through);
    };
    std::vector<Observation> rows;
    for (const auto& r : data.rows())
      if (keep(r.time)) rows.push_back(r);
    data = PanelDataset(std::move(rows), data.covariate_names(), data.metadata());
  }
  if (data.time_values().size() < 2) throw InputError("pre-trend tests need at least two pre-policy periods");
  const int base = c.base.value_or(data.time_values().front());
  const auto result = c.design == "did" ? did_leads(data, base)
                                        : tt_leads(data, base, c.subset == "g0" ? GroupVar::I : GroupVar::G);
  detail::Output out(c.out);
  if (c.format == "json")
    out.stream() << to_json(result).dump(2) << '\n';
  else
    write_leads_csv(out.stream(), result);
  return kOk;
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"tridiff: triple-difference estimators under spillovers"};
  app.require_subcommand(1, 1);
  CliConfig c;

  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "Output file (default: stdout)");
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores (env TRIDIFF_THREADS)");
  };
  auto add_mapping = [&](CLI::App* sub) {
    sub->add_option("--data", c.data, "Long-format panel CSV")->required();
    sub->add_option("--unit", c.unit, "Unit id column");
    sub->add_option("--time", c.time, "Integer time column");
    sub->add_option("--outcome", c.outcome, "Outcome column");
    sub->add_option("--s", c.s, "Stratum indicator column");
    sub->add_option("--g", c.g, "Target-group indicator column");
    sub->add_option("--i", c.i, "Interference indicator column");
    sub->add_option("--covariates", c.covariates, "Comma-separated covariate columns");
    sub->add_option("--cluster", c.cluster, "Cluster id column (default: unit)");
    sub->add_option("--post-from", c.post_from, "First post-policy period");
    sub->add_option("--pre-through", c.pre_through, "Last period of the pre window");
    sub->add_option("--base", c.base, "Base (omitted) period");
  };

  auto* est = app.add_subcommand("estimate", "Estimate TD / DTD models on a panel CSV");
  add_mapping(est);
  add_format(est);
  est->add_option("--model", c.model, "td | dtd | td3fe | dtd3fe | dr-td | dr-dtd")->required();
  est->add_option("--seed", c.seed, "Bootstrap seed");
  est->add_option("--bootstrap-b", c.bootstrap_b, "Bootstrap replicates for dr models");

  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study from a JSON config");
  sim->add_option("--config", c.config, "Study config (JSON)")->required();
  sim->add_option("--raw", c.raw, "Also write per-iteration estimates to this CSV");
  add_format(sim);

  auto* pre = app.add_subcommand("pretrend", "Pre-policy lead tests");
  add_mapping(pre);
  add_format(pre);
  pre->add_option("--design", c.design, "did | tt");
  pre->add_option("--subset", c.subset, "all | i0 | g0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*est) return cmd_estimate(c);
    if (*sim) return cmd_simulate(c);
    return cmd_pretrend(c);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const StudyQualityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStudyQuality;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEstimation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEstimation;
  }
}

}  // namespace tridiff::cli
