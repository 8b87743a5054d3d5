#pragma once

// Pre-policy lead regressions: unit FE + year FE + lead interactions,
// estimated on pre-policy data, with a joint Wald test on the top-order
// interaction family.

#include <ostream>
#include <string>
#include <vector>

#include "paneldata.hpp"
#include "regress.hpp"

namespace tridiff {

struct LeadRow {
  std::string family;  // e.g. "S_x_lead", "G_x_lead", "S_x_G_x_lead"
  int period = 0;
  double coef = 0.0;
  double se = 0.0;
  double p = 1.0;
};

struct LeadsResult {
  int base_period = 0;
  std::vector<LeadRow> leads;
  std::string joint_family;
  TestResult joint;
  FitResult fit;
};

enum class GroupVar { G, I };

namespace detail {

inline LeadsResult fit_leads(const PanelDataset& data, int base, const std::vector<std::string>& families,
                             const std::vector<int>& unit_powers_s, const std::vector<int>& unit_powers_grp,
                             GroupVar gv) {
  const auto& tv = data.time_values();
  if (tv.size() < 2) throw InputError("lead regression requires at least two pre-policy periods");
  if (std::find(tv.begin(), tv.end(), base) == tv.end())
    throw InputError("base period " + std::to_string(base) + " is not a pre-policy period of the data");
  std::vector<int> leads;
  for (int t : tv)
    if (t != base) leads.push_back(t);
  const auto nl = static_cast<Eigen::Index>(leads.size());

  std::vector<std::string> names;
  for (int t : leads) names.push_back("year_" + std::to_string(t));
  for (const auto& f : families)
    for (int t : leads) names.push_back(f + "_" + std::to_string(t));

  const auto n = static_cast<Eigen::Index>(data.size());
  DesignMatrix x(n, names);
  VectorXd y(n);
  const auto& rows = data.rows();
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& o = rows[static_cast<std::size_t>(r)];
    y(r) = o.outcome;
    auto it = std::find(leads.begin(), leads.end(), o.time);
    if (it == leads.end()) continue;
    const auto j = static_cast<Eigen::Index>(it - leads.begin());
    x.x(r, j) = 1.0;
    const int grp = gv == GroupVar::G ? o.g : o.i;
    for (std::size_t f = 0; f < families.size(); ++f) {
      const int v = (unit_powers_s[f] ? o.s : 1) * (unit_powers_grp[f] ? grp : 1);
      x.x(r, static_cast<Eigen::Index>(f + 1) * nl + j) = v;
    }
  }
  const auto& units = data.unit_index();
  LeadsResult out;
  out.base_period = base;
  out.fit = ols_fit(within_demean(x, units), within_demean(MatrixXd(y), units).col(0), data.cluster_index());
  for (const auto& f : families)
    for (int t : leads) {
      const auto name = f + "_" + std::to_string(t);
      LeadRow row{f, t, out.fit.coef(name), out.fit.se(name), 1.0};
      row.p = row.se > 0 ? normal_two_sided_p(row.coef / row.se) : (row.coef == 0.0 ? 1.0 : 0.0);
      out.leads.push_back(row);
    }
  out.joint_family = families.back();
  std::vector<std::string> top;
  for (int t : leads) top.push_back(out.joint_family + "_" + std::to_string(t));
  out.joint = joint_wald(out.fit, top);
  return out;
}

}  // namespace detail

// Y = unit FE + year FE + sum_j d_j (S x L_j); joint test on the d_j.
inline LeadsResult did_leads(const PanelDataset& pre_policy, int base) {
  bool s0 = false, s1 = false;
  for (std::size_t u = 0; u < pre_policy.n_units(); ++u) (pre_policy.unit_cell(u).s ? s1 : s0) = true;
  if (!s0 || !s1) throw EmptyCellError("did_leads: both strata must be present");
  return detail::fit_leads(pre_policy, base, {"S_x_lead"}, {1}, {0}, GroupVar::G);
}

// Y = unit FE + year FE + S x L_j + group x L_j + S x group x L_j, group = G
// (pass the i = 0 subsample for the target/pure-control comparison) or I
// (pass the g = 0 subsample). Joint test on the triple family.
inline LeadsResult tt_leads(const PanelDataset& pre_policy, int base, GroupVar group) {
  const std::string gname = group == GroupVar::G ? "G" : "I";
  bool cells[2][2] = {{false, false}, {false, false}};
  for (std::size_t u = 0; u < pre_policy.n_units(); ++u) {
    const auto c = pre_policy.unit_cell(u);
    cells[c.s][group == GroupVar::G ? c.g : c.i] = true;
  }
  for (int s = 0; s < 2; ++s)
    for (int k = 0; k < 2; ++k)
      if (!cells[s][k])
        throw EmptyCellError("tt_leads: empty cell S=" + std::to_string(s) + "," + gname + "=" + std::to_string(k));
  return detail::fit_leads(pre_policy, base, {"S_x_lead", gname + "_x_lead", "S_x_" + gname + "_x_lead"}, {1, 0, 1},
                           {0, 1, 1}, group);
}

// family,period,coef,se,p followed by one joint row:
// joint:<family>,,<Wald statistic>,,<p>
inline void write_leads_csv(std::ostream& out, const LeadsResult& r) {
  out << "family,period,coef,se,p\n";
  for (const auto& l : r.leads)
    out << l.family << ',' << l.period << ',' << csv::format_real(l.coef) << ',' << csv::format_real(l.se) << ','
        << csv::format_real(l.p) << '\n';
  out << "joint:" << r.joint_family << ",," << csv::format_real(r.joint.statistic) << ",,"
      << csv::format_real(r.joint.p_value) << '\n';
}

}  // namespace tridiff
