#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace tridiff;
using testutil::PlantedConfig;
using testutil::planted_panel;

namespace {

const LeadRow& lead(const LeadsResult& r, const std::string& family, int period) {
  for (const auto& l : r.leads)
    if (l.family == family && l.period == period) return l;
  throw std::runtime_error("no lead " + family + " " + std::to_string(period));
}

}  // namespace

TEST(DidLeads, NoiseFreeParallelTrends) {
  PlantedConfig c;
  c.sigma = 0.0;
  const auto r = did_leads(planted_panel(c), 2010);
  ASSERT_EQ(r.leads.size(), 4U);
  for (const auto& l : r.leads) EXPECT_NEAR(l.coef, 0.0, 1e-10);
  EXPECT_NEAR(r.joint.p_value, 1.0, 1e-12);
  EXPECT_EQ(r.joint_family, "S_x_lead");
  EXPECT_EQ(r.base_period, 2010);
}

TEST(DidLeads, StratumTrendIsDetected) {
  PlantedConfig c;
  c.sigma = 0.0;
  c.slope_s = 0.1;
  const auto exact = did_leads(planted_panel(c), 2010);
  for (const auto& l : exact.leads) EXPECT_NEAR(l.coef, 0.1 * (l.period - 2010), 1e-10);

  c.sigma = 0.2;
  c.seed = 4;
  const auto noisy = did_leads(planted_panel(c), 2010);
  for (const auto& l : noisy.leads) EXPECT_NEAR(l.coef, 0.1 * (l.period - 2010), 4.0 * l.se);
  EXPECT_LT(noisy.joint.p_value, 0.01);
}

TEST(TtLeads, NoiseFreeTripleLeadsVanish) {
  PlantedConfig c;
  c.sigma = 0.0;
  c.slope_s = 0.3;  // absorbed by the S x lead family
  const auto r = tt_leads(planted_panel(c), 2010, GroupVar::G);
  EXPECT_EQ(r.leads.size(), 12U);
  EXPECT_EQ(r.joint_family, "S_x_G_x_lead");
  for (int t = 2011; t <= 2014; ++t) {
    EXPECT_NEAR(lead(r, "S_x_G_x_lead", t).coef, 0.0, 1e-10);
    EXPECT_NEAR(lead(r, "S_x_lead", t).coef, 0.3 * (t - 2010), 1e-10);
  }
  EXPECT_NEAR(r.joint.p_value, 1.0, 1e-12);
}

TEST(TtLeads, PlantedTripleShiftRecovered) {
  PlantedConfig c;
  c.sigma = 0.0;
  c.shift_time = 2014;
  c.shift = 0.7;
  const auto r = tt_leads(planted_panel(c), 2010, GroupVar::G);
  EXPECT_NEAR(lead(r, "S_x_G_x_lead", 2014).coef, 0.7, 1e-8);
  for (int t = 2011; t <= 2013; ++t) EXPECT_NEAR(lead(r, "S_x_G_x_lead", t).coef, 0.0, 1e-8);
}

TEST(TtLeads, PlantedViolationRejected) {
  PlantedConfig c;
  c.seed = 21;
  c.slope_sg = 0.5;
  const auto r = tt_leads(planted_panel(c), 2010, GroupVar::G);
  EXPECT_LT(r.joint.p_value, 0.01);
}

// Two pre periods, one triple lead. Shifting the S x G units in 2014 by
// c = 1.918 se - b moves the estimate to 1.918 se without touching the
// residuals, so the test lands just above 5%.
TEST(TtLeads, BorderlineFixture) {
  PlantedConfig c;
  c.t0 = 2013;
  c.periods = 2;
  c.seed = 8;
  const auto base = planted_panel(c);
  const auto first = tt_leads(base, 2013, GroupVar::G);
  const auto& l = lead(first, "S_x_G_x_lead", 2014);
  const double shift = 1.918 * l.se - l.coef;
  const auto moved = testutil::map_outcomes(
      base, [&](const Observation& o) { return o.outcome + (o.time == 2014 ? shift * o.s * o.g : 0.0); });
  const auto r = tt_leads(moved, 2013, GroupVar::G);
  EXPECT_NEAR(lead(r, "S_x_G_x_lead", 2014).se, l.se, 1e-10);
  EXPECT_LT(r.joint.p_value, 0.07);
  EXPECT_GT(r.joint.p_value, 0.05);
}

TEST(TtLeads, BasePeriodDoesNotChangeJointTest) {
  PlantedConfig c;
  c.seed = 33;
  c.slope_sg = 0.05;
  const auto d = planted_panel(c);
  const auto a = tt_leads(d, 2010, GroupVar::G);
  const auto b = tt_leads(d, 2012, GroupVar::G);
  EXPECT_NEAR(a.joint.statistic, b.joint.statistic, 1e-8);
  EXPECT_NEAR(a.joint.p_value, b.joint.p_value, 1e-8);
  // Relative leads differ by the base-period coefficient.
  EXPECT_NEAR(lead(b, "S_x_G_x_lead", 2014).coef,
              lead(a, "S_x_G_x_lead", 2014).coef - lead(a, "S_x_G_x_lead", 2012).coef, 1e-8);
}

TEST(TtLeads, InterferenceGroupOnSimOne) {
  dgp::Sim1Config c;
  c.n_units = 400;
  c.interference_share = 0.5;
  c.seed = 2;
  const auto d = dgp::gen_sim1(c, dgp::Sim1Scenario::SUTVA).data;
  std::vector<Observation> pre;
  for (const auto& o : d.rows())
    if (o.time < c.treat_from && o.g == 0) pre.push_back(o);
  const auto r = tt_leads(PanelDataset(pre, {}), 1, GroupVar::I);
  EXPECT_EQ(r.joint_family, "S_x_I_x_lead");
  EXPECT_EQ(r.leads.size(), 12U);
  EXPECT_GT(r.joint.p_value, 0.0);
  EXPECT_LE(r.joint.p_value, 1.0);
}

TEST(Leads, Errors) {
  PlantedConfig c;
  c.periods = 1;
  EXPECT_THROW(did_leads(planted_panel(c), 2010), InputError);
  c.periods = 4;
  EXPECT_THROW(did_leads(planted_panel(c), 2020), InputError);
  const auto one_stratum = subset(planted_panel(c), [](const Cell& x) { return x.s == 1; });
  EXPECT_THROW(did_leads(one_stratum, 2010), EmptyCellError);
  const auto no_control = subset(planted_panel(c), [](const Cell& x) { return x.g == 1 || x.s == 1; });
  EXPECT_THROW(tt_leads(no_control, 2010, GroupVar::G), EmptyCellError);
  // No unit has i = 1 in the planted panel.
  EXPECT_THROW(tt_leads(planted_panel(c), 2010, GroupVar::I), EmptyCellError);
}

TEST(Leads, CsvShape) {
  PlantedConfig c;
  const auto r = tt_leads(planted_panel(c), 2010, GroupVar::G);
  std::ostringstream out;
  write_leads_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 14U);
  EXPECT_EQ(lines.front(), "family,period,coef,se,p");
  EXPECT_EQ(lines[1].substr(0, 14), "S_x_lead,2011,");
  EXPECT_EQ(lines.back().substr(0, 19), "joint:S_x_G_x_lead,");
  const auto j = to_json(r);
  EXPECT_EQ(j["leads"].size(), 12U);
  EXPECT_EQ(j["joint"]["df"], 4);
}
