#pragma once

// Small panel builders shared by the unit tests and the acceptance binary.

#include <array>
#include <random>
#include <string>
#include <vector>

#include "tridiff/tridiff.hpp"

namespace testutil {

using tridiff::Cell;
using tridiff::Observation;
using tridiff::PanelDataset;

// One unit per listed cell, observed at t = 0 (outcome `pre`) and t = 1.
struct CellOutcome {
  Cell cell;
  double pre;
  double post;
};

inline PanelDataset two_period(const std::vector<CellOutcome>& units, std::vector<std::vector<double>> cov = {},
                               std::vector<std::string> cov_names = {}) {
  std::vector<Observation> rows;
  for (std::size_t k = 0; k < units.size(); ++k) {
    const auto& u = units[k];
    const std::string id = "u" + std::to_string(k);
    const auto x = cov.empty() ? std::vector<double>{} : cov[k];
    rows.push_back({id, 0, u.pre, u.cell.s, u.cell.g, u.cell.i, x, id});
    rows.push_back({id, 1, u.post, u.cell.s, u.cell.g, u.cell.i, x, id});
  }
  return PanelDataset(std::move(rows), std::move(cov_names));
}

// The 12-row fixture: pre 0, post T1=10, I1=5, C1=2, T0=3, I0=2, C0=1.
inline PanelDataset twelve_row() {
  return two_period({{{1, 1, 0}, 0, 10},
                     {{1, 0, 1}, 0, 5},
                     {{1, 0, 0}, 0, 2},
                     {{0, 1, 0}, 0, 3},
                     {{0, 0, 1}, 0, 2},
                     {{0, 0, 0}, 0, 1}});
}

// The 8-row TD fixture: pre 0, post (1,1)=10, (1,0)=2, (0,1)=3, (0,0)=1.
inline PanelDataset eight_row() {
  return two_period({{{1, 1, 0}, 0, 10}, {{1, 0, 0}, 0, 2}, {{0, 1, 0}, 0, 3}, {{0, 0, 0}, 0, 1}});
}

// Balanced two-period panel with `counts[k]` units in tridiff::kAllCells[k]
// and normal outcomes.
inline PanelDataset random_two_period(std::mt19937_64& gen, const std::array<int, 6>& counts, int p = 0) {
  std::normal_distribution<double> z;
  std::vector<Observation> rows;
  std::vector<std::string> names;
  for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  int id = 0;
  for (std::size_t c = 0; c < 6; ++c) {
    const Cell cell = tridiff::kAllCells[c];
    for (int k = 0; k < counts[c]; ++k) {
      const std::string u = "r" + std::to_string(id++);
      std::vector<double> x;
      for (int j = 0; j < p; ++j) x.push_back(z(gen));
      const double a = 3.0 * z(gen);
      rows.push_back({u, 0, a + z(gen), cell.s, cell.g, cell.i, x, u});
      rows.push_back({u, 1, a + z(gen) + 0.7 * cell.s + 1.3 * cell.g, cell.s, cell.g, cell.i, x, u});
    }
  }
  return PanelDataset(std::move(rows), std::move(names));
}

inline std::array<int, 6> random_counts(std::mt19937_64& gen, int lo = 1, int hi = 6) {
  std::uniform_int_distribution<int> d(lo, hi);
  std::array<int, 6> c{};
  for (auto& v : c) v = d(gen);
  return c;
}

// Multi-period panel: unit effect + common year effect + noise, plus planted
// linear trends slope_s * S * (t - t0) and slope_sg * S * G * (t - t0), and
// an optional single shift on S x G units at `shift_time`.
struct PlantedConfig {
  int units_per_cell = 100;  // per (S, G) cell, i = 0
  int t0 = 2010;
  int periods = 5;
  double slope_s = 0.0;
  double slope_sg = 0.0;
  double sigma = 1.0;
  int shift_time = 0;
  double shift = 0.0;
  std::uint64_t seed = 1;
};

inline PanelDataset planted_panel(const PlantedConfig& c) {
  std::mt19937_64 gen(c.seed);
  std::normal_distribution<double> z;
  std::vector<double> year(static_cast<std::size_t>(c.periods));
  for (auto& y : year) y = z(gen);
  std::vector<Observation> rows;
  int id = 0;
  for (int s = 0; s < 2; ++s)
    for (int g = 0; g < 2; ++g)
      for (int k = 0; k < c.units_per_cell; ++k) {
        const std::string u = "p" + std::to_string(id++);
        const double a = z(gen);
        for (int t = 0; t < c.periods; ++t) {
          const int time = c.t0 + t;
          double y = a + year[static_cast<std::size_t>(t)] + c.slope_s * s * t + c.slope_sg * s * g * t;
          if (time == c.shift_time) y += c.shift * s * g;
          y += c.sigma * z(gen);
          rows.push_back({u, time, y, s, g, 0, {}, u});
        }
      }
  return PanelDataset(std::move(rows), {});
}

inline PanelDataset with_outcomes(const PanelDataset& d, const std::vector<double>& y) {
  auto rows = d.rows();
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r].outcome = y[r];
  return PanelDataset(std::move(rows), d.covariate_names(), d.metadata());
}

template <typename Fn>
PanelDataset map_outcomes(const PanelDataset& d, Fn&& fn) {
  auto rows = d.rows();
  for (auto& r : rows) r.outcome = fn(r);
  return PanelDataset(std::move(rows), d.covariate_names(), d.metadata());
}

}  // namespace testutil
