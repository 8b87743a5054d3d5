#pragma once

// Long-format panel data: one row per (unit, time) with the stratum (S),
// target group (G) and interference (I) indicators.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "error.hpp"

namespace tridiff {

// Partition cell of a unit. g and i are never both 1.
struct Cell {
  int s = 0;
  int g = 0;
  int i = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline std::string to_string(const Cell& c) {
  return "(S=" + std::to_string(c.s) + ",G=" + std::to_string(c.g) + ",I=" + std::to_string(c.i) + ")";
}

struct Observation {
  std::string unit_id;
  int time = 0;
  double outcome = 0.0;
  int s = 0;
  int g = 0;
  int i = 0;
  std::vector<double> covariates;
  std::string cluster;  // empty means "same as unit_id"

  Cell cell() const { return {s, g, i}; }
};

struct ColumnMapping {
  std::string unit = "unit";
  std::string time = "time";
  std::string outcome = "outcome";
  std::string s = "s";
  std::string g = "g";
  std::optional<std::string> i;
  std::vector<std::string> covariates;
  std::optional<std::string> cluster;
  std::optional<int> post_from;
};

struct DatasetMetadata {
  std::string source;
  std::size_t dropped_units = 0;  // units removed by to_two_period
};

// Validated, immutable panel. Construction checks every invariant and throws
// InputError naming the offending unit or value.
class PanelDataset {
 public:
  PanelDataset(std::vector<Observation> rows, std::vector<std::string> covariate_names,
               DatasetMetadata metadata = {})
      : rows_(std::move(rows)), covariate_names_(std::move(covariate_names)), metadata_(std::move(metadata)) {
    validate_and_index();
  }

  const std::vector<Observation>& rows() const { return rows_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const std::vector<int>& time_values() const { return time_values_; }
  const DatasetMetadata& metadata() const { return metadata_; }
  std::size_t size() const { return rows_.size(); }
  bool has_covariates() const { return !covariate_names_.empty(); }

  std::size_t n_units() const { return unit_ids_.size(); }
  std::size_t n_clusters() const { return n_clusters_; }
  // Dense unit index of a row, in order of first appearance.
  std::size_t unit_of(std::size_t row) const { return unit_index_[row]; }
  std::size_t cluster_of(std::size_t row) const { return cluster_index_[row]; }
  const std::vector<std::size_t>& unit_index() const { return unit_index_; }
  const std::vector<std::size_t>& cluster_index() const { return cluster_index_; }
  const std::string& unit_id(std::size_t unit) const { return unit_ids_[unit]; }
  Cell unit_cell(std::size_t unit) const { return unit_cells_[unit]; }

  friend bool operator==(const PanelDataset& a, const PanelDataset& b) {
    if (a.covariate_names_ != b.covariate_names_ || a.rows_.size() != b.rows_.size()) return false;
    for (std::size_t r = 0; r < a.rows_.size(); ++r) {
      const auto& x = a.rows_[r];
      const auto& y = b.rows_[r];
      if (x.unit_id != y.unit_id || x.time != y.time || x.outcome != y.outcome || x.cell() != y.cell() ||
          x.covariates != y.covariates || x.cluster != y.cluster)
        return false;
    }
    return true;
  }

 private:
  void validate_and_index() {
    const std::size_t p = covariate_names_.size();
    std::unordered_map<std::string, std::size_t> unit_lookup;
    std::unordered_map<std::string, std::size_t> cluster_lookup;
    std::set<std::pair<std::size_t, int>> seen;
    std::set<int> times;
    unit_index_.reserve(rows_.size());
    cluster_index_.reserve(rows_.size());
    for (auto& r : rows_) {
      if (r.unit_id.empty()) throw InputError("empty unit id");
      if (!std::isfinite(r.outcome)) throw InputError("non-finite outcome for unit " + r.unit_id);
      for (int v : {r.s, r.g, r.i})
        if (v != 0 && v != 1) throw InputError("non-binary indicator for unit " + r.unit_id);
      if (r.g == 1 && r.i == 1)
        throw InputError("unit " + r.unit_id + " is in both the target and interference groups");
      if (r.covariates.size() != p)
        throw InputError("unit " + r.unit_id + " has " + std::to_string(r.covariates.size()) +
                         " covariates, expected " + std::to_string(p));
      if (r.cluster.empty()) r.cluster = r.unit_id;

      auto [it, inserted] = unit_lookup.try_emplace(r.unit_id, unit_ids_.size());
      if (inserted) {
        unit_ids_.push_back(r.unit_id);
        unit_cells_.push_back(r.cell());
      } else if (unit_cells_[it->second] != r.cell()) {
        throw InputError("group membership varies over time for unit " + r.unit_id);
      }
      if (!seen.emplace(it->second, r.time).second)
        throw InputError("duplicate (unit, time) = (" + r.unit_id + ", " + std::to_string(r.time) + ")");
      unit_index_.push_back(it->second);
      auto [cit, cnew] = cluster_lookup.try_emplace(r.cluster, cluster_lookup.size());
      cluster_index_.push_back(cit->second);
      times.insert(r.time);
    }
    n_clusters_ = cluster_lookup.size();
    time_values_.assign(times.begin(), times.end());
  }

  std::vector<Observation> rows_;
  std::vector<std::string> covariate_names_;
  DatasetMetadata metadata_;
  std::vector<int> time_values_;
  std::vector<std::string> unit_ids_;
  std::vector<Cell> unit_cells_;
  std::vector<std::size_t> unit_index_;
  std::vector<std::size_t> cluster_index_;
  std::size_t n_clusters_ = 0;
};

// ---------------------------------------------------------------------------
// CSV ingestion

namespace detail {

inline int parse_binary(const std::string& raw, const std::string& column, const std::string& unit) {
  const auto v = csv::trim(raw);
  if (v == "0") return 0;
  if (v == "1") return 1;
  throw InputError("non-binary value '" + std::string(v) + "' in column " + column + " for unit " + unit);
}

}  // namespace detail

inline PanelDataset read_panel_csv(std::istream& in, const ColumnMapping& m, std::string source = "<stream>") {
  const auto table = csv::read_table(in);

  std::vector<std::string> wanted = {m.unit, m.time, m.outcome, m.s, m.g};
  if (m.i) wanted.push_back(*m.i);
  if (m.cluster) wanted.push_back(*m.cluster);
  wanted.insert(wanted.end(), m.covariates.begin(), m.covariates.end());
  {
    auto sorted = wanted;
    std::sort(sorted.begin(), sorted.end());
    if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end())
      throw InputError("column " + *dup + " is mapped more than once");
  }
  auto col = [&](const std::string& name) {
    auto k = table.column(name);
    if (!k) throw InputError("missing column: " + name);
    return *k;
  };
  const std::size_t cu = col(m.unit), ct = col(m.time), cy = col(m.outcome), cs = col(m.s), cg = col(m.g);
  const std::optional<std::size_t> ci = m.i ? std::optional(col(*m.i)) : std::nullopt;
  const std::optional<std::size_t> cc = m.cluster ? std::optional(col(*m.cluster)) : std::nullopt;
  std::vector<std::size_t> cx;
  for (const auto& name : m.covariates) cx.push_back(col(name));

  std::vector<Observation> rows;
  rows.reserve(table.rows.size());
  for (const auto& rec : table.rows) {
    Observation o;
    o.unit_id = std::string(csv::trim(rec[cu]));
    auto t = csv::parse_int(rec[ct]);
    if (!t) throw InputError("non-integer time '" + rec[ct] + "' for unit " + o.unit_id);
    o.time = static_cast<int>(*t);
    auto y = csv::parse_real(rec[cy]);
    if (!y) throw InputError("unparseable outcome '" + rec[cy] + "' for unit " + o.unit_id);
    o.outcome = *y;
    o.s = detail::parse_binary(rec[cs], m.s, o.unit_id);
    o.g = detail::parse_binary(rec[cg], m.g, o.unit_id);
    o.i = ci ? detail::parse_binary(rec[*ci], *m.i, o.unit_id) : 0;
    for (std::size_t k = 0; k < cx.size(); ++k) {
      auto x = csv::parse_real(rec[cx[k]]);
      if (!x) throw InputError("unparseable covariate " + m.covariates[k] + " for unit " + o.unit_id);
      o.covariates.push_back(*x);
    }
    if (cc) o.cluster = std::string(csv::trim(rec[*cc]));
    rows.push_back(std::move(o));
  }
  return PanelDataset(std::move(rows), m.covariates, {std::move(source), 0});
}

inline PanelDataset load_panel_csv(const std::string& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_panel_csv(in, mapping, path);
}

// Columns: unit,time,outcome,s,g,i,cluster,<covariates...>
inline void write_panel_csv(std::ostream& out, const PanelDataset& data) {
  out << "unit,time,outcome,s,g,i,cluster";
  for (const auto& c : data.covariate_names()) out << ',' << csv::quote(c);
  out << '\n';
  for (const auto& r : data.rows()) {
    out << csv::quote(r.unit_id) << ',' << r.time << ',' << csv::format_real(r.outcome) << ',' << r.s << ','
        << r.g << ',' << r.i << ',' << csv::quote(r.cluster);
    for (double x : r.covariates) out << ',' << csv::format_real(x);
    out << '\n';
  }
}

inline ColumnMapping canonical_mapping(const PanelDataset& data) {
  ColumnMapping m;
  m.i = "i";
  m.cluster = "cluster";
  m.covariates = data.covariate_names();
  return m;
}

// ---------------------------------------------------------------------------
// Partition diagnostics

struct PartitionSummary {
  // units[s][k] with k = 0 target, 1 interference, 2 pure control
  std::array<std::array<std::size_t, 3>, 2> units{};
  std::array<double, 2> interference_share{};  // |I_s| / (|I_s| + |C_s|), NaN when undefined
  bool td_blocked = false;   // some S x G cell is empty
  bool dtd_blocked = false;  // some S x (T, I, C) cell is empty
  std::vector<Cell> empty_cells;

  std::size_t count(const Cell& c) const { return units[c.s][c.g ? 0 : (c.i ? 1 : 2)]; }
};

inline constexpr std::array<Cell, 6> kAllCells = {
    Cell{1, 1, 0}, Cell{1, 0, 1}, Cell{1, 0, 0}, Cell{0, 1, 0}, Cell{0, 0, 1}, Cell{0, 0, 0}};

inline PartitionSummary validate_partition(const PanelDataset& data) {
  PartitionSummary out;
  for (std::size_t u = 0; u < data.n_units(); ++u) {
    const Cell c = data.unit_cell(u);
    ++out.units[c.s][c.g ? 0 : (c.i ? 1 : 2)];
  }
  for (int s = 0; s < 2; ++s) {
    const auto ic = out.units[s][1] + out.units[s][2];
    out.interference_share[s] = ic == 0 ? std::nan("") : static_cast<double>(out.units[s][1]) / ic;
    if (out.units[s][0] == 0 || out.units[s][1] + out.units[s][2] == 0) out.td_blocked = true;
  }
  for (const auto& c : kAllCells)
    if (out.count(c) == 0) {
      out.dtd_blocked = true;
      out.empty_cells.push_back(c);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Subsamples

template <typename Pred>
PanelDataset subset(const PanelDataset& data, Pred&& keep) {
  std::vector<Observation> rows;
  for (const auto& r : data.rows())
    if (keep(r.cell())) rows.push_back(r);
  if (rows.empty()) throw EmptyCellError("subsample selection is empty");
  return PanelDataset(std::move(rows), data.covariate_names(), data.metadata());
}

namespace select {
inline bool all(const Cell&) { return true; }
inline bool i0(const Cell& c) { return c.i == 0; }  // T and C cells
inline bool g0(const Cell& c) { return c.g == 0; }  // I and C cells
}  // namespace select

// Collapses a panel to t in {0, 1} using within-unit outcome means over the
// pre and post windows. Units missing either window are dropped and counted in
// metadata().dropped_units.
inline PanelDataset to_two_period(const PanelDataset& data, const std::set<int>& pre, const std::set<int>& post) {
  if (pre.empty() || post.empty()) throw InputError("to_two_period: empty window");
  for (int t : pre)
    if (post.count(t)) throw InputError("to_two_period: windows overlap at time " + std::to_string(t));

  struct Acc {
    double sum[2] = {0.0, 0.0};
    std::size_t n[2] = {0, 0};
    std::size_t first_pre_row = 0;
    int first_pre_time = 0;
    bool has_pre = false;
  };
  std::vector<Acc> acc(data.n_units());
  const auto& rows = data.rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int w = pre.count(rows[r].time) ? 0 : (post.count(rows[r].time) ? 1 : -1);
    if (w < 0) continue;
    auto& a = acc[data.unit_of(r)];
    a.sum[w] += rows[r].outcome;
    ++a.n[w];
    if (w == 0 && (!a.has_pre || rows[r].time < a.first_pre_time)) {
      a.has_pre = true;
      a.first_pre_time = rows[r].time;
      a.first_pre_row = r;
    }
  }
  std::vector<Observation> out;
  std::size_t dropped = 0;
  for (std::size_t u = 0; u < data.n_units(); ++u) {
    const auto& a = acc[u];
    if (a.n[0] == 0 || a.n[1] == 0) {
      ++dropped;
      continue;
    }
    for (int w = 0; w < 2; ++w) {
      Observation o = rows[a.first_pre_row];
      o.time = w;
      o.outcome = a.sum[w] / static_cast<double>(a.n[w]);
      out.push_back(std::move(o));
    }
  }
  if (out.empty()) throw InputError("to_two_period: no unit observed in both windows");
  auto meta = data.metadata();
  meta.dropped_units = dropped;
  return PanelDataset(std::move(out), data.covariate_names(), std::move(meta));
}

// Convenience: periods before post_from form the pre window, the rest post.
inline PanelDataset to_two_period(const PanelDataset& data, int post_from) {
  std::set<int> pre, post;
  for (int t : data.time_values()) (t < post_from ? pre : post).insert(t);
  return to_two_period(data, pre, post);
}

}  // namespace tridiff
