#pragma once

// Grid search over layers x neurons x epochs with summary rows
// min / max / mean - std / mean + std.

#include "surge/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace surge {

struct SweepGrid {
  std::vector<std::size_t> layers{4, 5};
  std::vector<std::size_t> neurons{128, 256};
  std::vector<std::size_t> epochs{2000, 3000, 4000};
  std::uint64_t seed = 42;

  std::size_t size() const { return layers.size() * neurons.size() * epochs.size(); }

  void validate() const {
    if (layers.empty() || neurons.empty() || epochs.empty()) throw DataError("sweep: every grid axis needs a value");
  }

  /// Configs in layers-major order, all other fields from `base`.
  std::vector<TrainConfig> configs(const TrainConfig& base) const {
    validate();
    std::vector<TrainConfig> out;
    for (auto l : layers) {
      for (auto n : neurons) {
        for (auto e : epochs) {
          TrainConfig c = base;
          c.n_layers = l;
          c.hidden = n;
          c.epochs = e;
          c.seed = seed;
          out.push_back(c);
        }
      }
    }
    return out;
  }
};

struct SweepEntry {
  std::size_t layers = 0;
  std::size_t neurons = 0;
  std::size_t epochs = 0;
  double rmse_ft = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string status = "ok";
};

struct SummaryRow {
  std::string label;  // Min, Max, Mean - Std, Mean + Std
  double statistic = 0.0;
  const SweepEntry* config = nullptr;  // achieving or nearest config
};

struct SweepSummary {
  double min = 0, max = 0, mean = 0, std = 0;
  std::vector<SummaryRow> rows;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::vector<std::string> warnings;

  std::vector<const SweepEntry*> successful() const {
    std::vector<const SweepEntry*> v;
    for (const auto& e : entries) {
      if (e.ok) v.push_back(&e);
    }
    return v;
  }

  /// Lowest RMSE among successful configs; first in grid order on ties.
  const SweepEntry* winner() const {
    const SweepEntry* best = nullptr;
    for (const auto* e : successful()) {
      if (!best || e->rmse_ft < best->rmse_ft) best = e;
    }
    return best;
  }
};

/// Trains and evaluates one config, returning its test RMSE in feet.
using SweepRunner = std::function<double(const TrainConfig&)>;

inline SweepResult run_sweep(const SweepGrid& grid, const TrainConfig& base, const SweepRunner& run) {
  SweepResult r;
  for (const auto& c : grid.configs(base)) {
    SweepEntry e{c.n_layers, c.hidden, c.epochs};
    try {
      const double v = run(c);
      if (!std::isfinite(v) || v < 0.0) throw Error("non-finite or negative RMSE");
      e.rmse_ft = v;
      e.ok = true;
    } catch (const std::exception& ex) {
      e.ok = false;
      e.status = std::string("failed: ") + ex.what();
      r.warnings.push_back("config layers=" + std::to_string(e.layers) + " neurons=" + std::to_string(e.neurons) +
                           " epochs=" + std::to_string(e.epochs) + " excluded: " + ex.what());
    }
    r.entries.push_back(std::move(e));
  }
  return r;
}

/// Population statistics; mean -/+ std rows report the config whose RMSE is
/// nearest the statistic.
inline SweepSummary summarize(const std::vector<const SweepEntry*>& ok) {
  if (ok.size() < 2) throw DataError("sweep summary: at least two successful configs are required");
  SweepSummary s;
  const double n = static_cast<double>(ok.size());
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  const SweepEntry *pmin = nullptr, *pmax = nullptr;
  for (const auto* e : ok) {
    if (e->rmse_ft < s.min) s.min = e->rmse_ft, pmin = e;
    if (e->rmse_ft > s.max) s.max = e->rmse_ft, pmax = e;
  }
  // shifted by the minimum so equal inputs give exactly that value and std 0
  double shifted = 0.0;
  for (const auto* e : ok) shifted += e->rmse_ft - s.min;
  s.mean = s.min + shifted / n;
  double var = 0.0;
  for (const auto* e : ok) var += (e->rmse_ft - s.mean) * (e->rmse_ft - s.mean) / n;
  s.std = std::sqrt(var);
  auto nearest = [&](double target) {
    const SweepEntry* best = ok.front();
    for (const auto* e : ok) {
      if (std::abs(e->rmse_ft - target) < std::abs(best->rmse_ft - target)) best = e;
    }
    return best;
  };
  s.rows = {{"Min", s.min, pmin},
            {"Max", s.max, pmax},
            {"Mean - Std", s.mean - s.std, nearest(s.mean - s.std)},
            {"Mean + Std", s.mean + s.std, nearest(s.mean + s.std)}};
  return s;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  csv::write_header(out, {"layers", "neurons", "epochs", "rmse_ft", "status"});
  for (const auto& e : r.entries) {
    out << e.layers << ',' << e.neurons << ',' << e.epochs << ',' << (e.ok ? csv::fmt(e.rmse_ft) : std::string()) << ','
        << (e.ok ? std::string("ok") : std::string("failed")) << '\n';
  }
}

/// One row per statistic with the config that achieves it (or is nearest).
inline void write_sweep_summary_csv(std::ostream& out, const SweepSummary& s) {
  csv::write_header(out, {"row", "rmse_ft", "layers", "neurons", "epochs", "config_rmse_ft"});
  for (const auto& r : s.rows) {
    out << r.label << ',' << csv::fmt(r.statistic) << ',' << r.config->layers << ',' << r.config->neurons << ','
        << r.config->epochs << ',' << csv::fmt(r.config->rmse_ft) << '\n';
  }
}

}  // namespace surge
