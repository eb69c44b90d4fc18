#pragma once

// Coordinate-conditioned offset generation, forecast correction and
// per-station evaluation.

#include "surge/bundle.hpp"
#include "surge/geo_cluster.hpp"
#include "surge/nn/loss.hpp"

#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace surge {

struct ExtrapolationRequest {
  std::vector<GeoPoint> coords;  // degrees
  std::size_t n_noise_draws = 1;
  std::uint64_t seed = 0;
};

struct GeneratedSeries {
  GeoPoint requested;
  GeoPoint used;  // after clamping into the training box
  bool clamped = false;
  std::vector<double> offsets_ft;
};

struct ExtrapolationResult {
  std::vector<GeneratedSeries> series;
  std::vector<std::string> warnings;
};

/// Worker count from SURGE_EXTRAP_THREADS; unset or 0 means sequential.
inline std::size_t extrapolation_threads() {
  const char* v = std::getenv("SURGE_EXTRAP_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0') throw DataError(std::string("SURGE_EXTRAP_THREADS must be a non-negative integer, got '") + v + "'");
  return static_cast<std::size_t>(n);
}

/// One coordinate; noise comes from an Rng seeded with `coord_seed` only.
inline std::vector<double> generate_at(const TrainedBundle& b, double lon, double lat, std::size_t draws,
                                       std::uint64_t coord_seed) {
  const auto [x, y] = b.bounds.normalize(lon, lat);
  Matrix c(1, 2);
  c << x, y;
  Rng rng(coord_seed);
  std::vector<double> acc(b.rows * b.cols, 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    const Matrix noise = uniform_matrix(rng, static_cast<Index>(b.rows), static_cast<Index>(b.cols));
    const auto series = b.train_scaler.inverse(flatten(b.model.synthesize(c, noise)));
    for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += series[t];
  }
  if (draws > 1) {
    for (auto& v : acc) v /= static_cast<double>(draws);
  }
  return acc;
}

inline ExtrapolationResult extrapolate(const TrainedBundle& b, const ExtrapolationRequest& req,
                                       std::size_t threads = extrapolation_threads()) {
  if (!b.loaded()) throw StateError("extrapolate: bundle not loaded");
  if (req.coords.empty()) throw DataError("extrapolate: empty request");
  if (req.n_noise_draws == 0) throw DataError("extrapolate: n_noise_draws must be at least 1");
  ExtrapolationResult out;
  out.series.resize(req.coords.size());
  for (std::size_t i = 0; i < req.coords.size(); ++i) {
    const auto& p = req.coords[i];
    if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) throw DataError("extrapolate: non-finite coordinate at index " + std::to_string(i));
    auto& g = out.series[i];
    g.requested = p;
    g.used = {std::clamp(p.lon, b.bounds.scaler.min[0], b.bounds.scaler.max[0]),
              std::clamp(p.lat, b.bounds.scaler.min[1], b.bounds.scaler.max[1])};
    g.clamped = !(g.used == p);
    if (g.clamped) {
      out.warnings.push_back("coordinate " + std::to_string(i) + " (" + csv::fmt(p.lon) + ", " + csv::fmt(p.lat) +
                             ") outside the training box; clamped to (" + csv::fmt(g.used.lon) + ", " +
                             csv::fmt(g.used.lat) + ")");
    }
  }
  auto work = [&](std::size_t i) {
    auto& g = out.series[i];
    g.offsets_ft = generate_at(b, g.used.lon, g.used.lat, req.n_noise_draws, derive_seed(req.seed, i));
  };
  const std::size_t n = req.coords.size();
  const std::size_t workers = std::min(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) work(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// corrected[t] = modeled[t] - offset[t]
inline std::vector<double> correct_forecast(const std::vector<double>& modeled, const std::vector<double>& offset) {
  if (modeled.size() != offset.size()) {
    throw DimensionError("correct: modeled has " + std::to_string(modeled.size()) + " values, offsets " +
                         std::to_string(offset.size()));
  }
  std::vector<double> out(modeled.size());
  for (std::size_t t = 0; t < modeled.size(); ++t) out[t] = modeled[t] - offset[t];
  return out;
}

struct StationEval {
  std::string station_id;
  double rmse_without_ai = 0.0;
  double rmse_with_ai = 0.0;
  double mse = 0.0;  // with AI
  double mae = 0.0;  // with AI
  std::vector<double> modeled, corrected, observed;
};

struct EvalReport {
  std::vector<StationEval> stations;
  double pooled_mse_without_ai = 0.0;
  double pooled_rmse_without_ai = 0.0;
  double pooled_mae_without_ai = 0.0;
  double pooled_mse_with_ai = 0.0;
  double pooled_rmse_with_ai = 0.0;
  double pooled_mae_with_ai = 0.0;
  double improved_fraction = 0.0;
};

/// Aggregates computed from the per-station series.
inline void compute_aggregates(EvalReport& r) {
  std::vector<double> m, c, o;
  std::size_t improved = 0;
  for (const auto& s : r.stations) {
    m.insert(m.end(), s.modeled.begin(), s.modeled.end());
    c.insert(c.end(), s.corrected.begin(), s.corrected.end());
    o.insert(o.end(), s.observed.begin(), s.observed.end());
    if (s.rmse_with_ai < s.rmse_without_ai) ++improved;
  }
  r.pooled_mse_without_ai = nn::mse(o, m);
  r.pooled_rmse_without_ai = std::sqrt(r.pooled_mse_without_ai);
  r.pooled_mae_without_ai = nn::mae(o, m);
  r.pooled_mse_with_ai = nn::mse(o, c);
  r.pooled_rmse_with_ai = std::sqrt(r.pooled_mse_with_ai);
  r.pooled_mae_with_ai = nn::mae(o, c);
  r.improved_fraction = static_cast<double>(improved) / static_cast<double>(r.stations.size());
}

/// Evaluation from explicit generated offsets (one series per station).
inline EvalReport evaluate_with_offsets(const std::vector<StationSeries>& stations,
                                        const std::vector<std::vector<double>>& generated) {
  if (stations.empty()) throw DataError("evaluate: empty test set");
  if (stations.size() != generated.size()) throw DimensionError("evaluate: one generated series per station required");
  EvalReport r;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto& st = stations[i];
    if (auto why = screen_station(st)) throw DataError("evaluate: station " + st.station_id + ": " + *why);
    const std::size_t L = generated[i].size();
    if (L > st.length()) throw DimensionError("evaluate: generated series longer than station " + st.station_id);
    StationEval e;
    e.station_id = st.station_id;
    e.modeled.assign(st.modeled.begin(), st.modeled.begin() + static_cast<std::ptrdiff_t>(L));
    e.observed.assign(st.observed.begin(), st.observed.begin() + static_cast<std::ptrdiff_t>(L));
    e.corrected = correct_forecast(e.modeled, generated[i]);
    e.rmse_without_ai = nn::rmse(e.observed, e.modeled);
    e.mse = nn::mse(e.observed, e.corrected);
    e.rmse_with_ai = std::sqrt(e.mse);
    e.mae = nn::mae(e.observed, e.corrected);
    r.stations.push_back(std::move(e));
  }
  compute_aggregates(r);
  return r;
}

inline EvalReport evaluate_stations(const TrainedBundle& b, const std::vector<StationSeries>& test, std::uint64_t seed,
                                    std::size_t draws = 1) {
  if (test.empty()) throw DataError("evaluate: empty test set");
  ExtrapolationRequest req;
  req.seed = seed;
  req.n_noise_draws = draws;
  for (const auto& s : test) req.coords.push_back({s.lon, s.lat});
  const auto gen = extrapolate(b, req);
  std::vector<std::vector<double>> offsets;
  for (const auto& g : gen.series) offsets.push_back(g.offsets_ft);
  return evaluate_with_offsets(test, offsets);
}

inline void write_eval_csv(std::ostream& out, const EvalReport& r) {
  csv::write_header(out, {"station_id", "rmse_without_ai_ft", "rmse_with_ai_ft", "mse_ft2", "mae_ft"});
  for (const auto& s : r.stations) {
    out << s.station_id << ',' << csv::fmt(s.rmse_without_ai) << ',' << csv::fmt(s.rmse_with_ai) << ','
        << csv::fmt(s.mse) << ',' << csv::fmt(s.mae) << '\n';
  }
  out << "POOLED," << csv::fmt(r.pooled_rmse_without_ai) << ',' << csv::fmt(r.pooled_rmse_with_ai) << ','
      << csv::fmt(r.pooled_mse_with_ai) << ',' << csv::fmt(r.pooled_mae_with_ai) << '\n';
  out << "IMPROVED_FRACTION,,,," << csv::fmt(r.improved_fraction) << '\n';
}

inline void write_corrected_csv(std::ostream& out, const EvalReport& r) {
  csv::write_header(out, {"station_id", "t_index", "modeled_ft", "corrected_ft", "observed_ft"});
  for (const auto& s : r.stations) {
    for (std::size_t t = 0; t < s.corrected.size(); ++t) {
      out << s.station_id << ',' << t << ',' << csv::fmt(s.modeled[t]) << ',' << csv::fmt(s.corrected[t]) << ','
          << csv::fmt(s.observed[t]) << '\n';
    }
  }
}

inline void write_generated_csv(std::ostream& out, const ExtrapolationResult& r) {
  csv::write_header(out, {"lon_deg", "lat_deg", "t_index", "offset_ft"});
  for (const auto& g : r.series) {
    for (std::size_t t = 0; t < g.offsets_ft.size(); ++t) {
      out << csv::fmt(g.requested.lon) << ',' << csv::fmt(g.requested.lat) << ',' << t << ',' << csv::fmt(g.offsets_ft[t])
          << '\n';
    }
  }
}

struct BenchRow {
  std::size_t n = 0;
  double seconds = 0.0;
};

/// Sequential generation of n series at seeded random in-box coordinates.
inline std::vector<BenchRow> bench_inference(const TrainedBundle& b, const std::vector<std::size_t>& counts,
                                             std::uint64_t seed) {
  if (!b.loaded()) throw StateError("bench: bundle not loaded");
  if (!std::is_sorted(counts.begin(), counts.end())) throw DataError("bench: counts must be ascending");
  std::vector<BenchRow> rows;
  for (std::size_t n : counts) {
    Rng rng(derive_seed(seed, n));
    std::vector<GeoPoint> pts(n);
    for (auto& p : pts) {
      p.lon = rng.uniform(b.bounds.scaler.min[0], b.bounds.scaler.max[0]);
      p.lat = rng.uniform(b.bounds.scaler.min[1], b.bounds.scaler.max[1]);
    }
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = generate_at(b, pts[i].lon, pts[i].lat, 1, derive_seed(seed, i));
      if (s.empty()) throw StateError("bench: empty generation");
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    rows.push_back({n, dt.count()});
  }
  return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  csv::write_header(out, {"n", "seconds"});
  for (const auto& r : rows) out << r.n << ',' << csv::fmt(r.seconds) << '\n';
}

}  // namespace surge
