#pragma once

// Synthetic hurricanes: station layouts over a bounding box and a spatially
// smooth offset field with known ground truth.
//
//   offset(x, y, t) = a * sin(w t + phi(x, y)) * g(x, y) + b(x, y) + noise
//
// x, y are the station coordinates normalized to the box. modeled is written
// as observed + offset so that modeled - observed recovers the field.

#include "surge/ingest.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace surge {

struct FieldSpec {
  std::size_t n_stations = 60;
  std::size_t T = 40;
  double lon_min = -95.0, lon_max = -88.0;
  double lat_min = 28.0, lat_max = 31.0;

  double amplitude_ft = 1.0;
  double omega_per_h = 2.0 * std::numbers::pi / 12.42;
  double phase_x = 0.8 * std::numbers::pi;  // phi = phase_x * x + phase_y * y
  double phase_y = 0.4 * std::numbers::pi;
  double envelope_floor = 0.5;              // g = floor + (1 - floor) * exp(-r^2 / (2 s^2))
  double envelope_x0 = 0.4, envelope_y0 = 0.6, envelope_sigma = 0.35;
  double baseline_ft = 0.3;                 // b = baseline + baseline_slope * x
  double baseline_slope_ft = 0.4;

  double noise_ft = 0.05;
  double outlier_rate = 0.0;
  double outlier_spike_ft = 10.0;
  std::uint64_t seed = 7;

  void validate() const {
    if (T < 3) throw DataError("synth: T must be at least 3");
    if (n_stations < 12) throw DataError("synth: at least 12 stations are required");
    if (!(lon_max > lon_min) || !(lat_max > lat_min)) throw DataError("synth: degenerate bounding box");
    const double ps[] = {lon_min, lon_max, lat_min, lat_max, amplitude_ft, omega_per_h, phase_x, phase_y, envelope_floor,
                         envelope_x0, envelope_y0, envelope_sigma, baseline_ft, baseline_slope_ft, noise_ft,
                         outlier_rate, outlier_spike_ft};
    for (double p : ps) {
      if (!std::isfinite(p)) throw DataError("synth: non-finite field parameter");
    }
    if (noise_ft < 0.0 || envelope_sigma <= 0.0) throw DataError("synth: noise must be >= 0 and sigma > 0");
    if (outlier_rate < 0.0 || outlier_rate > 1.0) throw DataError("synth: outlier rate must lie in [0,1]");
  }

  double norm_x(double lon) const { return (lon - lon_min) / (lon_max - lon_min); }
  double norm_y(double lat) const { return (lat - lat_min) / (lat_max - lat_min); }

  double phase(double x, double y) const { return phase_x * x + phase_y * y; }
  double envelope(double x, double y) const {
    const double r2 = (x - envelope_x0) * (x - envelope_x0) + (y - envelope_y0) * (y - envelope_y0);
    return envelope_floor + (1.0 - envelope_floor) * std::exp(-r2 / (2.0 * envelope_sigma * envelope_sigma));
  }
  double baseline(double x) const { return baseline_ft + baseline_slope_ft * x; }

  /// Noise-free field at a coordinate in degrees.
  double offset(double lon, double lat, std::size_t t) const {
    const double x = norm_x(lon), y = norm_y(lat);
    return amplitude_ft * std::sin(omega_per_h * static_cast<double>(t) + phase(x, y)) * envelope(x, y) + baseline(x);
  }

  std::vector<double> offset_series(double lon, double lat) const {
    std::vector<double> v(T);
    for (std::size_t t = 0; t < T; ++t) v[t] = offset(lon, lat, t);
    return v;
  }

  /// Upper bound on |d offset / d(x, y)| in normalized units (per unit of x or y),
  /// from |d sin| <= 1, |dg| <= (1 - floor) / (sigma sqrt(e)).
  double lipschitz_normalized() const {
    const double dphi = std::hypot(phase_x, phase_y);
    const double dg = (1.0 - envelope_floor) / (envelope_sigma * std::sqrt(std::exp(1.0)));
    return std::abs(amplitude_ft) * (dphi + dg) + std::abs(baseline_slope_ft);
  }
};

struct SynthDataset {
  std::vector<StationSeries> stations;
  std::vector<OffsetSeries> truth;         // noise-free field, no outliers
  std::vector<std::string> outlier_ids;    // stations with injected spikes
};

inline std::string synth_station_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "SYN%03zu", i);
  return buf;
}

inline SynthDataset generate_dataset(const FieldSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SynthDataset d;
  const auto t0 = std::chrono::sys_days{std::chrono::year{2016} / 10 / 6};

  // Distinct coordinates, rounded to 1e-4 degrees like a gauge catalogue.
  std::set<std::pair<long, long>> used;
  std::vector<std::pair<double, double>> coords;
  while (coords.size() < spec.n_stations) {
    const double lon = std::round(rng.uniform(spec.lon_min, spec.lon_max) * 1e4) / 1e4;
    const double lat = std::round(rng.uniform(spec.lat_min, spec.lat_max) * 1e4) / 1e4;
    if (used.insert({std::lround(lon * 1e4), std::lround(lat * 1e4)}).second) coords.emplace_back(lon, lat);
  }

  const auto n_out = static_cast<std::size_t>(std::llround(spec.outlier_rate * static_cast<double>(spec.n_stations)));
  std::vector<std::size_t> order(spec.n_stations);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<bool> is_outlier(spec.n_stations, false);
  for (std::size_t i = 0; i < n_out; ++i) is_outlier[order[i]] = true;

  for (std::size_t i = 0; i < spec.n_stations; ++i) {
    const auto [lon, lat] = coords[i];
    StationSeries s;
    s.station_id = synth_station_id(i);
    s.agency = static_cast<Agency>(rng.below(5));
    s.lon = lon;
    s.lat = lat;
    const double tide_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const auto truth = spec.offset_series(lon, lat);
    const std::size_t spike_at = rng.below(spec.T);
    for (std::size_t t = 0; t < spec.T; ++t) {
      s.timestamps.push_back(t0 + std::chrono::hours{t});
      const double observed = 1.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0 + tide_phase) +
                              0.02 * static_cast<double>(t);
      double off = truth[t] + (spec.noise_ft > 0.0 ? spec.noise_ft * rng.normal() : 0.0);
      if (is_outlier[i] && t == spike_at) off += spec.outlier_spike_ft;
      s.observed.push_back(observed);
      s.modeled.push_back(observed + off);
    }
    if (is_outlier[i]) d.outlier_ids.push_back(s.station_id);
    d.truth.push_back(OffsetSeries{s.station_id, lon, lat, truth});
    d.stations.push_back(std::move(s));
  }
  return d;
}

}  // namespace surge
