#pragma once

// Normalization, reshaping and batching of offset series into model samples.

#include "surge/core.hpp"
#include "surge/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace surge {

/// Per-feature min-max scaler. A feature with max == min maps to 0.
struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t features() const { return min.size(); }

  /// `data` is row-major with `n_features` values per record.
  static MinMaxScaler fit(std::span<const double> data, std::size_t n_features = 1) {
    if (n_features == 0 || data.empty() || data.size() % n_features != 0) {
      throw DataError("scaler: empty or ragged input");
    }
    MinMaxScaler s;
    s.min.assign(n_features, std::numeric_limits<double>::infinity());
    s.max.assign(n_features, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double v = data[i];
      if (!std::isfinite(v)) throw DataError("scaler: non-finite input");
      auto f = i % n_features;
      s.min[f] = std::min(s.min[f], v);
      s.max[f] = std::max(s.max[f], v);
    }
    return s;
  }

  double transform(double v, std::size_t feature = 0) const {
    const double range = max.at(feature) - min.at(feature);
    return range > 0.0 ? (v - min[feature]) / range : 0.0;
  }

  double inverse(double v, std::size_t feature = 0) const {
    return min.at(feature) + v * (max.at(feature) - min.at(feature));
  }

  std::vector<double> transform(std::span<const double> data) const {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = transform(data[i], i % features());
    return out;
  }

  std::vector<double> inverse(std::span<const double> data) const {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = inverse(data[i], i % features());
    return out;
  }

  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;
};

/// Bounding box of the training stations; maps (lon, lat) into [0,1]^2.
struct CoordBounds {
  MinMaxScaler scaler;  // 2 features: lon, lat

  static CoordBounds fit(const std::vector<OffsetSeries>& stations) {
    std::vector<double> xy;
    for (const auto& s : stations) {
      xy.push_back(s.lon);
      xy.push_back(s.lat);
    }
    return CoordBounds{MinMaxScaler::fit(xy, 2)};
  }

  bool contains(double lon, double lat) const {
    return lon >= scaler.min[0] && lon <= scaler.max[0] && lat >= scaler.min[1] && lat <= scaler.max[1];
  }

  /// Normalized coordinates, clamped into [0,1]^2.
  std::pair<double, double> normalize(double lon, double lat) const {
    return {std::clamp(scaler.transform(lon, 0), 0.0, 1.0), std::clamp(scaler.transform(lat, 1), 0.0, 1.0)};
  }

  friend bool operator==(const CoordBounds&, const CoordBounds&) = default;
};

/// Row-major reshape of a length-T series into rows x (T / rows).
inline Matrix reshape_series(std::span<const double> values, std::size_t rows, bool truncate = false) {
  if (rows == 0) throw DataError("reshape: rows must be positive");
  const std::size_t T = values.size();
  if (T < rows) throw DataError("reshape: series of length " + std::to_string(T) + " shorter than rows=" + std::to_string(rows));
  if (T % rows != 0 && !truncate) {
    throw DataError("reshape: rows=" + std::to_string(rows) + " does not divide T=" + std::to_string(T) +
                    "; enable truncation to drop the trailing " + std::to_string(T % rows) + " value(s)");
  }
  const std::size_t cols = T / rows;
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = values[i];
  return m;
}

inline std::vector<double> flatten(const Matrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

/// Row count for a signal of length T: 5 or 3 when they divide T, else the
/// smallest divisor in [3, sqrt(T)]. Prime T needs truncation (then 5).
inline std::size_t default_rows(std::size_t T, bool truncate = false) {
  if (T < 3) throw DataError("default rows: T must be at least 3");
  if (T % 5 == 0) return 5;
  if (T % 3 == 0) return 3;
  for (std::size_t d = 3; d * d <= T; ++d) {
    if (T % d == 0) return d;
  }
  if (truncate) return T >= 5 ? 5 : 3;
  throw DataError("default rows: T=" + std::to_string(T) + " has no divisor in [3, sqrt(T)]; enable truncation");
}

struct OffsetSample {
  std::string station_id;
  double x = 0.0;  // normalized lon
  double y = 0.0;  // normalized lat
  Matrix matrix;   // normalized offsets, rows x cols

  Matrix coords() const {
    Matrix c(1, 2);
    c << x, y;
    return c;
  }
};

struct Batch {
  std::vector<OffsetSample> samples;
};

/// Normalizes every station with `scaler` and `bounds` and reshapes to rows.
inline std::vector<OffsetSample> make_samples(const std::vector<OffsetSeries>& stations, const MinMaxScaler& scaler,
                                              const CoordBounds& bounds, std::size_t rows, bool truncate = false) {
  std::vector<OffsetSample> out;
  out.reserve(stations.size());
  for (const auto& s : stations) {
    const auto norm = scaler.transform(s.values);
    const auto [x, y] = bounds.normalize(s.lon, s.lat);
    out.push_back(OffsetSample{s.station_id, x, y, reshape_series(norm, rows, truncate)});
  }
  return out;
}

inline MinMaxScaler fit_offset_scaler(const std::vector<OffsetSeries>& stations) {
  std::vector<double> pooled;
  for (const auto& s : stations) pooled.insert(pooled.end(), s.values.begin(), s.values.end());
  return MinMaxScaler::fit(pooled, 1);
}

/// Seeded shuffle, then consecutive chunks of `batch_size`; the last batch may be short.
inline std::vector<Batch> make_batches(std::vector<OffsetSample> samples, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw DataError("batches: batch size must be positive");
  if (!samples.empty()) {
    const Index r = samples.front().matrix.rows();
    const Index c = samples.front().matrix.cols();
    for (const auto& s : samples) {
      if (s.matrix.rows() != r || s.matrix.cols() != c) throw DimensionError("batches: mixed sample shapes");
    }
  }
  Rng rng(seed);
  rng.shuffle(samples);
  std::vector<Batch> out;
  for (std::size_t i = 0; i < samples.size(); i += batch_size) {
    Batch b;
    for (std::size_t j = i; j < std::min(samples.size(), i + batch_size); ++j) b.samples.push_back(std::move(samples[j]));
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace surge
