#pragma once

// Coordinate clustering of gauge stations and the cluster-stratified
// train/test split (one held-out station per cluster).

#include "surge/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace surge {

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
  friend auto operator<=>(const GeoPoint&, const GeoPoint&) = default;
};

inline double squared_distance(const GeoPoint& a, const GeoPoint& b) {
  const double dx = a.lon - b.lon;
  const double dy = a.lat - b.lat;
  return dx * dx + dy * dy;
}

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<GeoPoint> centroids;
  std::vector<std::size_t> labels;  // one per input point
  std::size_t iterations = 0;

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(k, 0);
    for (auto l : labels) ++s.at(l);
    return s;
  }
};

/// Sum of squared distances from each point to its cluster centroid.
inline double inertia(const std::vector<GeoPoint>& points, const ClusterAssignment& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) acc += squared_distance(points[i], a.centroids[a.labels[i]]);
  return acc;
}

struct KMeansOptions {
  double tolerance_deg = 1e-6;
  std::size_t max_iterations = 300;
};

namespace detail {
inline std::size_t nearest(const GeoPoint& p, const std::vector<GeoPoint>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline std::vector<GeoPoint> recompute_centroids(const std::vector<GeoPoint>& points,
                                                 const std::vector<std::size_t>& labels, std::size_t k,
                                                 const std::vector<GeoPoint>& previous) {
  std::vector<GeoPoint> sum(k);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum[labels[i]].lon += points[i].lon;
    sum[labels[i]].lat += points[i].lat;
    ++count[labels[i]];
  }
  std::vector<GeoPoint> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    out[c] = count[c] ? GeoPoint{sum[c].lon / static_cast<double>(count[c]), sum[c].lat / static_cast<double>(count[c])}
                      : previous[c];
  }
  return out;
}
}  // namespace detail

/// Lloyd's algorithm on raw (lon, lat) with greedy farthest-point seeding from
/// a seeded random first centroid. Deterministic for a given seed.
inline ClusterAssignment kmeans(const std::vector<GeoPoint>& points, std::size_t k, std::uint64_t seed,
                                KMeansOptions opt = {}) {
  if (k == 0) throw DataError("kmeans: k must be at least 1");
  const std::set<GeoPoint> distinct(points.begin(), points.end());
  if (k > distinct.size()) {
    throw DataError("kmeans: k=" + std::to_string(k) + " exceeds the number of distinct points (" +
                    std::to_string(distinct.size()) + ")");
  }
  const std::size_t n = points.size();
  Rng rng(seed);

  std::vector<GeoPoint> centroids{points[rng.below(n)]};
  std::vector<double> min_d(n);
  for (std::size_t i = 0; i < n; ++i) min_d[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    const auto far = static_cast<std::size_t>(std::max_element(min_d.begin(), min_d.end()) - min_d.begin());
    centroids.push_back(points[far]);
    for (std::size_t i = 0; i < n; ++i) min_d[i] = std::min(min_d[i], squared_distance(points[i], points[far]));
  }

  ClusterAssignment a{k, centroids, std::vector<std::size_t>(n, 0), 0};
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) a.labels[i] = detail::nearest(points[i], a.centroids);

    // An emptied cluster takes over the point worst served by its centroid.
    auto sizes = a.sizes();
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t worst = n;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[a.labels[i]] < 2) continue;
        const double d = squared_distance(points[i], a.centroids[a.labels[i]]);
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      if (worst == n) break;
      --sizes[a.labels[worst]];
      a.labels[worst] = c;
      sizes[c] = 1;
    }

    auto next = detail::recompute_centroids(points, a.labels, k, a.centroids);
    double moved = 0.0;
    for (std::size_t c = 0; c < k; ++c) moved = std::max(moved, std::sqrt(squared_distance(next[c], a.centroids[c])));
    a.centroids = std::move(next);
    a.iterations = it + 1;
    if (moved < opt.tolerance_deg) break;
  }
  return a;
}

/// Ten percent of the stations, rounded down, at least one.
inline std::size_t choose_k(std::size_t n_stations) { return std::max<std::size_t>(1, n_stations / 10); }

/// Merges single-station clusters into the cluster with the nearest centroid
/// (recomputing that centroid) until every cluster holds at least two
/// stations, then renumbers clusters contiguously.
inline ClusterAssignment repair_singletons(const std::vector<GeoPoint>& points, ClusterAssignment a) {
  if (points.size() < 2) throw DataError("cluster repair: need at least two stations");
  for (;;) {
    const auto sizes = a.sizes();
    std::size_t single = a.k;
    for (std::size_t c = 0; c < a.k; ++c) {
      if (sizes[c] == 1) {
        single = c;
        break;
      }
    }
    if (single == a.k) break;

    std::size_t target = a.k;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < a.k; ++c) {
      if (c == single || sizes[c] == 0) continue;
      const double d = squared_distance(a.centroids[single], a.centroids[c]);
      if (d < best) {
        best = d;
        target = c;
      }
    }
    for (auto& l : a.labels) {
      if (l == single) l = target;
    }
    // Drop the emptied cluster and renumber.
    for (auto& l : a.labels) {
      if (l > single) --l;
    }
    a.centroids.erase(a.centroids.begin() + static_cast<std::ptrdiff_t>(single));
    --a.k;
    a.centroids = detail::recompute_centroids(points, a.labels, a.k, a.centroids);
  }
  // Drop any empty clusters left behind.
  const auto sizes = a.sizes();
  std::vector<std::size_t> remap(a.k, 0);
  std::vector<GeoPoint> kept;
  for (std::size_t c = 0; c < a.k; ++c) {
    if (sizes[c] == 0) continue;
    remap[c] = kept.size();
    kept.push_back(a.centroids[c]);
  }
  for (auto& l : a.labels) l = remap[l];
  a.k = kept.size();
  a.centroids = std::move(kept);
  return a;
}

struct SplitPlan {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

/// One uniformly drawn test station per cluster, the rest train.
inline SplitPlan make_split(const std::vector<std::string>& station_ids, const ClusterAssignment& a,
                            std::uint64_t seed) {
  if (station_ids.size() != a.labels.size()) throw DimensionError("split: station/label count mismatch");
  std::vector<std::vector<std::size_t>> members(a.k);
  for (std::size_t i = 0; i < a.labels.size(); ++i) members.at(a.labels[i]).push_back(i);
  Rng rng(seed);
  std::vector<bool> is_test(station_ids.size(), false);
  for (std::size_t c = 0; c < a.k; ++c) {
    if (members[c].size() < 2) {
      throw StateError("split: cluster " + std::to_string(c) + " has " + std::to_string(members[c].size()) +
                       " station(s); repair clusters before splitting");
    }
    is_test[members[c][rng.below(members[c].size())]] = true;
  }
  SplitPlan plan;
  plan.seed = seed;
  for (std::size_t i = 0; i < station_ids.size(); ++i) {
    (is_test[i] ? plan.test_ids : plan.train_ids).push_back(station_ids[i]);
  }
  return plan;
}

inline void write_split_csv(std::ostream& out, const SplitPlan& plan) {
  csv::write_header(out, {"station_id", "role"});
  for (const auto& id : plan.train_ids) out << id << ",train\n";
  for (const auto& id : plan.test_ids) out << id << ",test\n";
}

inline SplitPlan read_split_csv(std::istream& in, const std::string& source = "<split>") {
  const auto table = csv::Table::read(in, {"station_id", "role"}, source);
  SplitPlan plan;
  std::set<std::string> seen;
  for (const auto& row : table.rows()) {
    if (!seen.insert(row.fields[0]).second) throw FormatError(table.where(row) + ": duplicate station " + row.fields[0]);
    if (row.fields[1] == "train") {
      plan.train_ids.push_back(row.fields[0]);
    } else if (row.fields[1] == "test") {
      plan.test_ids.push_back(row.fields[0]);
    } else {
      throw FormatError(table.where(row) + ": role must be train or test, got '" + row.fields[1] + "'");
    }
  }
  return plan;
}

inline void write_clusters_csv(std::ostream& out, const std::vector<std::string>& ids, const ClusterAssignment& a) {
  csv::write_header(out, {"station_id", "cluster_index"});
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << a.labels[i] << '\n';
}

}  // namespace surge
