#pragma once

#include "oracles.hpp"
#include "surge/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

using surge::Index;
using surge::Matrix;

inline oracle::Grid to_grid(const Matrix& m) {
  oracle::Grid g(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

inline oracle::Vec to_vec(const Matrix& m) {
  oracle::Vec v;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

inline double max_abs_diff(const oracle::Grid& a, const Matrix& b) {
  double d = 0;
  for (Index i = 0; i < b.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j) d = std::max(d, std::abs(a[i][j] - b(i, j)));
  return d;
}

/// Hand-rolled generator for property tests: sizes and values drawn from a
/// seeded stream so every failure is reproducible from the case index.
struct Gen {
  surge::Rng rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::size_t size(std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }
  double real(double lo, double hi) { return rng.uniform(lo, hi); }
  Matrix matrix(Index r, Index c, double lo = -1.0, double hi = 1.0) { return surge::uniform_matrix(rng, r, c, lo, hi); }
  std::vector<double> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
  }
};

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("surge_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
