#pragma once

// Brute-force reference implementations used only by the tests. Everything
// here is written with plain loops over std::vector so it shares no code path
// with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Grid = std::vector<Vec>;  // row-major [row][col]

inline Grid zeros(std::size_t r, std::size_t c) { return Grid(r, Vec(c, 0.0)); }

inline Grid matmul(const Grid& a, const Grid& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Grid out = zeros(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t p = 0; p < k; ++p) out[i][j] += a[i][p] * b[p][j];
  return out;
}

inline double sigm(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// y = act(x W + b)
inline Grid dense(const Grid& x, const Grid& W, const Vec& b, bool sigmoid) {
  Grid y = matmul(x, W);
  for (auto& row : y)
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] += b[j];
      if (sigmoid) row[j] = sigm(row[j]);
    }
  return y;
}

struct GruWeights {
  Grid Wz, Wr, Wh, Uz, Ur, Uh;
  Vec bz, br, bh;
};

/// Scalar GRU, h0 = 0, reset applied before the candidate projection.
inline Grid gru(const Grid& x, const GruWeights& w) {
  const std::size_t H = w.bz.size();
  const std::size_t in = w.Wz.size();
  Vec h(H, 0.0);
  Grid out;
  for (const auto& xt : x) {
    Vec z(H), r(H), c(H), hn(H);
    for (std::size_t j = 0; j < H; ++j) {
      double az = w.bz[j], ar = w.br[j];
      for (std::size_t i = 0; i < in; ++i) {
        az += xt[i] * w.Wz[i][j];
        ar += xt[i] * w.Wr[i][j];
      }
      for (std::size_t i = 0; i < H; ++i) {
        az += h[i] * w.Uz[i][j];
        ar += h[i] * w.Ur[i][j];
      }
      z[j] = sigm(az);
      r[j] = sigm(ar);
    }
    for (std::size_t j = 0; j < H; ++j) {
      double ac = w.bh[j];
      for (std::size_t i = 0; i < in; ++i) ac += xt[i] * w.Wh[i][j];
      for (std::size_t i = 0; i < H; ++i) ac += r[i] * h[i] * w.Uh[i][j];
      c[j] = std::tanh(ac);
    }
    for (std::size_t j = 0; j < H; ++j) hn[j] = (1.0 - z[j]) * h[j] + z[j] * c[j];
    h = hn;
    out.push_back(h);
  }
  return out;
}

inline Grid reverse_rows(Grid g) {
  std::reverse(g.begin(), g.end());
  return g;
}

// -- metrics ----------------------------------------------------------------

inline double mse(const Vec& y, const Vec& p) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - p[i]) * (y[i] - p[i]);
  return s / static_cast<double>(y.size());
}
inline double rmse(const Vec& y, const Vec& p) { return std::sqrt(mse(y, p)); }
inline double mae(const Vec& y, const Vec& p) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(y[i] - p[i]);
  return s / static_cast<double>(y.size());
}
inline double bce(const Vec& y, const Vec& p) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double q = p[i];
    if (q < 1e-7) q = 1e-7;
    if (q > 1.0 - 1e-7) q = 1.0 - 1e-7;
    s += y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return -s / static_cast<double>(y.size());
}

/// Moment loss over a batch of equally sized flat samples.
inline double moment(const std::vector<Vec>& real, const std::vector<Vec>& gen) {
  const std::size_t cells = real[0].size();
  double total = 0;
  for (std::size_t k = 0; k < cells; ++k) {
    double mr = 0, mg = 0;
    for (const auto& s : real) mr += s[k];
    for (const auto& s : gen) mg += s[k];
    mr /= static_cast<double>(real.size());
    mg /= static_cast<double>(gen.size());
    double vr = 0, vg = 0;
    for (const auto& s : real) vr += (s[k] - mr) * (s[k] - mr);
    for (const auto& s : gen) vg += (s[k] - mg) * (s[k] - mg);
    vr /= static_cast<double>(real.size());
    vg /= static_cast<double>(gen.size());
    total += std::fabs(mr - mg) + std::fabs(std::sqrt(vr + 1e-6) - std::sqrt(vg + 1e-6));
  }
  return total / static_cast<double>(cells);
}

// -- statistics ---------------------------------------------------------------

/// Type-7 quantile by direct definition on a copy.
inline double quantile(Vec v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double mean(const Vec& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

inline double population_std(const Vec& v) {
  const double m = mean(v);
  long double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(static_cast<double>(s / v.size()));
}

// -- optimizer ------------------------------------------------------------------

/// Adam on a flat parameter vector; returns the parameter after each step.
inline std::vector<Vec> adam_trace(Vec p, const std::vector<Vec>& grads, double lr, double b1, double b2, double eps) {
  Vec m(p.size(), 0.0), v(p.size(), 0.0);
  std::vector<Vec> out;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = grads[t - 1][i];
      m[i] = b1 * m[i] + (1 - b1) * g;
      v[i] = b2 * v[i] + (1 - b2) * g * g;
      const double mh = m[i] / (1 - std::pow(b1, static_cast<double>(t)));
      const double vh = v[i] / (1 - std::pow(b2, static_cast<double>(t)));
      p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
    out.push_back(p);
  }
  return out;
}

// -- clustering -----------------------------------------------------------------

struct Pt {
  double x, y;
};

/// Best and worst inertia over plain random-restart Lloyd runs (tiny LCG for seeding).
struct RestartRange {
  double best = std::numeric_limits<double>::infinity();
  double worst = 0.0;
};

inline RestartRange kmeans_restart_inertia(const std::vector<Pt>& pts, std::size_t k, int restarts, std::uint64_t seed) {
  RestartRange range;
  std::uint64_t s = seed * 2862933555777941757ULL + 3037000493ULL;
  auto next = [&] {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return s >> 33;
  };
  for (int r = 0; r < restarts; ++r) {
    std::vector<Pt> c;
    std::vector<std::size_t> chosen;
    while (c.size() < k) {
      const std::size_t i = next() % pts.size();
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      chosen.push_back(i);
      c.push_back(pts[i]);
    }
    std::vector<std::size_t> lab(pts.size(), 0);
    for (int it = 0; it < 200; ++it) {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        double bd = 1e300;
        for (std::size_t j = 0; j < k; ++j) {
          const double d = (pts[i].x - c[j].x) * (pts[i].x - c[j].x) + (pts[i].y - c[j].y) * (pts[i].y - c[j].y);
          if (d < bd) bd = d, lab[i] = j;
        }
      }
      std::vector<Pt> nc(k, {0, 0});
      std::vector<std::size_t> cnt(k, 0);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        nc[lab[i]].x += pts[i].x;
        nc[lab[i]].y += pts[i].y;
        ++cnt[lab[i]];
      }
      for (std::size_t j = 0; j < k; ++j) c[j] = cnt[j] ? Pt{nc[j].x / cnt[j], nc[j].y / cnt[j]} : c[j];
    }
    double in = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      in += (pts[i].x - c[lab[i]].x) * (pts[i].x - c[lab[i]].x) + (pts[i].y - c[lab[i]].y) * (pts[i].y - c[lab[i]].y);
    range.best = std::min(range.best, in);
    range.worst = std::max(range.worst, in);
  }
  return range;
}

// -- gradients ------------------------------------------------------------------

/// Central difference of f with respect to *x.
inline double numeric_derivative(double* x, const std::function<double()>& f, double h = 1e-6) {
  const double saved = *x;
  *x = saved + h;
  const double up = f();
  *x = saved - h;
  const double down = f();
  *x = saved;
  return (up - down) / (2 * h);
}

}  // namespace oracle
