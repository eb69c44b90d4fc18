#include "fixtures.hpp"
#include "helpers.hpp"
#include "surge/inference.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace surge;
using testutil::Gen;

namespace {

const TrainedBundle& bundle() {
  static const TrainedBundle b = testutil::tiny_bundle();
  return b;
}

double ulp_of(double v) { return std::nextafter(std::abs(v), INFINITY) - std::abs(v); }

StationSeries dyadic_station(const std::string& id, Gen& g, std::size_t n) {
  // values on a 1/64 grid so every subtraction below is exact
  StationSeries s;
  s.station_id = id;
  s.lon = g.real(-94, -89);
  s.lat = g.real(28.5, 30.5);
  const auto t0 = std::chrono::sys_days{std::chrono::year{2017} / 9 / 1};
  for (std::size_t t = 0; t < n; ++t) {
    s.timestamps.push_back(t0 + std::chrono::hours{t});
    s.observed.push_back(std::round(g.real(-3, 3) * 64) / 64);
    s.modeled.push_back(s.observed.back() + std::round(g.real(-2, 2) * 64) / 64);
  }
  return s;
}

}  // namespace

TEST(Correct, ComposesWithOffsetsToObserved) {
  const std::vector<double> m{2.0, 3.0}, o{1.5, 3.5};
  std::vector<double> off(2);
  for (std::size_t t = 0; t < 2; ++t) off[t] = m[t] - o[t];
  EXPECT_EQ(correct_forecast(m, off), o);

  Gen g(80);
  for (int k = 0; k < 1000; ++k) {
    // exact wherever modeled - observed is itself exact (same sign, within a factor of two)
    const double o1 = g.real(0.05, 6) * (k % 2 ? 1 : -1);
    const double m1 = o1 * g.real(0.5, 2.0);
    ASSERT_EQ(correct_forecast({m1}, {m1 - o1})[0], o1) << m1 << " " << o1;
    // elsewhere within two ulps of the larger magnitude
    const double m2 = g.real(-5, 5), o2 = g.real(-5, 5);
    ASSERT_LE(std::abs(correct_forecast({m2}, {m2 - o2})[0] - o2), 2 * ulp_of(std::max(std::abs(m2), std::abs(o2))));
  }
}

TEST(Correct, ZeroOffsetAndLoopOracle) {
  Gen g(81);
  for (int k = 0; k < 200; ++k) {
    const auto n = g.size(1, 40);
    const auto m = g.vec(n, -5, 5), off = g.vec(n, -2, 2);
    EXPECT_EQ(correct_forecast(m, std::vector<double>(n, 0.0)), m);
    const auto c = correct_forecast(m, off);
    for (std::size_t t = 0; t < n; ++t) ASSERT_EQ(c[t], m[t] - off[t]);
  }
  EXPECT_THROW(correct_forecast({1, 2}, {1}), DimensionError);
}

TEST(Evaluate, PerfectAndZeroGeneration) {
  Gen g(82);
  std::vector<StationSeries> st;
  for (int i = 0; i < 5; ++i) st.push_back(dyadic_station("E" + std::to_string(i), g, 20));
  std::vector<std::vector<double>> perfect, zero;
  for (const auto& s : st) {
    perfect.push_back(compute_offsets(s).values);
    zero.emplace_back(s.length(), 0.0);
  }
  const auto p = evaluate_with_offsets(st, perfect);
  for (const auto& s : p.stations) EXPECT_EQ(s.rmse_with_ai, 0.0);
  EXPECT_EQ(p.pooled_rmse_with_ai, 0.0);

  const auto z = evaluate_with_offsets(st, zero);
  for (const auto& s : z.stations) {
    EXPECT_EQ(s.rmse_with_ai, s.rmse_without_ai);
    EXPECT_EQ(s.corrected, s.modeled);
  }
  EXPECT_EQ(z.pooled_rmse_with_ai, z.pooled_rmse_without_ai);
  EXPECT_EQ(z.pooled_mae_with_ai, z.pooled_mae_without_ai);
  EXPECT_EQ(z.improved_fraction, 0.0);
  EXPECT_THROW(evaluate_with_offsets({}, {}), DataError);
}

TEST(Evaluate, AggregatesMatchPooledOracle) {
  Gen g(83);
  for (int k = 0; k < 50; ++k) {
    std::vector<StationSeries> st;
    std::vector<std::vector<double>> gen;
    const auto n = g.size(1, 8);
    for (std::size_t i = 0; i < n; ++i) {
      st.push_back(dyadic_station("P" + std::to_string(i), g, g.size(2, 30)));
      gen.push_back(g.vec(st.back().length(), -2, 2));
    }
    const auto r = evaluate_with_offsets(st, gen);
    oracle::Vec obs, cor, mod;
    std::size_t improved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      oracle::Vec so, sc, sm;
      for (std::size_t t = 0; t < st[i].length(); ++t) {
        so.push_back(st[i].observed[t]);
        sm.push_back(st[i].modeled[t]);
        sc.push_back(st[i].modeled[t] - gen[i][t]);
      }
      ASSERT_NEAR(r.stations[i].rmse_with_ai, oracle::rmse(so, sc), 1e-12);
      ASSERT_NEAR(r.stations[i].rmse_without_ai, oracle::rmse(so, sm), 1e-12);
      ASSERT_NEAR(r.stations[i].mae, oracle::mae(so, sc), 1e-12);
      improved += oracle::rmse(so, sc) < oracle::rmse(so, sm);
      obs.insert(obs.end(), so.begin(), so.end());
      cor.insert(cor.end(), sc.begin(), sc.end());
      mod.insert(mod.end(), sm.begin(), sm.end());
    }
    ASSERT_NEAR(r.pooled_mse_with_ai, oracle::mse(obs, cor), 1e-12);
    ASSERT_NEAR(r.pooled_rmse_with_ai, std::sqrt(oracle::mse(obs, cor)), 1e-12);
    ASSERT_NEAR(r.pooled_rmse_without_ai, oracle::rmse(obs, mod), 1e-12);
    ASSERT_NEAR(r.improved_fraction, double(improved) / double(n), 1e-15);
    ASSERT_GE(r.improved_fraction, 0.0);
    ASSERT_LE(r.improved_fraction, 1.0);
  }
}

TEST(Evaluate, CsvHasStationAndSummaryRows) {
  Gen g(84);
  std::vector<StationSeries> st{dyadic_station("A", g, 5), dyadic_station("B", g, 5)};
  const auto r = evaluate_with_offsets(st, {std::vector<double>(5, 0.1), std::vector<double>(5, 0.2)});
  std::ostringstream out;
  write_eval_csv(out, r);
  const auto text = out.str();
  EXPECT_EQ(text.rfind("station_id,rmse_without_ai_ft,rmse_with_ai_ft,mse_ft2,mae_ft\nA,", 0), 0u);
  EXPECT_NE(text.find("\nPOOLED,"), std::string::npos);
  EXPECT_NE(text.find("\nIMPROVED_FRACTION,"), std::string::npos);
}

TEST(Extrapolate, LengthAndDeterminism) {
  ExtrapolationRequest r;
  r.coords = {{-93.0, 29.0}, {-90.5, 30.2}};
  r.seed = 3;
  const auto a = extrapolate(bundle(), r, 0);
  const auto b = extrapolate(bundle(), r, 0);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.series[i].offsets_ft.size(), bundle().rows * bundle().cols);
    EXPECT_EQ(a.series[i].offsets_ft, b.series[i].offsets_ft);
  }
  r.seed = 4;
  EXPECT_NE(extrapolate(bundle(), r, 0).series[0].offsets_ft, a.series[0].offsets_ft);
}

TEST(Extrapolate, PerCoordinateResultDependsOnlyOnItsSeed) {
  Gen g(85);
  ExtrapolationRequest r;
  for (int i = 0; i < 12; ++i) r.coords.push_back({g.real(-95, -88), g.real(28, 31)});
  r.seed = 9;
  const auto all = extrapolate(bundle(), r, 0);
  // permuting the request and re-deriving each coordinate's seed reproduces it
  std::vector<std::size_t> perm(r.coords.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  g.rng.shuffle(perm);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const auto& p = all.series[perm[j]].used;
    EXPECT_EQ(generate_at(bundle(), p.lon, p.lat, 1, derive_seed(r.seed, perm[j])), all.series[perm[j]].offsets_ft);
  }
}

TEST(Extrapolate, ThreadCountDoesNotChangeResults) {
  Gen g(86);
  ExtrapolationRequest r;
  for (int i = 0; i < 9; ++i) r.coords.push_back({g.real(-95, -88), g.real(28, 31)});
  r.n_noise_draws = 3;
  const auto seq = extrapolate(bundle(), r, 0);
  for (std::size_t threads : {2u, 4u, 16u}) {
    const auto par = extrapolate(bundle(), r, threads);
    for (std::size_t i = 0; i < r.coords.size(); ++i) ASSERT_EQ(par.series[i].offsets_ft, seq.series[i].offsets_ft);
  }
}

TEST(Extrapolate, MultipleDrawsAverage) {
  const double lon = -91.0, lat = 29.5;
  const auto avg = generate_at(bundle(), lon, lat, 3, 77);
  // rebuild the three draws from the same stream
  const auto [x, y] = bundle().bounds.normalize(lon, lat);
  Matrix c(1, 2);
  c << x, y;
  Rng rng(77);
  std::vector<double> acc(avg.size(), 0.0);
  for (int d = 0; d < 3; ++d) {
    const auto s = bundle().train_scaler.inverse(
        flatten(bundle().model.synthesize(c, uniform_matrix(rng, Index(bundle().rows), Index(bundle().cols)))));
    for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += s[t];
  }
  for (std::size_t t = 0; t < acc.size(); ++t) EXPECT_NEAR(avg[t], acc[t] / 3, 1e-12);
}

TEST(Extrapolate, OutOfBoxIsClampedWithWarning) {
  ExtrapolationRequest r;
  const auto& b = bundle().bounds.scaler;
  r.coords = {{b.min[0] - 5, b.max[1] + 1}, {0.5 * (b.min[0] + b.max[0]), 0.5 * (b.min[1] + b.max[1])}};
  const auto res = extrapolate(bundle(), r, 0);
  EXPECT_TRUE(res.series[0].clamped);
  EXPECT_FALSE(res.series[1].clamped);
  EXPECT_EQ(res.series[0].used.lon, b.min[0]);
  EXPECT_EQ(res.series[0].used.lat, b.max[1]);
  ASSERT_EQ(res.warnings.size(), 1u);
  EXPECT_NE(res.warnings[0].find("clamped"), std::string::npos);
}

TEST(Extrapolate, RejectsBadRequests) {
  EXPECT_THROW(extrapolate(bundle(), ExtrapolationRequest{}, 0), DataError);
  ExtrapolationRequest r;
  r.coords = {{-90, 29}};
  r.n_noise_draws = 0;
  EXPECT_THROW(extrapolate(bundle(), r, 0), DataError);
  r.n_noise_draws = 1;
  EXPECT_THROW(extrapolate(TrainedBundle{}, r, 0), StateError);
  r.coords = {{std::nan(""), 29}};
  EXPECT_THROW(extrapolate(bundle(), r, 0), DataError);
}

TEST(Bench, CountsAndMonotoneTimings) {
  const auto rows = bench_inference(bundle(), {0, 10, 100, 1000}, 1);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].n, 0u);
  EXPECT_LT(rows[0].seconds, 1e-3);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].seconds, rows[i - 1].seconds);
  std::ostringstream out;
  write_bench_csv(out, rows);
  EXPECT_EQ(out.str().rfind("n,seconds\n0,", 0), 0u);
  EXPECT_THROW(bench_inference(bundle(), {10, 5}, 1), DataError);
}

TEST(Threads, EnvironmentVariableParsed) {
  ::setenv("SURGE_EXTRAP_THREADS", "3", 1);
  EXPECT_EQ(extrapolation_threads(), 3u);
  ::setenv("SURGE_EXTRAP_THREADS", "three", 1);
  EXPECT_THROW(extrapolation_threads(), DataError);
  ::unsetenv("SURGE_EXTRAP_THREADS");
  EXPECT_EQ(extrapolation_threads(), 0u);
}

// A short real training run: generating at the training stations themselves
// should beat predicting a zero offset by a wide margin.
TEST(Synthetic, TrainingStationGenerationBeatsZeroBaseline) {
  FieldSpec f;
  const auto data = generate_dataset(f);
  const auto off = testutil::offsets_of(data.stations);
  TrainConfig c;
  c.n_layers = 2;
  c.hidden = 32;
  c.epochs = 1000;  // plateaued; at 300-600 epochs the ratio still swings between runs
  c.seed = 1;
  const auto b = train_bundle(off, {}, c);
  double err = 0, base = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.truth.size(); ++i) {
    const auto gen = generate_at(b, data.truth[i].lon, data.truth[i].lat, 1, derive_seed(3, i));
    for (std::size_t t = 0; t < gen.size(); ++t, ++n) {
      err += (gen[t] - data.truth[i].values[t]) * (gen[t] - data.truth[i].values[t]);
      base += data.truth[i].values[t] * data.truth[i].values[t];
    }
  }
  EXPECT_LT(std::sqrt(err / n), 0.5 * std::sqrt(base / n));
}
