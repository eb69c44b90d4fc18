#include "helpers.hpp"
#include "surge/synth.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace surge;

TEST(Synth, NoiseFreeOffsetsReproduceField) {
  FieldSpec f;
  f.noise_ft = 0.0;
  const auto d = generate_dataset(f);
  ASSERT_EQ(d.stations.size(), 60u);
  for (std::size_t i = 0; i < d.stations.size(); ++i) {
    const auto o = compute_offsets(d.stations[i]);
    ASSERT_EQ(o.values.size(), 40u);
    for (std::size_t t = 0; t < 40; ++t) {
      ASSERT_NEAR(o.values[t], f.offset(o.lon, o.lat, t), 1e-9);
      ASSERT_EQ(d.truth[i].values[t], f.offset(o.lon, o.lat, t));
    }
  }
}

TEST(Synth, NoiseHasRequestedScale) {
  FieldSpec f;
  f.n_stations = 200;
  const auto d = generate_dataset(f);
  oracle::Vec resid;
  for (std::size_t i = 0; i < d.stations.size(); ++i) {
    const auto o = compute_offsets(d.stations[i]);
    for (std::size_t t = 0; t < o.values.size(); ++t) resid.push_back(o.values[t] - d.truth[i].values[t]);
  }
  EXPECT_NEAR(oracle::population_std(resid), 0.05, 0.005);
  EXPECT_NEAR(oracle::mean(resid), 0.0, 0.005);
}

TEST(Synth, InjectedOutliersAreFlagged) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    FieldSpec f;
    f.n_stations = 50;
    f.outlier_rate = 0.1;
    f.seed = seed;
    const auto d = generate_dataset(f);
    ASSERT_EQ(d.outlier_ids.size(), 5u);
    std::vector<OffsetSeries> off;
    for (const auto& s : d.stations) off.push_back(compute_offsets(s));
    const auto r = filter_outlier_stations(off);
    std::set<std::string> flagged, injected(d.outlier_ids.begin(), d.outlier_ids.end());
    for (const auto& x : r.removed) flagged.insert(x.station_id);
    EXPECT_EQ(flagged, injected) << "seed " << seed;
  }
}

TEST(Synth, SameSeedSameBytes) {
  auto render = [](std::uint64_t seed) {
    FieldSpec f;
    f.seed = seed;
    std::ostringstream a, b;
    const auto d = generate_dataset(f);
    write_station_csv(a, d.stations);
    write_offsets_csv(b, d.truth);
    return a.str() + b.str();
  };
  EXPECT_EQ(render(11), render(11));
  EXPECT_NE(render(11), render(12));
}

TEST(Synth, UniformLengthAndDistinctCoordinates) {
  FieldSpec f;
  f.T = 69;
  const auto d = generate_dataset(f);
  std::vector<OffsetSeries> off;
  std::set<std::pair<double, double>> coords;
  for (const auto& s : d.stations) {
    off.push_back(compute_offsets(s));
    coords.insert({s.lon, s.lat});
    EXPECT_GE(s.lon, f.lon_min);
    EXPECT_LE(s.lon, f.lon_max);
  }
  const auto sum = validate_dataset(off);
  EXPECT_EQ(sum.uniform_length.value(), 69u);
  EXPECT_EQ(sum.total_offsets, 60u * 69u);
  EXPECT_EQ(coords.size(), 60u);
}

TEST(Synth, FieldRespectsLipschitzBound) {
  FieldSpec f;
  const double L = f.lipschitz_normalized();
  testutil::Gen g(100);
  for (int k = 0; k < 2000; ++k) {
    const double x1 = g.real(0, 1), y1 = g.real(0, 1);
    const double x2 = x1 + g.real(-0.01, 0.01), y2 = y1 + g.real(-0.01, 0.01);
    const auto t = g.size(0, 39);
    auto at = [&](double x, double y) {
      return f.offset(f.lon_min + x * (f.lon_max - f.lon_min), f.lat_min + y * (f.lat_max - f.lat_min), t);
    };
    const double dist = std::abs(x2 - x1) + std::abs(y2 - y1);
    ASSERT_LE(std::abs(at(x2, y2) - at(x1, y1)), L * dist + 1e-12);
  }
}

TEST(Synth, InvalidSpecsRejected) {
  FieldSpec f;
  f.T = 2;
  EXPECT_THROW(generate_dataset(f), DataError);
  f = {};
  f.n_stations = 11;
  EXPECT_THROW(generate_dataset(f), DataError);
  f = {};
  f.lon_max = f.lon_min;
  EXPECT_THROW(generate_dataset(f), DataError);
  f = {};
  f.amplitude_ft = std::nan("");
  EXPECT_THROW(generate_dataset(f), DataError);
}
