#include "helpers.hpp"
#include "surge/geo_cluster.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace surge;
using testutil::Gen;

namespace {

std::vector<GeoPoint> random_points(Gen& g, std::size_t n) {
  std::vector<GeoPoint> p(n);
  for (auto& x : p) x = {g.real(-97, -80), g.real(25, 31)};
  return p;
}

std::vector<std::string> ids_for(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("ST" + std::to_string(i));
  return ids;
}

void expect_valid_split(const std::vector<std::string>& ids, const ClusterAssignment& a, const SplitPlan& plan) {
  std::set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
  std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  ASSERT_EQ(train.size() + test.size(), ids.size());
  for (const auto& id : ids) ASSERT_NE(train.count(id) + test.count(id), 0u) << id;
  for (const auto& id : test) ASSERT_EQ(train.count(id), 0u) << id;
  ASSERT_EQ(test.size(), a.k);
  std::vector<std::size_t> per_cluster(a.k, 0);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (test.count(ids[i])) ++per_cluster[a.labels[i]];
  for (auto c : per_cluster) ASSERT_EQ(c, 1u);
}

}  // namespace

TEST(ChooseK, TenPercentRoundedDown) {
  EXPECT_EQ(choose_k(247), 24u);
  EXPECT_EQ(choose_k(250), 25u);
  EXPECT_EQ(choose_k(304), 30u);
  EXPECT_EQ(choose_k(100), 10u);
  EXPECT_EQ(choose_k(5), 1u);
}

TEST(KMeans, SeparatedCloudsSplitCleanly) {
  Gen g(40);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({g.real(-95, -94.5), g.real(29, 29.5)});
  for (int i = 0; i < 20; ++i) pts.push_back({g.real(-82, -81.5), g.real(26, 26.5)});
  const auto a = kmeans(pts, 2, 3);
  for (int i = 1; i < 20; ++i) EXPECT_EQ(a.labels[i], a.labels[0]);
  for (int i = 21; i < 40; ++i) EXPECT_EQ(a.labels[i], a.labels[20]);
  EXPECT_NE(a.labels[0], a.labels[20]);
}

TEST(KMeans, OneClusterPerPointHasZeroInertia) {
  Gen g(41);
  const auto pts = random_points(g, 12);
  const auto a = kmeans(pts, pts.size(), 5);
  EXPECT_EQ(inertia(pts, a), 0.0);
}

TEST(KMeans, NoWorseThanWorstRandomRestartAndStable) {
  Gen g(42);
  for (int k = 0; k < 20; ++k) {
    const auto pts = random_points(g, 30);
    std::vector<oracle::Pt> op;
    for (const auto& p : pts) op.push_back({p.lon, p.lat});
    const auto range = oracle::kmeans_restart_inertia(op, 4, 100, static_cast<std::uint64_t>(k));
    const auto a = kmeans(pts, 4, derive_seed(7, static_cast<std::uint64_t>(k)));
    EXPECT_LE(inertia(pts, a), range.worst + 1e-9) << "case " << k;
    EXPECT_EQ(kmeans(pts, 4, derive_seed(7, static_cast<std::uint64_t>(k))).labels, a.labels);
  }
}

TEST(KMeans, RejectsBadK) {
  const std::vector<GeoPoint> pts{{0, 0}, {0, 0}, {1, 1}};
  EXPECT_THROW(kmeans(pts, 0, 1), DataError);
  EXPECT_THROW(kmeans(pts, 3, 1), DataError);
}

TEST(Repair, MergesSingletonsUntilEveryClusterHasTwo) {
  Gen g(43);
  for (int k = 0; k < 100; ++k) {
    const auto n = g.size(2, 60);
    const auto pts = random_points(g, n);
    const auto kk = g.size(1, n);
    const auto a = kmeans(pts, kk, static_cast<std::uint64_t>(k));
    const std::size_t singles = [&] {
      std::size_t s = 0;
      for (auto c : a.sizes()) s += c == 1;
      return s;
    }();
    const auto r = repair_singletons(pts, a);
    for (auto c : r.sizes()) ASSERT_GE(c, 2u) << "case " << k;
    if (singles > 0) ASSERT_LT(r.k, a.k);
    else ASSERT_EQ(r.k, a.k);
    ASSERT_EQ(r.labels.size(), n);
  }
}

TEST(Repair, SingletonJoinsNearestCentroid) {
  const std::vector<GeoPoint> pts{{0, 0}, {0, 0.1}, {10, 0}, {10, 0.1}, {3, 0}};
  ClusterAssignment a{3, {{0, 0.05}, {10, 0.05}, {3, 0}}, {0, 0, 1, 1, 2}, 0};
  const auto r = repair_singletons(pts, a);
  EXPECT_EQ(r.k, 2u);
  EXPECT_EQ(r.labels[4], r.labels[0]);
  EXPECT_NEAR(r.centroids[r.labels[0]].lon, 1.0, 1e-12);
}

TEST(Split, InvariantsHoldForManySizes) {
  Gen g(44);
  for (int k = 0; k < 60; ++k) {
    const auto n = g.size(4, 200);
    const auto pts = random_points(g, n);
    const auto ids = ids_for(n);
    const auto a = repair_singletons(pts, kmeans(pts, choose_k(n), derive_seed(k, 11)));
    const auto plan = make_split(ids, a, derive_seed(k, 12));
    expect_valid_split(ids, a, plan);
    const auto again = make_split(ids, a, derive_seed(k, 12));
    ASSERT_EQ(again.test_ids, plan.test_ids);
  }
}

TEST(Split, SingletonClusterIsAnError) {
  const std::vector<std::string> ids{"A", "B", "C"};
  ClusterAssignment a{2, {{0, 0}, {1, 1}}, {0, 0, 1}, 0};
  try {
    make_split(ids, a, 1);
    FAIL();
  } catch (const StateError& e) {
    EXPECT_NE(std::string(e.what()).find("repair"), std::string::npos);
  }
}

TEST(Split, CsvRoundTrip) {
  SplitPlan p;
  p.train_ids = {"A", "C"};
  p.test_ids = {"B"};
  std::stringstream ss;
  write_split_csv(ss, p);
  const auto back = read_split_csv(ss);
  EXPECT_EQ(back.train_ids, p.train_ids);
  EXPECT_EQ(back.test_ids, p.test_ids);
  std::stringstream dup("station_id,role\nA,train\nA,test\n");
  EXPECT_THROW(read_split_csv(dup), FormatError);
}
