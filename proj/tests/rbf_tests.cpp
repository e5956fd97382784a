#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <facepipe/rbf.hpp>

#include "test_support.hpp"

using namespace facepipe;
using Catch::Matchers::WithinAbs;

namespace {

FeatureVector fv(std::vector<double> values, std::string label) {
  FeatureVector f;
  f.values = std::move(values);
  f.label = std::move(label);
  return f;
}

std::vector<FeatureVector> two_blobs(int per_class, double spread, Rng& rng) {
  std::vector<FeatureVector> train;
  for (int i = 0; i < per_class; ++i) {
    train.push_back(fv({rng.next_range(-spread, spread), rng.next_range(-spread, spread)}, "neg"));
    train.push_back(
        fv({8.0 + rng.next_range(-spread, spread), 8.0 + rng.next_range(-spread, spread)}, "pos"));
  }
  return train;
}

}  // namespace

TEST_CASE("unit response anchors") {
  const RbfUnit unit{{0.0, 0.0}, 1.0};
  CHECK(rbf_response({0.0, 0.0}, unit) == 1.0);
  CHECK_THAT(rbf_response({1.0, 0.0}, unit), WithinAbs(std::exp(-1.0), 1e-12));
  CHECK_THAT(rbf_response({2.0, 0.0}, unit), WithinAbs(std::exp(-4.0), 1e-12));
  CHECK_THAT(rbf_response({0.6, 0.8}, unit), WithinAbs(std::exp(-1.0), 1e-12));

  const RbfUnit wide{{0.0}, 2.0};
  CHECK_THAT(rbf_response({2.0}, wide), WithinAbs(std::exp(-1.0), 1e-12));

  CHECK_THROWS_AS(rbf_response({1.0}, unit), DataError);
}

TEST_CASE("radius heuristic: nearest other center") {
  const std::vector<FeatureVector> train{fv({0}, "a"),  fv({0}, "a"), fv({10}, "a"),
                                         fv({10}, "a"), fv({25}, "b"), fv({25}, "b")};
  const RbfNetwork net = train_rbf(train, 3, 11);
  REQUIRE(net.units.size() == 3);
  std::vector<std::pair<double, double>> got;  // (center, radius)
  for (const RbfUnit& u : net.units) got.push_back({u.center[0], u.radius});
  std::sort(got.begin(), got.end());
  CHECK(got[0].first == 0.0);
  CHECK(got[1].first == 10.0);
  CHECK(got[2].first == 25.0);
  CHECK(got[0].second == 10.0);
  CHECK(got[1].second == 10.0);
  CHECK(got[2].second == 15.0);
}

TEST_CASE("single unit uses the mean point distance as its radius") {
  const std::vector<FeatureVector> train{fv({0}, "a"), fv({4}, "b")};
  const RbfNetwork net = train_rbf(train, 1, 3);
  REQUIRE(net.units.size() == 1);
  CHECK(net.units[0].center[0] == 2.0);
  CHECK(net.units[0].radius == 2.0);
}

TEST_CASE("two separated blobs train to perfect recall") {
  Rng rng(606);
  const std::vector<FeatureVector> train = two_blobs(20, 0.5, rng);
  const RbfNetwork net = train_rbf(train, 2, 7);
  REQUIRE(net.class_labels == std::vector<std::string>{"neg", "pos"});
  for (const FeatureVector& f : train) {
    const ClassifyResult res = classify(net, f);
    REQUIRE(res.label == f.label);
    REQUIRE(res.scores.size() == 2);
  }
  // held-out probes near each blob center
  CHECK(classify(net, {0.2, -0.1}).label == "neg");
  CHECK(classify(net, {7.9, 8.3}).label == "pos");
}

TEST_CASE("training is deterministic for a fixed seed") {
  Rng rng(607);
  const std::vector<FeatureVector> train = two_blobs(10, 0.5, rng);
  const RbfNetwork a = train_rbf(train, 3, 42);
  const RbfNetwork b = train_rbf(train, 3, 42);
  REQUIRE(a.units.size() == b.units.size());
  for (std::size_t i = 0; i < a.units.size(); ++i) {
    CHECK(a.units[i].center == b.units[i].center);
    CHECK(a.units[i].radius == b.units[i].radius);
  }
  CHECK(a.output_weights == b.output_weights);
}

TEST_CASE("output weights satisfy the ridge normal equations") {
  Rng rng(608);
  const std::vector<FeatureVector> train = two_blobs(15, 0.8, rng);
  const RbfNetwork net = train_rbf(train, 2, 9);
  const std::size_t n = train.size();
  const std::size_t m = net.units.size() + 1;
  const std::size_t classes = net.class_labels.size();

  std::vector<std::vector<double>> a(n, std::vector<double>(m, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j + 1 < m; ++j) a[i][j] = rbf_response(train[i].values, net.units[j]);

  double max_residual = 0.0;
  for (std::size_t cls = 0; cls < classes; ++cls) {
    for (std::size_t r = 0; r < m; ++r) {
      // row r of (A^T A + lambda I) w_cls - A^T t_cls
      double lhs = kRbfRidgeLambda * net.output_weights[cls][r];
      double rhs = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j) dot += a[i][j] * net.output_weights[cls][j];
        lhs += a[i][r] * dot;
        if (train[i].label == net.class_labels[cls]) rhs += a[i][r];
      }
      max_residual = std::max(max_residual, std::fabs(lhs - rhs));
    }
  }
  CHECK(max_residual < 1e-6);
}

TEST_CASE("score ties resolve to the earlier label") {
  RbfNetwork net;
  net.units = {RbfUnit{{0.0}, 1.0}};
  net.class_labels = {"alpha", "beta"};
  net.output_weights = {{0.0, 0.5}, {0.0, 0.5}};  // identical scores from the bias
  const ClassifyResult res = classify(net, {3.0});
  CHECK(res.label == "alpha");
  CHECK(res.scores[0] == res.scores[1]);
}

TEST_CASE("feature-vector overload matches the raw overload") {
  Rng rng(609);
  const std::vector<FeatureVector> train = two_blobs(8, 0.5, rng);
  const RbfNetwork net = train_rbf(train, 2, 5);
  const FeatureVector probe = fv({7.5, 8.1}, "");
  CHECK(classify(net, probe).label == classify(net, probe.values).label);
}

TEST_CASE("training input validation") {
  CHECK_THROWS_AS(train_rbf({}, 1, 0), DataError);
  const std::vector<FeatureVector> ok{fv({0, 0}, "a"), fv({1, 1}, "b")};
  CHECK_THROWS_AS(train_rbf(ok, 0, 0), DataError);
  CHECK_THROWS_AS(train_rbf(ok, 3, 0), DataError);  // more units than points
  CHECK_THROWS_AS(train_rbf({fv({0, 0}, "a"), fv({1}, "b")}, 1, 0), DataError);
  CHECK_THROWS_AS(train_rbf({fv({0, 0}, "a"), fv({1, 1}, "")}, 1, 0), DataError);
  CHECK_THROWS_AS(train_rbf({fv({0, 0}, "a"), fv({1, 1}, "a")}, 1, 0), DataError);
  CHECK_THROWS_AS(train_rbf({fv({2, 2}, "a"), fv({2, 2}, "b")}, 1, 0), DataError);
}

TEST_CASE("classification input validation") {
  RbfNetwork empty;
  CHECK_THROWS_AS(classify(empty, {1.0}), DataError);
  const std::vector<FeatureVector> train{fv({0, 0}, "a"), fv({8, 8}, "b")};
  const RbfNetwork net = train_rbf(train, 2, 1);
  CHECK_THROWS_AS(classify(net, {1.0}), DataError);
  CHECK_THROWS_AS(classify(net, {1.0, 2.0, 3.0}), DataError);
}
