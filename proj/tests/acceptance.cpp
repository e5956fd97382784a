// Acceptance gate for the face pipeline. Runs ten independent criteria,
// prints exactly one PASS/FAIL line for each, and exits nonzero if any
// fail. Every criterion carries a wall-clock limit; blowing the limit is
// a failure even when the checks themselves hold.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <facepipe/facepipe.hpp>

namespace fp = facepipe;
namespace fs = std::filesystem;
using fp::json;

namespace {

struct Result {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

fp::FeatureVector fv(std::string label, std::vector<double> values) {
  fp::FeatureVector out;
  out.label = std::move(label);
  out.values = std::move(values);
  return out;
}

double dist(const fp::Point& a, const fp::Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// ---- 1: skin predicate ------------------------------------------------

// The reference rule, restated from its published definition rather than
// shared with the library header.
bool reference_skin(int r, int g, int b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const bool normal = r > 95 && g > 40 && b > 20 && (mx - mn) > 15 &&
                      std::abs(r - g) > 15 && r > g && r > b;
  const bool flash = r > 220 && g > 210 && b > 170 && std::abs(r - g) <= 15 && r > b && g > b;
  return normal || flash;
}

Result criterion_skin() {
  Result res;
  fp::Rng rng(fp::mix_seed(1001, 0));
  for (int i = 0; i < 100000 && res.ok; ++i) {
    const int r = static_cast<int>(rng.next_below(256));
    const int g = static_cast<int>(rng.next_below(256));
    const int b = static_cast<int>(rng.next_below(256));
    res.expect(fp::is_skin(r, g, b) == reference_skin(r, g, b),
               "disagrees with the reference rule at rgb(" + std::to_string(r) + "," +
                   std::to_string(g) + "," + std::to_string(b) + ")");
  }
  const struct {
    int r, g, b;
    bool want;
  } hand[] = {{150, 80, 60, true}, {230, 220, 180, true}, {0, 0, 0, false}, {100, 90, 80, false}};
  for (const auto& h : hand)
    res.expect(fp::is_skin(h.r, h.g, h.b) == h.want,
               "hand example rgb(" + std::to_string(h.r) + "," + std::to_string(h.g) + "," +
                   std::to_string(h.b) + ") misclassified");
  return res;
}

// ---- 2: connected components ----------------------------------------

std::vector<int> flood_partition(const fp::BinaryMask& m, int conn) {
  std::vector<int> lab(m.bits.size(), -1);
  static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * m.width + x;
      if (!m.bits[idx] || lab[idx] >= 0) continue;
      lab[idx] = next;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int d = 0; d < conn; ++d) {
          const int nx = cx + dx[d], ny = cy + dy[d];
          if (nx < 0 || nx >= m.width || ny < 0 || ny >= m.height) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * m.width + nx;
          if (!m.bits[nidx] || lab[nidx] >= 0) continue;
          lab[nidx] = next;
          stack.push_back({nx, ny});
        }
      }
      ++next;
    }
  }
  return lab;
}

// Relabel by scan-order first appearance so any two labelings of the same
// partition compare equal. Negative entries mean background.
std::vector<int> canonical(const std::vector<int>& raw) {
  std::map<int, int> seen;
  std::vector<int> out(raw.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) continue;
    const auto [it, fresh] = seen.emplace(raw[i], next);
    if (fresh) ++next;
    out[i] = it->second;
  }
  return out;
}

Result criterion_components() {
  Result res;
  fp::Rng rng(fp::mix_seed(1002, 0));
  for (int trial = 0; trial < 500 && res.ok; ++trial) {
    fp::BinaryMask mask(32, 32);
    const double density = 0.25 + 0.5 * rng.next_double();
    for (auto& b : mask.bits) b = (rng.next_double() < density) ? 1 : 0;
    for (int conn : {4, 8}) {
      const auto [map, regions] = fp::label_components(mask, conn);
      std::vector<int> lib(map.labels.size(), -1);
      for (std::size_t i = 0; i < map.labels.size(); ++i)
        lib[i] = mask.bits[i] ? map.labels[i] : -1;
      const std::vector<int> want = canonical(flood_partition(mask, conn));
      const std::vector<int> got = canonical(lib);
      res.expect(got == want, "partition differs from flood fill (trial " +
                                  std::to_string(trial) + ", connectivity " +
                                  std::to_string(conn) + ")");
      int distinct = 0;
      for (int v : want) distinct = std::max(distinct, v + 1);
      res.expect(regions.size() == static_cast<std::size_t>(distinct),
                 "region count differs from flood fill (trial " + std::to_string(trial) + ")");
    }
  }
  return res;
}

// ---- 3: k-means -------------------------------------------------------

double recompute_ss(const fp::WeightedPoints& data, const fp::Clustering& c) {
  double ss = 0.0;
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    const auto& ctr = c.centers[static_cast<std::size_t>(c.assignment[i])];
    double d2 = 0.0;
    for (std::size_t b = 0; b < ctr.size(); ++b) {
      const double d = data.points[i][b] - ctr[b];
      d2 += d * d;
    }
    ss += data.weights[i] * d2;
  }
  return ss;
}

Result criterion_kmeans() {
  Result res;

  // (a) + (b): descent and metric definitions on random weighted sets
  fp::Rng rng(fp::mix_seed(1003, 0));
  for (int trial = 0; trial < 200 && res.ok; ++trial) {
    const std::size_t n = 4 + rng.next_below(47);
    const std::size_t d = 1 + rng.next_below(3);
    fp::WeightedPoints data;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(d);
      for (double& v : p) v = rng.next_range(-10.0, 10.0);
      data.points.push_back(std::move(p));
      data.weights.push_back(rng.next_range(0.5, 3.0));
    }
    const int k = 1 + static_cast<int>(rng.next_below(std::min<std::uint64_t>(6, n)));
    std::vector<std::vector<double>> init;
    for (int j = 0; j < k; ++j)
      init.push_back(data.points[rng.next_below(n)]);
    const fp::Clustering c = fp::kmeans(data, init);

    for (std::size_t t = 1; t < c.ss_history.size(); ++t)
      res.expect(c.ss_history[t] <= c.ss_history[t - 1] * (1.0 + 1e-12) + 1e-9,
                 "objective increased between iterations (trial " + std::to_string(trial) + ")");

    const double ss = recompute_ss(data, c);
    res.expect(std::abs(ss - c.ss_distances) <= 1e-9 * std::max(1.0, ss),
               "reported ss differs from its definition (trial " + std::to_string(trial) + ")");
    double total_w = 0.0;
    for (double w : data.weights) total_w += w;
    const double dof = total_w - static_cast<double>(c.k);
    if (dof > 0.0) {
      const double mse = ss / (dof * static_cast<double>(d));
      res.expect(!c.mse_undefined && std::abs(mse - c.mse) <= 1e-9 * std::max(1.0, mse),
                 "reported mse differs from its definition (trial " + std::to_string(trial) + ")");
    } else {
      res.expect(c.mse_undefined, "mse must be flagged undefined when dof <= 0");
    }
  }

  // (c): frozen four-point instance
  fp::WeightedPoints four;
  for (double v : {1.0, 2.0, 9.0, 10.0}) {
    four.points.push_back({v});
    four.weights.push_back(1.0);
  }
  const fp::Clustering c = fp::kmeans(four, {{1.0}, {10.0}});
  res.expect(c.k == 2, "four-point instance: expected two clusters");
  res.expect(std::abs(c.centers[0][0] - 1.5) <= 1e-12 && std::abs(c.centers[1][0] - 9.5) <= 1e-12,
             "four-point instance: centers are not {1.5, 9.5}");
  res.expect(std::abs(c.ss_distances - 1.0) <= 1e-12, "four-point instance: ss is not 1.0");
  res.expect(std::abs(c.mse - 0.5) <= 1e-12, "four-point instance: mse is not 0.5");
  res.expect((c.assignment == std::vector<int>{0, 0, 1, 1}),
             "four-point instance: wrong assignment");

  // (d): histogram weighting equals exploded per-pixel clustering
  fp::Rng img_rng(fp::mix_seed(1003, 1));
  for (int trial = 0; trial < 20 && res.ok; ++trial) {
    fp::GrayImage img(12, 9);
    for (double& p : img.pixels) p = static_cast<double>(img_rng.next_below(8) * 36);
    std::vector<std::vector<double>> init;
    for (double c : fp::histogram_init(img, 3).centers) init.push_back({c});

    std::array<double, 256> counts{};
    for (double p : img.pixels) counts[static_cast<std::size_t>(p)] += 1.0;
    fp::WeightedPoints hist;
    for (int v = 0; v < 256; ++v)
      if (counts[static_cast<std::size_t>(v)] > 0.0) {
        hist.points.push_back({static_cast<double>(v)});
        hist.weights.push_back(counts[static_cast<std::size_t>(v)]);
      }
    fp::WeightedPoints exploded;
    for (double p : img.pixels) {
      exploded.points.push_back({p});
      exploded.weights.push_back(1.0);
    }

    const fp::Clustering a = fp::kmeans(hist, init);
    const fp::Clustering b = fp::kmeans(exploded, init);
    res.expect(a.k == b.k, "weighted and exploded runs split differently (trial " +
                               std::to_string(trial) + ")");
    for (int j = 0; res.ok && j < a.k; ++j)
      res.expect(std::abs(a.centers[static_cast<std::size_t>(j)][0] -
                          b.centers[static_cast<std::size_t>(j)][0]) <= 1e-6,
                 "weighted and exploded centers differ past 1e-6 (trial " +
                     std::to_string(trial) + ")");
    res.expect(std::abs(a.ss_distances - b.ss_distances) <=
                   1e-6 * std::max(1.0, a.ss_distances),
               "weighted and exploded ss differ past 1e-6 (trial " + std::to_string(trial) + ")");
  }
  return res;
}

// ---- 4: distinct clustering ------------------------------------------

Result criterion_distinct() {
  Result res;

  fp::WeightedPoints four;
  for (double v : {1.0, 2.0, 9.0, 10.0}) {
    four.points.push_back({v});
    four.weights.push_back(1.0);
  }
  const fp::DistinctKmeansResult km = fp::distinct_kmeans(four, 1, 2, 2, 99);
  res.expect(km.best.k == 2, "four-point scan: did not choose two clusters");
  res.expect(std::abs(km.best.mse - 0.5) <= 1e-12, "four-point scan: best mse is not 0.5");
  for (const fp::KmeansRunRecord& r : km.runs)
    if (r.k_requested == 1)
      res.expect(std::abs(r.mse - 65.0 / 3.0) <= 1e-9,
                 "four-point scan: single-cluster mse is not 65/3");
  res.expect(km.runs[km.best_run].k_requested == 2,
             "four-point scan: winning run was not a k=2 run");

  // the reported winner must be the argmin of the run log it returned
  const auto better = [](const fp::KmeansRunRecord& a, const fp::KmeansRunRecord& b) {
    if (a.mse_undefined != b.mse_undefined) return !a.mse_undefined;
    if (a.mse != b.mse) return a.mse < b.mse;
    if (a.k != b.k) return a.k < b.k;
    return a.ss < b.ss;
  };
  fp::Rng rng(fp::mix_seed(1004, 0));
  for (int trial = 0; trial < 100 && res.ok; ++trial) {
    const std::size_t n = 5 + rng.next_below(36);
    fp::WeightedPoints data;
    for (std::size_t i = 0; i < n; ++i) {
      data.points.push_back({rng.next_range(0.0, 100.0)});
      data.weights.push_back(1.0);
    }
    const int k_max = 1 + static_cast<int>(rng.next_below(std::min<std::uint64_t>(5, n)));
    const fp::DistinctKmeansResult r = fp::distinct_kmeans(data, 1, k_max, 3, fp::mix_seed(1004, 1 + trial));
    std::size_t want = 0;
    for (std::size_t i = 1; i < r.runs.size(); ++i)
      if (better(r.runs[i], r.runs[want])) want = i;
    res.expect(r.best_run == want,
               "reported winner is not the argmin of the run log (trial " +
                   std::to_string(trial) + ")");
    const fp::KmeansRunRecord& w = r.runs[r.best_run];
    res.expect(r.best.k == w.k && r.best.ss_distances == w.ss && r.best.mse == w.mse,
               "winning record disagrees with the returned clustering (trial " +
                   std::to_string(trial) + ")");
  }
  return res;
}

// ---- 5: DCT -----------------------------------------------------------

Result criterion_dct() {
  Result res;

  const fp::CoefficientBlock id2 = fp::dct2({1.0, 0.0, 0.0, 1.0}, 2);
  const double want2[4] = {1.0, 0.0, 0.0, 1.0};
  for (int i = 0; i < 4; ++i)
    res.expect(std::abs(id2.coeffs[static_cast<std::size_t>(i)] - want2[i]) <= 1e-12,
               "2x2 identity block is not a fixed point");

  fp::Rng rng(fp::mix_seed(1005, 0));
  const auto roundtrip = [&](int n, int trial) {
    std::vector<double> block(static_cast<std::size_t>(n) * n);
    for (double& v : block) v = rng.next_range(-128.0, 128.0);
    const fp::CoefficientBlock coeffs = fp::dct2(block, n);
    const std::vector<double> back = fp::idct2(coeffs);
    double max_err = 0.0, e_spatial = 0.0, e_freq = 0.0;
    for (std::size_t i = 0; i < block.size(); ++i) {
      max_err = std::max(max_err, std::abs(back[i] - block[i]));
      e_spatial += block[i] * block[i];
      e_freq += coeffs.coeffs[i] * coeffs.coeffs[i];
    }
    res.expect(max_err <= 1e-9, "inverse transform error above 1e-9 (n=" + std::to_string(n) +
                                    ", trial " + std::to_string(trial) + ")");
    res.expect(std::abs(e_spatial - e_freq) <= 1e-6 * std::max(1.0, e_spatial),
               "transform does not preserve energy (n=" + std::to_string(n) + ", trial " +
                   std::to_string(trial) + ")");
  };
  for (int t = 0; t < 100 && res.ok; ++t) roundtrip(8, t);
  for (int t = 0; t < 10 && res.ok; ++t) roundtrip(64, t);
  return res;
}

// ---- 6: RBF -----------------------------------------------------------

Result criterion_rbf() {
  Result res;

  const fp::RbfUnit unit{{0.0}, 1.0};
  res.expect(std::abs(fp::rbf_response({0.0}, unit) - 1.0) <= 1e-12,
             "unit response at its center is not 1");
  res.expect(std::abs(fp::rbf_response({1.0}, unit) - std::exp(-1.0)) <= 1e-12,
             "unit response at distance 1 is not exp(-1)");
  res.expect(std::abs(fp::rbf_response({2.0}, unit) - std::exp(-4.0)) <= 1e-12,
             "unit response at distance 2 is not exp(-4)");

  std::vector<fp::FeatureVector> train;
  fp::Rng rng(fp::mix_seed(1006, 0));
  for (int i = 0; i < 40; ++i) {
    const double jx = rng.next_range(-1.0, 1.0), jy = rng.next_range(-1.0, 1.0);
    if (i % 2 == 0)
      train.push_back(fv("low", {jx, jy}));
    else
      train.push_back(fv("high", {8.0 + jx, 8.0 + jy}));
  }
  const fp::RbfNetwork net = fp::train_rbf(train, 4, 7);
  for (const fp::FeatureVector& f : train)
    res.expect(fp::classify(net, f).label == f.label, "separable blobs not fully recalled");

  // The stored weights must satisfy the ridge normal equations that
  // training claims to solve.
  const std::size_t n = train.size();
  const std::size_t m = net.units.size() + 1;
  const std::size_t classes = net.class_labels.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(m, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j + 1 < m; ++j)
      a[i][j] = fp::rbf_response(train[i].values, net.units[j]);
  std::vector<std::vector<double>> g(m, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> b(m, std::vector<double>(classes, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cls = 0;
    while (net.class_labels[cls] != train[i].label) ++cls;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c2 = 0; c2 < m; ++c2) g[r][c2] += a[i][r] * a[i][c2];
      b[r][cls] += a[i][r];
    }
  }
  for (std::size_t r = 0; r < m; ++r) g[r][r] += fp::kRbfRidgeLambda;
  double residual = 0.0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t cls = 0; cls < classes; ++cls) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < m; ++j) lhs += g[r][j] * net.output_weights[cls][j];
      residual = std::max(residual, std::abs(lhs - b[r][cls]));
    }
  res.expect(residual < 1e-6,
             "normal-equation residual " + num(residual) + " is not below 1e-6");
  return res;
}

// ---- 7: basin tree ------------------------------------------------------

Result criterion_tree() {
  Result res;

  // one class collapses to a single pure leaf
  std::vector<fp::FeatureVector> mono;
  fp::Rng rng(fp::mix_seed(1007, 0));
  for (int i = 0; i < 10; ++i)
    mono.push_back(fv("only", {rng.next_range(0.0, 1.0), rng.next_range(0.0, 1.0)}));
  const fp::FmacaTree single = fp::build_tree(mono, 4, 3);
  const fp::TreeStats mono_stats = fp::tree_stats(single);
  res.expect(mono_stats.node_count == 1 && mono_stats.leaf_count == 1 &&
                 mono_stats.impure_leaves == 0,
             "single-class data must give one pure leaf");
  res.expect(fp::predict(single, mono[0]).label == "only", "single leaf predicts its class");

  // two well-separated classes split once, cleanly
  std::vector<fp::FeatureVector> pair_set;
  for (int i = 0; i < 10; ++i) {
    pair_set.push_back(fv("low", {rng.next_range(-0.5, 0.5), rng.next_range(-0.5, 0.5)}));
    pair_set.push_back(fv("high", {100.0 + rng.next_range(-0.5, 0.5),
                                   100.0 + rng.next_range(-0.5, 0.5)}));
  }
  const fp::FmacaTree two = fp::build_tree(pair_set, 2, 4);
  const fp::TreeStats two_stats = fp::tree_stats(two);
  res.expect(two_stats.depth == 1 && two_stats.leaf_count == 2 && two_stats.impure_leaves == 0,
             "two separated classes must split once into pure leaves");
  for (double p : two_stats.leaf_purities)
    res.expect(p == 1.0, "two separated classes: a leaf is impure");
  for (const fp::FeatureVector& f : pair_set)
    res.expect(fp::predict(two, f).label == f.label, "two separated classes: wrong prediction");

  // whenever every leaf is pure, training points route to their own label
  int pure_sets = 0;
  for (int trial = 0; trial < 50; ++trial) {
    fp::Rng trng(fp::mix_seed(1007, 100 + trial));
    const int classes = 2 + static_cast<int>(trng.next_below(3));
    const std::size_t dim = 1 + trng.next_below(3);
    std::vector<fp::FeatureVector> data;
    for (int c = 0; c < classes; ++c) {
      const int per = 3 + static_cast<int>(trng.next_below(8));
      for (int j = 0; j < per; ++j) {
        std::vector<double> v(dim);
        for (double& x : v) x = 50.0 * c + trng.next_range(-0.5, 0.5);
        data.push_back(fv("c" + std::to_string(c), std::move(v)));
      }
    }
    const int basins = 2 + static_cast<int>(trng.next_below(3));
    const fp::FmacaTree tree = fp::build_tree(data, basins, fp::mix_seed(1007, 200 + trial));
    const fp::TreeStats stats = fp::tree_stats(tree);
    if (stats.impure_leaves > 0) continue;
    ++pure_sets;
    for (const fp::FeatureVector& f : data)
      res.expect(fp::predict(tree, f).label == f.label,
                 "pure tree misroutes a training point (trial " + std::to_string(trial) + ")");
  }
  res.expect(pure_sets >= 40, "too few all-pure trees (" + std::to_string(pure_sets) +
                                  " of 50) for the routing check to mean anything");

  // duplicated features with conflicting labels must terminate in a
  // majority leaf instead of recursing forever
  const std::vector<fp::FeatureVector> dup = {fv("a", {5.0}), fv("b", {5.0}), fv("a", {5.0}),
                                              fv("b", {5.0}), fv("a", {6.0})};
  const fp::FmacaTree dup_tree = fp::build_tree(dup, 2, 1, 8);
  const fp::TreePrediction p = fp::predict(dup_tree, std::vector<double>{5.0});
  res.expect(p.label == "a" && std::abs(p.leaf_purity - 0.5) <= 1e-12 &&
                 p.leaf_training_count == 4,
             "conflicting duplicates: expected a majority leaf over the four stacked points");

  const std::vector<fp::FeatureVector> flat = {fv("b", {5.0}), fv("a", {5.0}), fv("b", {5.0})};
  const fp::FmacaTree flat_tree = fp::build_tree(flat, 3, 2);
  res.expect(fp::tree_stats(flat_tree).node_count == 1,
             "fully duplicated data must collapse to the root leaf");
  res.expect(fp::predict(flat_tree, std::vector<double>{5.0}).label == "b",
             "fully duplicated data: majority label is b");
  return res;
}

// ---- 8: end-to-end detection -------------------------------------------

Result criterion_end_to_end() {
  Result res;
  fp::PipelineConfig cfg;
  cfg.dct_k = 8;

  int successes = 0, explained = 0;
  for (int i = 0; i < 100; ++i) {
    fp::Rng rng(fp::mix_seed(1008, static_cast<std::uint64_t>(i)));
    fp::FaceFixtureSpec spec;
    const double s = rng.next_range(0.85, 1.15);
    const double stretch = rng.next_range(0.94, 1.06);
    spec.axis_x = 31.0 * s;
    spec.axis_y = 50.0 * s * stretch;
    spec.eye_offset_x = 14.0 * s;
    spec.eye_offset_y = 13.0 * s;
    spec.eye_radius = 3.5 * s;
    spec.nose_offset_y = 8.0 * s;
    spec.nose_radius = 3.0 * s;
    spec.mouth_offset_y = 22.0 * s;
    spec.mouth_radius_x = 8.0 * s;
    spec.mouth_radius_y = 4.0 * s;
    spec.face_cx = rng.next_range(75.0, 125.0);
    spec.face_cy = rng.next_range(85.0, 115.0);
    spec.rotation = rng.next_range(-0.4, 0.4);

    const fp::RenderedFixture rendered = fp::render_fixture(spec);
    const std::vector<fp::Detection> dets = fp::detect_still(rendered.image, cfg);
    res.expect(dets.size() == 1,
               "fixture " + std::to_string(i) + ": expected exactly one detection, got " +
                   std::to_string(dets.size()));
    if (dets.size() != 1) continue;
    const fp::Detection& d = dets[0];

    const bool reached_features = d.failed_stage == fp::FeatureFailure::none ||
                                  d.failed_stage == fp::FeatureFailure::nose ||
                                  d.failed_stage == fp::FeatureFailure::mouth;
    res.expect(reached_features, "fixture " + std::to_string(i) + ": failed at stage " +
                                     fp::to_string(d.failed_stage));
    if (!reached_features) continue;

    res.expect(d.eyes_frame.has_value(),
               "fixture " + std::to_string(i) + ": eyes missing despite reaching the eye stage");
    if (d.eyes_frame) {
      res.expect(dist(d.eyes_frame->left, rendered.truth.eye_left) <= 2.0 &&
                     dist(d.eyes_frame->right, rendered.truth.eye_right) <= 2.0,
                 "fixture " + std::to_string(i) + ": eye position error above 2 px");
    }

    if (d.failed_stage == fp::FeatureFailure::none) {
      ++successes;
      res.expect(d.nose_frame.has_value() && d.mouth_frame.has_value() && d.geometry.has_value(),
                 "fixture " + std::to_string(i) + ": success without nose, mouth and geometry");
      if (d.geometry)
        res.expect(std::abs(d.geometry->rotation_applied + spec.rotation) <= 0.05,
                   "fixture " + std::to_string(i) + ": recovered rotation off by more than 0.05");
    } else {
      ++explained;  // recorded nose or mouth stage accounts for the miss
    }
  }
  res.expect(successes >= 95, "only " + std::to_string(successes) +
                                  " of 100 fixtures fully recovered (need 95)");
  res.expect(successes + explained == 100, "some fixtures failed without a recorded stage");
  return res;
}

// ---- 9: motion gating ----------------------------------------------------

Result criterion_gating() {
  Result res;
  fp::PipelineConfig cfg;
  cfg.dct_k = 8;
  cfg.gating.enabled = true;

  const auto render_frames = [](int count, double dx) {
    std::vector<fp::RgbImage> frames;
    for (auto& r : fp::render_sequence(fp::FaceFixtureSpec{}, count, dx, 0.0))
      frames.push_back(std::move(r.image));
    return frames;
  };

  // a moving face stays detected on every frame, gated or not
  const std::vector<fp::RgbImage> moving = render_frames(6, 3.0);
  const auto tracked = fp::detect_video(moving, cfg);
  for (std::size_t t = 0; t < tracked.size(); ++t) {
    int hits = 0;
    for (const fp::Detection& d : tracked[t]) {
      if (d.failed_stage != fp::FeatureFailure::none) continue;
      ++hits;
      res.expect(std::abs(d.face_bbox.centroid_x - (100.0 + 3.0 * static_cast<double>(t))) <= 3.0,
                 "moving sequence: detection off target at frame " + std::to_string(t));
    }
    res.expect(hits >= 1, "moving sequence: no detection at frame " + std::to_string(t));
  }

  // a static face is suppressed after the ungated first frame
  const std::vector<fp::RgbImage> still_frames = render_frames(4, 0.0);
  const auto suppressed = fp::detect_video(still_frames, cfg);
  res.expect(!suppressed[0].empty(), "static sequence: first frame must detect normally");
  for (std::size_t t = 1; t < suppressed.size(); ++t)
    res.expect(suppressed[t].empty(),
               "static sequence: frame " + std::to_string(t) + " was not suppressed");

  // gating off must reproduce the per-frame still results exactly
  fp::PipelineConfig off = cfg;
  off.gating.enabled = false;
  const auto ungated = fp::detect_video(moving, off);
  for (std::size_t t = 0; t < moving.size(); ++t) {
    const std::vector<fp::Detection> stills = fp::detect_still(moving[t], off);
    res.expect(ungated[t].size() == stills.size(),
               "ungated video and stills disagree on count at frame " + std::to_string(t));
    if (ungated[t].size() != stills.size()) continue;
    for (std::size_t j = 0; j < stills.size(); ++j) {
      json a = json(ungated[t][j]);
      a["frame"] = 0;
      res.expect(a == json(stills[j]),
                 "ungated video differs from the still run at frame " + std::to_string(t));
    }
  }
  return res;
}

// ---- 10: determinism and persistence -----------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string cli_binary() {
#ifdef FACEPIPE_CLI_PATH
  return FACEPIPE_CLI_PATH;
#else
  const char* p = std::getenv("FACEPIPE_CLI_PATH");
  return p ? p : "";
#endif
}

Result criterion_persistence() {
  Result res;

  const std::string bin = cli_binary();
  res.expect(!bin.empty(), "path to the CLI binary is not configured");
  if (bin.empty()) return res;

  const fs::path dir = fs::temp_directory_path() / "facepipe_acceptance";
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);

  const fs::path input = dir / "face.ppm";
  fp::FaceFixtureSpec spec;
  spec.rotation = 0.2;
  fp::save_ppm(fp::render_fixture(spec).image, input.string(), fp::PpmFormat::P6);

  const auto invoke = [&](const std::string& tag) {
    const std::string cmd = "\"" + bin + "\" detect \"" + input.string() +
                            "\" --seed 5 --dct-k 8 --emit-features --out-json \"" +
                            (dir / (tag + ".json")).string() + "\" --out-annotated \"" +
                            (dir / (tag + ".ppm")).string() + "\" > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  res.expect(invoke("a") && invoke("b"), "CLI detect run failed");
  if (res.ok) {
    const std::string ja = slurp(dir / "a.json");
    res.expect(!ja.empty() && ja == slurp(dir / "b.json"),
               "repeated runs wrote different JSON bytes");
    const std::string pa = slurp(dir / "a.ppm");
    res.expect(!pa.empty() && pa == slurp(dir / "b.ppm"),
               "repeated runs wrote different image bytes");
  }

  // model round trip: stored and reloaded classifiers answer identically
  std::vector<fp::FeatureVector> train;
  fp::Rng rng(fp::mix_seed(1010, 0));
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 20; ++i) {
      std::vector<double> v(3);
      for (double& x : v) x = 40.0 * c + rng.next_range(-1.0, 1.0);
      train.push_back(fv("c" + std::to_string(c), std::move(v)));
    }

  fp::ModelFile rbf_model;
  rbf_model.kind = "rbf";
  rbf_model.seed = 21;
  rbf_model.training_count = train.size();
  rbf_model.dimension = 3;
  rbf_model.rbf = fp::train_rbf(train, 6, 21);
  const fs::path rbf_path = dir / "rbf.json";
  fp::write_json_atomic(rbf_path, json(rbf_model));
  const fp::ModelFile rbf_back = fp::load_json(rbf_path).get<fp::ModelFile>();

  fp::ModelFile tree_model;
  tree_model.kind = "fmaca";
  tree_model.seed = 21;
  tree_model.training_count = train.size();
  tree_model.dimension = 3;
  tree_model.fmaca = fp::build_tree(train, 4, 21);
  const fs::path tree_path = dir / "tree.json";
  fp::write_json_atomic(tree_path, json(tree_model));
  const fp::ModelFile tree_back = fp::load_json(tree_path).get<fp::ModelFile>();

  for (int i = 0; i < 1000 && res.ok; ++i) {
    std::vector<double> x(3);
    for (double& v : x) v = rng.next_range(-10.0, 100.0);
    const fp::ClassifyResult ra = fp::classify(*rbf_model.rbf, x);
    const fp::ClassifyResult rb = fp::classify(*rbf_back.rbf, x);
    res.expect(ra.label == rb.label && ra.scores == rb.scores,
               "reloaded rbf model answers differently (vector " + std::to_string(i) + ")");
    const fp::TreePrediction ta = fp::predict(*tree_model.fmaca, x);
    const fp::TreePrediction tb = fp::predict(*tree_back.fmaca, x);
    res.expect(ta.label == tb.label && ta.leaf_purity == tb.leaf_purity &&
                   ta.leaf_training_count == tb.leaf_training_count,
               "reloaded tree model answers differently (vector " + std::to_string(i) + ")");
  }

  fs::remove_all(dir, ec);
  return res;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double limit_seconds;
    Result (*fn)();
  };
  const Entry entries[] = {
      {1, "skin predicate matches the reference rule", 1.0, criterion_skin},
      {2, "component labeling equals flood fill", 5.0, criterion_components},
      {3, "k-means descends and reports honest metrics", 10.0, criterion_kmeans},
      {4, "cluster-count scan returns its own best run", 5.0, criterion_distinct},
      {5, "DCT inverts and preserves energy", 5.0, criterion_dct},
      {6, "RBF responses, recall and normal equations", 2.0, criterion_rbf},
      {7, "basin tree stays pure and terminates", 5.0, criterion_tree},
      {8, "end-to-end detection on 100 rendered faces", 60.0, criterion_end_to_end},
      {9, "motion gating tracks, suppresses and switches off", 10.0, criterion_gating},
      {10, "byte-stable outputs and model persistence", 10.0, criterion_persistence},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = e.fn();
    } catch (const std::exception& ex) {
      r.ok = false;
      r.detail = std::string("unhandled exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.ok && secs > e.limit_seconds) {
      r.ok = false;
      r.detail = "exceeded the " + num(e.limit_seconds) + "s time limit";
    }
    std::printf("%s %2d  %-52s [%6.2fs / %gs]\n", r.ok ? "PASS" : "FAIL", e.id, e.name, secs,
                e.limit_seconds);
    if (!r.ok) {
      std::printf("         %s\n", r.detail.c_str());
      ++failures;
    }
  }
  if (failures == 0)
    std::printf("all %zu criteria passed\n", std::size(entries));
  else
    std::printf("%d of %zu criteria failed\n", failures, std::size(entries));
  return failures == 0 ? 0 : 1;
}
