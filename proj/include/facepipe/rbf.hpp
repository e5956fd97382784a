#ifndef FACEPIPE_RBF_HPP
#define FACEPIPE_RBF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "facepipe/clustering.hpp"
#include "facepipe/errors.hpp"
#include "facepipe/features.hpp"

namespace facepipe {

/// One Gaussian hidden unit: response exp(-|x - c|^2 / r^2). The scalar
/// form generalizes to vectors through the squared Euclidean norm.
struct RbfUnit {
  std::vector<double> center;
  double radius = 1.0;
};

/// Trained network: unsupervised hidden layer (k-means centers with a
/// nearest-neighbor radius heuristic) and a closed-form linear output
/// layer over unit activations plus a bias.
struct RbfNetwork {
  std::vector<RbfUnit> units;
  std::vector<std::vector<double>> output_weights;  // num_classes x (units + 1), bias last
  std::vector<std::string> class_labels;            // sorted, unique

  std::size_t input_dim() const { return units.empty() ? 0 : units.front().center.size(); }
};

inline double rbf_response(const std::vector<double>& x, const RbfUnit& unit) {
  if (x.size() != unit.center.size()) throw DataError("rbf_response: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - unit.center[i];
    d2 += d * d;
  }
  return std::exp(-d2 / (unit.radius * unit.radius));
}

namespace detail {

// Cholesky solve of the SPD system G X = B (G: m x m, B: m x c, row-major).
// The ridge term added by the caller keeps G positive definite.
inline std::vector<std::vector<double>> cholesky_solve(std::vector<std::vector<double>> g,
                                                       std::vector<std::vector<double>> b) {
  const std::size_t m = g.size();
  for (std::size_t j = 0; j < m; ++j) {
    double diag = g[j][j];
    for (std::size_t p = 0; p < j; ++p) diag -= g[j][p] * g[j][p];
    if (diag <= 0.0) throw DataError("rbf training: normal equations not positive definite");
    g[j][j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < m; ++i) {
      double v = g[i][j];
      for (std::size_t p = 0; p < j; ++p) v -= g[i][p] * g[j][p];
      g[i][j] = v / g[j][j];
    }
  }
  const std::size_t c = b.front().size();
  // forward substitution L y = b, then back substitution L^T x = y
  for (std::size_t col = 0; col < c; ++col) {
    for (std::size_t i = 0; i < m; ++i) {
      double v = b[i][col];
      for (std::size_t p = 0; p < i; ++p) v -= g[i][p] * b[p][col];
      b[i][col] = v / g[i][i];
    }
    for (std::size_t ii = m; ii-- > 0;) {
      double v = b[ii][col];
      for (std::size_t p = ii + 1; p < m; ++p) v -= g[p][ii] * b[p][col];
      b[ii][col] = v / g[ii][ii];
    }
  }
  return b;
}

}  // namespace detail

constexpr double kRbfRidgeLambda = 1e-6;
constexpr double kRbfMinRadius = 1e-6;

/// Train on labeled feature vectors. Hidden centers come from the
/// distinct-k-means scan with k pinned to num_units; each radius is the
/// distance to the nearest other center (mean point distance for a single
/// unit). Output weights solve the ridge-regularized least-squares mapping
/// of activations to one-hot class targets. Deterministic for a fixed seed.
inline RbfNetwork train_rbf(const std::vector<FeatureVector>& train, int num_units,
                            std::uint64_t seed) {
  if (train.empty()) throw DataError("train_rbf: empty training set");
  if (num_units < 1 || static_cast<std::size_t>(num_units) > train.size())
    throw DataError("train_rbf: num_units must be in [1, training count]");
  const std::size_t dim = train.front().values.size();
  std::set<std::string> label_set;
  for (const FeatureVector& fv : train) {
    if (fv.values.size() != dim) throw DataError("train_rbf: inconsistent feature dimensions");
    if (fv.label.empty()) throw DataError("train_rbf: unlabeled training vector");
    label_set.insert(fv.label);
  }
  if (label_set.size() < 2) throw DataError("train_rbf: need at least 2 classes");
  bool all_identical = true;
  for (std::size_t i = 1; i < train.size() && all_identical; ++i)
    all_identical = (train[i].values == train.front().values);
  if (all_identical)
    throw DataError("train_rbf: degenerate training set (all feature vectors identical)");

  WeightedPoints data;
  for (const FeatureVector& fv : train) data.points.push_back(fv.values);
  data.weights.assign(train.size(), 1.0);
  const DistinctKmeansResult km = distinct_kmeans(data, num_units, num_units, 4, seed);

  RbfNetwork net;
  net.class_labels.assign(label_set.begin(), label_set.end());
  for (const auto& center : km.best.centers) net.units.push_back({center, kRbfMinRadius});
  const std::size_t u = net.units.size();
  for (std::size_t i = 0; i < u; ++i) {
    double r;
    if (u == 1) {
      double sum = 0.0;
      for (const auto& p : data.points)
        sum += std::sqrt(detail::sq_dist(p, net.units[0].center));
      r = sum / static_cast<double>(data.points.size());
    } else {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < u; ++j) {
        if (j == i) continue;
        nearest = std::min(nearest, std::sqrt(detail::sq_dist(net.units[i].center, net.units[j].center)));
      }
      r = nearest;
    }
    net.units[i].radius = std::max(r, kRbfMinRadius);
  }

  // activations with a trailing bias column
  const std::size_t n = train.size();
  const std::size_t m = u + 1;
  std::vector<std::vector<double>> a(n, std::vector<double>(m, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < u; ++j) a[i][j] = rbf_response(train[i].values, net.units[j]);

  const std::size_t classes = net.class_labels.size();
  std::vector<std::vector<double>> g(m, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> b(m, std::vector<double>(classes, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = static_cast<std::size_t>(
        std::lower_bound(net.class_labels.begin(), net.class_labels.end(), train[i].label) -
        net.class_labels.begin());
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t cc = 0; cc < m; ++cc) g[r][cc] += a[i][r] * a[i][cc];
      b[r][cls] += a[i][r];
    }
  }
  for (std::size_t r = 0; r < m; ++r) g[r][r] += kRbfRidgeLambda;

  const auto w = detail::cholesky_solve(g, b);  // m x classes
  net.output_weights.assign(classes, std::vector<double>(m, 0.0));
  for (std::size_t cls = 0; cls < classes; ++cls)
    for (std::size_t j = 0; j < m; ++j) net.output_weights[cls][j] = w[j][cls];
  return net;
}

struct ClassifyResult {
  std::string label;
  std::vector<double> scores;  // aligned with class_labels
};

/// Linear readout over the unit activations; argmax wins, ties break
/// toward the earlier label.
inline ClassifyResult classify(const RbfNetwork& net, const std::vector<double>& x) {
  if (net.units.empty()) throw DataError("classify: network has no units");
  if (x.size() != net.input_dim()) throw DataError("classify: dimension mismatch");
  std::vector<double> act(net.units.size() + 1, 1.0);
  for (std::size_t j = 0; j < net.units.size(); ++j) act[j] = rbf_response(x, net.units[j]);
  ClassifyResult out;
  out.scores.resize(net.class_labels.size(), 0.0);
  std::size_t best = 0;
  for (std::size_t cls = 0; cls < net.class_labels.size(); ++cls) {
    double s = 0.0;
    for (std::size_t j = 0; j < act.size(); ++j) s += net.output_weights[cls][j] * act[j];
    out.scores[cls] = s;
    if (s > out.scores[best]) best = cls;
  }
  out.label = net.class_labels[best];
  return out;
}

inline ClassifyResult classify(const RbfNetwork& net, const FeatureVector& fv) {
  return classify(net, fv.values);
}

}  // namespace facepipe

#endif  // FACEPIPE_RBF_HPP
