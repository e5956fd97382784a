#ifndef FACEPIPE_CLUSTERING_HPP
#define FACEPIPE_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "facepipe/errors.hpp"
#include "facepipe/image.hpp"
#include "facepipe/regions.hpp"
#include "facepipe/rng.hpp"

namespace facepipe {

/// Weighted sample set for K-means. The number of spectral bands b equals
/// the point dimension; for intensity histograms the points are bin values
/// and the weights are bin counts.
struct WeightedPoints {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  std::size_t bands() const { return points.empty() ? 0 : points.front().size(); }

  void validate() const {
    if (points.empty()) throw DataError("WeightedPoints: empty point set");
    if (weights.size() != points.size())
      throw DataError("WeightedPoints: points/weights length mismatch");
    const std::size_t d = points.front().size();
    if (d == 0) throw DataError("WeightedPoints: zero-dimensional points");
    bool any_positive = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != d) throw DataError("WeightedPoints: ragged dimensions");
      for (double v : points[i])
        if (!std::isfinite(v)) throw DataError("WeightedPoints: non-finite coordinate");
      if (weights[i] < 0.0 || !std::isfinite(weights[i]))
        throw DataError("WeightedPoints: invalid weight");
      any_positive = any_positive || weights[i] > 0.0;
    }
    if (!any_positive) throw DataError("WeightedPoints: all weights zero");
  }

  static WeightedPoints unit_weighted(std::vector<std::vector<double>> pts) {
    WeightedPoints wp;
    wp.weights.assign(pts.size(), 1.0);
    wp.points = std::move(pts);
    return wp;
  }
};

/// Converged clustering with its quality metrics.
///
/// ss_distances is the weighted sum of squared distances of each point to
/// its assigned center; mse is ss_distances / ((N - c) * b) with N the total
/// weight, c the number of non-empty clusters, and b the band count. When
/// N - c <= 0 the mse is undefined and reported as +infinity with the flag
/// set; such runs lose every model-selection tie.
struct Clustering {
  int k = 0;
  std::vector<std::vector<double>> centers;
  std::vector<int> assignment;
  double ss_distances = 0.0;
  double mse = 0.0;
  bool mse_undefined = false;
  int iterations = 0;
  std::vector<double> ss_history;  // ss after each Lloyd iteration
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Nearest center index, ties resolved toward the lowest index.
inline int nearest_center(const std::vector<double>& x,
                          const std::vector<std::vector<double>>& centers) {
  int best = 0;
  double best_d = sq_dist(x, centers[0]);
  for (std::size_t j = 1; j < centers.size(); ++j) {
    const double d = sq_dist(x, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

inline double weighted_ss(const WeightedPoints& data,
                          const std::vector<std::vector<double>>& centers,
                          const std::vector<int>& assignment) {
  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    ss += data.weights[i] * sq_dist(data.points[i], centers[assignment[i]]);
  return ss;
}

}  // namespace detail

constexpr int kMaxLloydIterations = 300;

/// Lloyd iterations from the given initial centers: assign each point to its
/// nearest center, re-fit centers as weighted barycenters, stop when the
/// assignment is a fixed point (or after 300 iterations). A cluster left
/// empty by an assignment is re-seeded with the positive-weight point
/// farthest from its own center; unfixable empty clusters are dropped from
/// the result, so the returned k is the non-empty cluster count.
inline Clustering kmeans(const WeightedPoints& data,
                         std::vector<std::vector<double>> init) {
  data.validate();
  if (init.empty()) throw DataError("kmeans: empty initial center list");
  for (const auto& c : init)
    if (c.size() != data.bands()) throw DataError("kmeans: init center dimension mismatch");

  const std::size_t n = data.size();
  const int k0 = static_cast<int>(init.size());
  std::vector<std::vector<double>> centers = std::move(init);
  std::vector<int> assignment(n, 0);
  std::vector<int> prev_assignment;
  Clustering out;

  auto assign_all = [&]() {
    for (std::size_t i = 0; i < n; ++i)
      assignment[i] = detail::nearest_center(data.points[i], centers);
  };
  auto cluster_sizes = [&]() {
    std::vector<std::size_t> sizes(k0, 0);
    for (std::size_t i = 0; i < n; ++i) sizes[assignment[i]] += 1;
    return sizes;
  };

  for (int iter = 1; iter <= kMaxLloydIterations; ++iter) {
    out.iterations = iter;
    assign_all();

    // Re-seed empty clusters: lowest-index empty cluster takes the
    // positive-weight point farthest from its assigned center. A farthest
    // distance of zero means every point already coincides with its
    // center, so no re-seed can help and the empties are left to be
    // dropped at the end.
    for (int guard = 0; guard < k0; ++guard) {
      const auto sizes = cluster_sizes();
      int empty = -1;
      for (int j = 0; j < k0; ++j)
        if (sizes[j] == 0) {
          empty = j;
          break;
        }
      if (empty < 0) break;
      std::size_t far_idx = n;
      double far_d = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (data.weights[i] <= 0.0) continue;
        const double d = detail::sq_dist(data.points[i], centers[assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far_idx = i;
        }
      }
      if (far_idx == n || far_d == 0.0) break;
      centers[empty] = data.points[far_idx];
      assign_all();
    }

    // Weighted barycenters; clusters with zero total weight keep their
    // previous center.
    std::vector<std::vector<double>> sums(k0, std::vector<double>(data.bands(), 0.0));
    std::vector<double> totals(k0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = data.weights[i];
      totals[assignment[i]] += w;
      for (std::size_t dch = 0; dch < data.bands(); ++dch)
        sums[assignment[i]][dch] += w * data.points[i][dch];
    }
    for (int j = 0; j < k0; ++j) {
      if (totals[j] <= 0.0) continue;
      for (std::size_t dch = 0; dch < data.bands(); ++dch)
        centers[j][dch] = sums[j][dch] / totals[j];
    }

    out.ss_history.push_back(detail::weighted_ss(data, centers, assignment));
    if (!prev_assignment.empty() && assignment == prev_assignment) break;
    prev_assignment = assignment;
  }

  // If the iteration cap hit mid-move, restore the nearest-center invariant
  // with one final assignment pass (this can only lower ss).
  assign_all();

  // Drop empty clusters, preserving center order. An empty cluster is never
  // any point's nearest center (it would not be empty), so assignments are
  // unaffected beyond renumbering.
  std::vector<std::size_t> final_sizes(k0, 0);
  for (std::size_t i = 0; i < n; ++i) final_sizes[assignment[i]] += 1;
  std::vector<int> remap(k0, -1);
  for (int j = 0; j < k0; ++j) {
    if (final_sizes[j] == 0) continue;
    remap[j] = out.k;
    out.centers.push_back(centers[j]);
    out.k += 1;
  }
  out.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.assignment[i] = remap[assignment[i]];

  out.ss_distances = detail::weighted_ss(data, out.centers, out.assignment);
  if (!out.ss_history.empty()) out.ss_history.back() = out.ss_distances;
  const double total_weight = std::accumulate(data.weights.begin(), data.weights.end(), 0.0);
  const double dof = (total_weight - out.k) * static_cast<double>(data.bands());
  if (dof <= 0.0) {
    out.mse = std::numeric_limits<double>::infinity();
    out.mse_undefined = true;
  } else {
    out.mse = out.ss_distances / dof;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Histogram-based initialization
// ---------------------------------------------------------------------------

struct HistogramInit {
  std::vector<double> centers;  // sorted ascending
  bool fallback = false;        // quantile fallback was used
};

namespace detail {

// Peak picking over a 256-bin histogram: repeatedly take the highest-count
// occupied bin (ties: lowest bin) and suppress its +-8 neighborhood. If
// fewer than k peaks survive, fall back to k evenly spaced weighted
// quantiles of the occupied range, at levels (i + 0.5) / k.
inline HistogramInit histogram_peaks(const std::vector<double>& counts,
                                     const std::vector<double>& bin_values, int k) {
  const int bins = static_cast<int>(counts.size());
  HistogramInit out;
  std::vector<char> suppressed(bins, 0);
  for (int pick = 0; pick < k; ++pick) {
    int best = -1;
    for (int b = 0; b < bins; ++b) {
      if (suppressed[b] || counts[b] <= 0.0) continue;
      if (best < 0 || counts[b] > counts[best]) best = b;
    }
    if (best < 0) break;
    out.centers.push_back(bin_values[best]);
    for (int b = std::max(0, best - 8); b <= std::min(bins - 1, best + 8); ++b)
      suppressed[b] = 1;
  }
  if (static_cast<int>(out.centers.size()) < k) {
    out.fallback = true;
    out.centers.clear();
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (int i = 0; i < k; ++i) {
      const double level = (i + 0.5) / k * total;
      double cum = 0.0;
      double value = bin_values.back();
      for (int b = 0; b < bins; ++b) {
        cum += counts[b];
        if (cum >= level && counts[b] > 0.0) {
          value = bin_values[b];
          break;
        }
      }
      out.centers.push_back(value);
    }
  }
  std::sort(out.centers.begin(), out.centers.end());
  return out;
}

}  // namespace detail

/// Initial 1-D centers from the image's 256-bin intensity histogram.
inline HistogramInit histogram_init(const GrayImage& img, int k) {
  if (k < 1) throw DataError("histogram_init: k must be at least 1");
  std::vector<double> counts(256, 0.0);
  for (double v : img.pixels) counts[quantize_intensity(v)] += 1.0;
  std::vector<double> bin_values(256);
  for (int b = 0; b < 256; ++b) bin_values[b] = b;
  return detail::histogram_peaks(counts, bin_values, k);
}

/// Same peak-picking initializer for arbitrary weighted 1-D data: 256 bins
/// spanning [min, max] of the values.
inline HistogramInit histogram_init_values(const std::vector<double>& values,
                                           const std::vector<double>& weights, int k) {
  if (k < 1) throw DataError("histogram_init_values: k must be at least 1");
  if (values.empty()) throw DataError("histogram_init_values: empty data");
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double mn = *mn_it, mx = *mx_it;
  std::vector<double> counts(256, 0.0);
  std::vector<double> bin_values(256);
  const double span = mx - mn;
  for (int b = 0; b < 256; ++b)
    bin_values[b] = (span == 0.0) ? mn : mn + (b + 0.5) * span / 256.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    int b = (span == 0.0)
                ? 0
                : static_cast<int>(std::floor((values[i] - mn) / span * 256.0));
    b = std::clamp(b, 0, 255);
    counts[b] += (i < weights.size()) ? weights[i] : 1.0;
  }
  return detail::histogram_peaks(counts, bin_values, k);
}

// ---------------------------------------------------------------------------
// Distinct K-means: scan over k, minimizing the per-degree-of-freedom MSE
// ---------------------------------------------------------------------------

struct KmeansRunRecord {
  int k_requested = 0;
  int restart = 0;
  int k = 0;  // non-empty cluster count of the converged run
  int iterations = 0;
  double ss = 0.0;
  double mse = 0.0;
  bool mse_undefined = false;
};

struct DistinctKmeansResult {
  Clustering best;
  std::vector<KmeansRunRecord> runs;
  std::size_t best_run = 0;  // index into runs
};

namespace detail {

// Deterministic first-restart initializer: histogram peaks for 1-D data,
// per-coordinate weighted quantiles otherwise.
inline std::vector<std::vector<double>> deterministic_init(const WeightedPoints& data, int k) {
  const std::size_t d = data.bands();
  if (d == 1) {
    std::vector<double> vals(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) vals[i] = data.points[i][0];
    const HistogramInit h = histogram_init_values(vals, data.weights, k);
    std::vector<std::vector<double>> init;
    for (double c : h.centers) init.push_back({c});
    return init;
  }
  std::vector<std::vector<double>> init(k, std::vector<double>(d, 0.0));
  const double total = std::accumulate(data.weights.begin(), data.weights.end(), 0.0);
  for (std::size_t dim = 0; dim < d; ++dim) {
    std::vector<std::pair<double, double>> vw(data.size());  // (value, weight)
    for (std::size_t i = 0; i < data.size(); ++i)
      vw[i] = {data.points[i][dim], data.weights[i]};
    std::sort(vw.begin(), vw.end());
    for (int j = 0; j < k; ++j) {
      const double level = (j + 0.5) / k * total;
      double cum = 0.0;
      double value = vw.back().first;
      for (const auto& [v, w] : vw) {
        cum += w;
        if (cum >= level && w > 0.0) {
          value = v;
          break;
        }
      }
      init[j][dim] = value;
    }
  }
  return init;
}

// Random restart initializer: k picks among positive-weight points,
// without replacement while possible.
inline std::vector<std::vector<double>> random_init(const WeightedPoints& data, int k, Rng rng) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.weights[i] > 0.0) candidates.push_back(i);
  std::vector<std::vector<double>> init;
  init.reserve(k);
  for (int j = 0; j < k; ++j) {
    if (candidates.empty()) {
      // more centers than positive-weight points: duplicates are fine,
      // the resulting empty clusters get dropped
      init.push_back(init[j % init.size()]);
      continue;
    }
    const std::size_t pick = rng.next_below(candidates.size());
    init.push_back(data.points[candidates[pick]]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return init;
}

}  // namespace detail

/// Scan k over [k_min, k_max] with `restarts` seeded runs each (restart 0 is
/// the deterministic histogram/quantile init, the rest are random point
/// picks) and return the run minimizing the MSE. Ties break toward smaller
/// k, then smaller ss; runs with undefined MSE lose all ties. Fully
/// deterministic for a fixed seed.
inline DistinctKmeansResult distinct_kmeans(const WeightedPoints& data, int k_min, int k_max,
                                            int restarts, std::uint64_t seed) {
  data.validate();
  if (k_min < 1 || k_min > k_max) throw DataError("distinct_kmeans: need 1 <= k_min <= k_max");
  if (restarts < 1) throw DataError("distinct_kmeans: need at least one restart");

  DistinctKmeansResult out;
  std::vector<Clustering> kept;
  for (int k = k_min; k <= k_max; ++k) {
    for (int rst = 0; rst < restarts; ++rst) {
      std::vector<std::vector<double>> init =
          (rst == 0) ? detail::deterministic_init(data, k)
                     : detail::random_init(
                           data, k,
                           Rng(mix_seed(seed, static_cast<std::uint64_t>(k) * 1000003u + rst)));
      Clustering c = kmeans(data, std::move(init));
      out.runs.push_back({k, rst, c.k, c.iterations, c.ss_distances, c.mse, c.mse_undefined});
      kept.push_back(std::move(c));
    }
  }

  auto better = [&](const KmeansRunRecord& a, const KmeansRunRecord& b) {
    if (a.mse_undefined != b.mse_undefined) return !a.mse_undefined;
    if (a.mse != b.mse) return a.mse < b.mse;
    if (a.k != b.k) return a.k < b.k;
    return a.ss < b.ss;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.runs.size(); ++i)
    if (better(out.runs[i], out.runs[best])) best = i;
  out.best_run = best;
  out.best = std::move(kept[best]);
  return out;
}

// ---------------------------------------------------------------------------
// Three-class face segmentation with Class-I selection
// ---------------------------------------------------------------------------

/// Result of the 3-class intensity segmentation of a face crop. Classes are
/// renumbered so centers ascend; Class-I (the selected class) is the
/// darkest one, where eyes, nostrils and mouth land.
struct SegmentedFace {
  LabelMap class_map;                 // per-pixel class index 0..k-1
  std::vector<double> class_centers;  // ascending; size < 3 when degenerate
  int selected_class = 0;
  BinaryMask class_i_mask;
  std::vector<Region> components;  // 8-connected components of the Class-I mask
  bool degenerate = false;         // fewer than 3 effective classes
};

/// Cluster the 256-bin weighted intensity histogram of the crop with k = 3,
/// map every pixel to its nearest class center, select the darkest class
/// and extract its 8-connected components.
inline SegmentedFace segment_face(const GrayImage& face, std::uint64_t seed = 0) {
  (void)seed;  // the histogram init is deterministic; kept for config plumbing
  if (face.width < 1 || face.height < 1) throw DataError("segment_face: empty crop");

  std::vector<double> counts(256, 0.0);
  for (double v : face.pixels) counts[quantize_intensity(v)] += 1.0;
  WeightedPoints histogram;
  for (int b = 0; b < 256; ++b) {
    if (counts[b] <= 0.0) continue;
    histogram.points.push_back({static_cast<double>(b)});
    histogram.weights.push_back(counts[b]);
  }

  const HistogramInit init = histogram_init(face, 3);
  std::vector<std::vector<double>> init_centers;
  for (double c : init.centers) init_centers.push_back({c});
  const Clustering clustering = kmeans(histogram, std::move(init_centers));

  SegmentedFace out;
  out.degenerate = clustering.k < 3;
  std::vector<double> centers;
  for (const auto& c : clustering.centers) centers.push_back(c[0]);
  std::sort(centers.begin(), centers.end());
  out.class_centers = centers;
  out.selected_class = 0;

  out.class_map = LabelMap(face.width, face.height);
  out.class_i_mask = BinaryMask(face.width, face.height);
  for (std::size_t i = 0; i < face.pixels.size(); ++i) {
    const double v = face.pixels[i];
    int best = 0;
    double best_d = std::fabs(v - centers[0]);
    for (std::size_t j = 1; j < centers.size(); ++j) {
      const double d = std::fabs(v - centers[j]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    out.class_map.labels[i] = best;
    out.class_i_mask.bits[i] = (best == out.selected_class) ? 1 : 0;
  }
  out.components = label_components(out.class_i_mask, 8).second;
  return out;
}

}  // namespace facepipe

#endif  // FACEPIPE_CLUSTERING_HPP
