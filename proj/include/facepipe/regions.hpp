#ifndef FACEPIPE_REGIONS_HPP
#define FACEPIPE_REGIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "facepipe/errors.hpp"
#include "facepipe/image.hpp"

namespace facepipe {

/// Per-pixel component labels; 0 is background, components are 1..K with
/// no gaps, numbered in descending-area order.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(int w, int h) : width(w), height(h) {
    labels.assign(static_cast<std::size_t>(w) * h, 0);
  }
  int& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Statistics of one connected component. bbox extents are inclusive.
struct Region {
  int label = 0;
  std::size_t area = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  double centroid_x = 0.0, centroid_y = 0.0;

  int bbox_width() const { return max_x - min_x + 1; }
  int bbox_height() const { return max_y - min_y + 1; }
};

constexpr double kGoldenRatio = 1.6180339887498948482;  // (1 + sqrt 5) / 2

/// Face-candidate acceptance: bbox height/width within a band around the
/// golden ratio, plus a minimum area to suppress skin-colored speckle.
struct FaceCandidateRule {
  double tolerance = 0.65;
  std::size_t min_area = 400;
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    return static_cast<int>(parent.size()) - 1;
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace detail

/// Two-pass union-find labeling. Two set pixels share a label iff they are
/// connected under the chosen adjacency (4 or 8). Returned regions are
/// sorted by descending area (ties: smaller min_y, then smaller min_x) and
/// labels are renumbered 1..K in that order.
inline std::pair<LabelMap, std::vector<Region>> label_components(const BinaryMask& mask,
                                                                 int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8)
    throw DataError("label_components: connectivity must be 4 or 8");
  LabelMap map(mask.width, mask.height);
  detail::UnionFind uf;
  std::vector<int> provisional(mask.bits.size(), -1);

  // First pass: scan row-major, linking each set pixel to its already
  // visited neighbors (W, NW, N, NE for 8-connectivity; W, N for 4).
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
      if (!mask.bits[idx]) continue;
      int best = -1;
      auto link = [&](int nx, int ny) {
        if (nx < 0 || nx >= mask.width || ny < 0) return;
        const std::size_t nidx = static_cast<std::size_t>(ny) * mask.width + nx;
        if (provisional[nidx] < 0) return;
        if (best < 0)
          best = provisional[nidx];
        else
          uf.unite(best, provisional[nidx]);
      };
      link(x - 1, y);
      link(x, y - 1);
      if (connectivity == 8) {
        link(x - 1, y - 1);
        link(x + 1, y - 1);
      }
      provisional[idx] = (best >= 0) ? best : uf.make();
      if (best >= 0) uf.unite(best, provisional[idx]);
    }
  }

  // Second pass: resolve roots and accumulate per-root statistics.
  std::vector<int> root_to_region(uf.parent.size(), -1);
  std::vector<Region> regions;
  std::vector<double> sum_x, sum_y;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
      if (provisional[idx] < 0) continue;
      const int root = uf.find(provisional[idx]);
      int r = root_to_region[root];
      if (r < 0) {
        r = static_cast<int>(regions.size());
        root_to_region[root] = r;
        regions.push_back({0, 0, x, y, x, y, 0.0, 0.0});
        sum_x.push_back(0.0);
        sum_y.push_back(0.0);
      }
      Region& reg = regions[r];
      reg.area += 1;
      reg.min_x = std::min(reg.min_x, x);
      reg.min_y = std::min(reg.min_y, y);
      reg.max_x = std::max(reg.max_x, x);
      reg.max_y = std::max(reg.max_y, y);
      sum_x[r] += x;
      sum_y[r] += y;
      provisional[idx] = r;  // provisional now holds the region slot
    }
  }
  for (std::size_t r = 0; r < regions.size(); ++r) {
    regions[r].centroid_x = sum_x[r] / static_cast<double>(regions[r].area);
    regions[r].centroid_y = sum_y[r] / static_cast<double>(regions[r].area);
  }

  std::vector<int> order(regions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (regions[a].area != regions[b].area) return regions[a].area > regions[b].area;
    if (regions[a].min_y != regions[b].min_y) return regions[a].min_y < regions[b].min_y;
    return regions[a].min_x < regions[b].min_x;
  });
  std::vector<int> slot_to_label(regions.size(), 0);
  std::vector<Region> sorted;
  sorted.reserve(regions.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    Region reg = regions[order[rank]];
    reg.label = static_cast<int>(rank) + 1;
    slot_to_label[order[rank]] = reg.label;
    sorted.push_back(reg);
  }
  for (std::size_t idx = 0; idx < mask.bits.size(); ++idx)
    map.labels[idx] = mask.bits[idx] ? slot_to_label[provisional[idx]] : 0;
  return {std::move(map), std::move(sorted)};
}

/// Keep regions that are big enough and whose bbox height/width ratio lies
/// within the golden band; input order is preserved.
inline std::vector<Region> face_candidates(const std::vector<Region>& regions,
                                           const FaceCandidateRule& rule = {}) {
  std::vector<Region> out;
  for (const Region& r : regions) {
    if (r.area < rule.min_area) continue;
    const double ratio = static_cast<double>(r.bbox_height()) / r.bbox_width();
    if (ratio < kGoldenRatio - rule.tolerance || ratio > kGoldenRatio + rule.tolerance)
      continue;
    out.push_back(r);
  }
  return out;
}

}  // namespace facepipe

#endif  // FACEPIPE_REGIONS_HPP
