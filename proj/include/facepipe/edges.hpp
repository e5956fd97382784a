#ifndef FACEPIPE_EDGES_HPP
#define FACEPIPE_EDGES_HPP

#include <cmath>
#include <string>
#include <vector>

#include "facepipe/errors.hpp"
#include "facepipe/image.hpp"

namespace facepipe {

/// A gradient-family operator: paired correlation kernels for the two
/// derivative directions. Kernels are the standard literature forms
/// (Roberts 2x2 cross, Prewitt and Sobel 3x3); each sums to zero, so
/// constant images produce zero response.
struct EdgeOperator {
  std::string name;
  int size = 0;  // kernel side
  std::vector<double> kernel_x;
  std::vector<double> kernel_y;

  static EdgeOperator roberts() {
    return {"roberts", 2, {1, 0, 0, -1}, {0, 1, -1, 0}};
  }
  static EdgeOperator prewitt() {
    return {"prewitt", 3, {-1, 0, 1, -1, 0, 1, -1, 0, 1}, {-1, -1, -1, 0, 0, 0, 1, 1, 1}};
  }
  static EdgeOperator sobel() {
    return {"sobel", 3, {-1, 0, 1, -2, 0, 2, -1, 0, 1}, {-1, -2, -1, 0, 0, 0, 1, 2, 1}};
  }
  static EdgeOperator by_name(const std::string& name) {
    if (name == "roberts") return roberts();
    if (name == "prewitt") return prewitt();
    if (name == "sobel") return sobel();
    throw DataError("unknown edge operator: " + name);
  }
};

namespace detail {

// Correlation of the kernel with the image at (x, y), replicate padding.
// The anchor pixel's value is subtracted from every tap before weighting:
// for a zero-sum kernel this changes nothing in exact arithmetic, makes
// the response exactly zero on constant images, and keeps it bit-identical
// under any intensity offset that leaves pixel differences exact (e.g.
// integer-valued images shifted by an integer).
inline double correlate_at(const GrayImage& img, const std::vector<double>& kernel, int ksize,
                           int anchor, int x, int y) {
  const double center = img.at(x, y);
  double acc = 0.0;
  for (int ky = 0; ky < ksize; ++ky) {
    const int sy = std::clamp(y + ky - anchor, 0, img.height - 1);
    for (int kx = 0; kx < ksize; ++kx) {
      const int sx = std::clamp(x + kx - anchor, 0, img.width - 1);
      acc += kernel[static_cast<std::size_t>(ky) * ksize + kx] * (img.at(sx, sy) - center);
    }
  }
  return acc;
}

}  // namespace detail

/// Per-pixel gradient magnitude sqrt(gx^2 + gy^2) under the given operator,
/// borders handled by edge replication.
inline GrayImage gradient_edges(const GrayImage& img, const EdgeOperator& op) {
  if (img.width < op.size || img.height < op.size)
    throw DataError("gradient_edges: image smaller than the kernel");
  // 3x3 kernels anchor at their center; the 2x2 Roberts cross anchors at
  // its top-left tap.
  const int anchor = (op.size == 2) ? 0 : op.size / 2;
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double gx = detail::correlate_at(img, op.kernel_x, op.size, anchor, x, y);
      const double gy = detail::correlate_at(img, op.kernel_y, op.size, anchor, x, y);
      out.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

/// Laplacian-of-Gaussian kernel of scale sigma, radius ceil(3 sigma),
/// discretized and re-centered so its entries sum to exactly zero.
inline std::vector<double> log_kernel(double sigma, int* out_radius = nullptr) {
  if (sigma <= 0.0) throw DataError("log_zero_crossings: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int side = 2 * radius + 1;
  std::vector<double> k(static_cast<std::size_t>(side) * side);
  const double s2 = sigma * sigma;
  double sum = 0.0;
  for (int y = -radius; y <= radius; ++y) {
    for (int x = -radius; x <= radius; ++x) {
      const double r2 = static_cast<double>(x) * x + static_cast<double>(y) * y;
      const double v = (r2 - 2.0 * s2) / (s2 * s2) * std::exp(-r2 / (2.0 * s2));
      k[static_cast<std::size_t>(y + radius) * side + (x + radius)] = v;
      sum += v;
    }
  }
  const double mean = sum / (static_cast<double>(side) * side);
  for (double& v : k) v -= mean;
  if (out_radius) *out_radius = radius;
  return k;
}

/// Marr-Hildreth style edges: convolve with the LoG kernel and mark pixels
/// whose response changes sign against any 4-neighbor and whose magnitude
/// exceeds the floor.
inline BinaryMask log_zero_crossings(const GrayImage& img, double sigma, double floor = 0.0) {
  int radius = 0;
  const std::vector<double> kernel = log_kernel(sigma, &radius);
  const int side = 2 * radius + 1;

  GrayImage response(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      response.at(x, y) = detail::correlate_at(img, kernel, side, radius, x, y);

  BinaryMask out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double r = response.at(x, y);
      if (std::fabs(r) <= floor) continue;
      const bool crossing =
          (x > 0 && r * response.at(x - 1, y) < 0.0) ||
          (x + 1 < img.width && r * response.at(x + 1, y) < 0.0) ||
          (y > 0 && r * response.at(x, y - 1) < 0.0) ||
          (y + 1 < img.height && r * response.at(x, y + 1) < 0.0);
      if (crossing) out.at(x, y) = 1;
    }
  }
  return out;
}

}  // namespace facepipe

#endif  // FACEPIPE_EDGES_HPP
