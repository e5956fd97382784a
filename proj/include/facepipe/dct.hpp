#ifndef FACEPIPE_DCT_HPP
#define FACEPIPE_DCT_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "facepipe/errors.hpp"
#include "facepipe/image.hpp"

namespace facepipe {

/// n x n frequency-domain block of an orthonormal 2-D DCT-II. With the
/// orthonormal scaling the transform is energy preserving, so the sum of
/// squared coefficients equals the sum of squared pixels.
struct CoefficientBlock {
  int n = 0;
  std::vector<double> coeffs;  // row-major n*n

  double at(int row, int col) const { return coeffs[static_cast<std::size_t>(row) * n + col]; }
  double& at(int row, int col) { return coeffs[static_cast<std::size_t>(row) * n + col]; }
};

namespace detail {

// One orthonormal DCT-II pass along rows of a row-major n x n buffer.
// Direct O(n^2) per row; at n = 64 this is cheap and doubles as its own
// reference implementation.
inline std::vector<double> dct_rows(const std::vector<double>& in, int n, bool inverse) {
  std::vector<double> out(in.size(), 0.0);
  const double pi = std::acos(-1.0);
  const double a0 = std::sqrt(1.0 / n);
  const double au = std::sqrt(2.0 / n);
  for (int r = 0; r < n; ++r) {
    const double* src = &in[static_cast<std::size_t>(r) * n];
    double* dst = &out[static_cast<std::size_t>(r) * n];
    for (int u = 0; u < n; ++u) {
      double s = 0.0;
      if (!inverse) {
        for (int m = 0; m < n; ++m) s += src[m] * std::cos(pi * (2 * m + 1) * u / (2.0 * n));
        dst[u] = (u == 0 ? a0 : au) * s;
      } else {
        for (int m = 0; m < n; ++m)
          s += (m == 0 ? a0 : au) * src[m] * std::cos(pi * (2 * u + 1) * m / (2.0 * n));
        dst[u] = s;
      }
    }
  }
  return out;
}

inline std::vector<double> transpose(const std::vector<double>& in, int n) {
  std::vector<double> out(in.size());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      out[static_cast<std::size_t>(c) * n + r] = in[static_cast<std::size_t>(r) * n + c];
  return out;
}

}  // namespace detail

/// Separable orthonormal 2-D DCT-II of a square block (rows, then columns).
inline CoefficientBlock dct2(const std::vector<double>& block, int n) {
  if (n < 1) throw DataError("dct2: block side must be at least 1");
  if (block.size() != static_cast<std::size_t>(n) * n)
    throw DataError("dct2: block is not n x n");
  std::vector<double> tmp = detail::dct_rows(block, n, false);
  tmp = detail::transpose(tmp, n);
  tmp = detail::dct_rows(tmp, n, false);
  return {n, detail::transpose(tmp, n)};
}

inline CoefficientBlock dct2(const GrayImage& img) {
  if (img.width != img.height) throw DataError("dct2: non-square input");
  return dct2(img.pixels, img.width);
}

/// Inverse of dct2, exact up to floating round-off.
inline std::vector<double> idct2(const CoefficientBlock& coeffs) {
  const int n = coeffs.n;
  if (n < 1 || coeffs.coeffs.size() != static_cast<std::size_t>(n) * n)
    throw DataError("idct2: malformed coefficient block");
  std::vector<double> tmp = detail::dct_rows(coeffs.coeffs, n, true);
  tmp = detail::transpose(tmp, n);
  tmp = detail::dct_rows(tmp, n, true);
  return detail::transpose(tmp, n);
}

/// Top-left k x k sub-matrix, flattened row-major: the low-frequency
/// coefficients that carry most of the block's energy.
inline std::vector<double> truncate_block(const CoefficientBlock& coeffs, int k) {
  if (k < 1 || k > coeffs.n) throw DataError("truncate_block: k must be in [1, n]");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k) * k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) out.push_back(coeffs.at(r, c));
  return out;
}

}  // namespace facepipe

#endif  // FACEPIPE_DCT_HPP
