#ifndef FACEPIPE_IMAGE_HPP
#define FACEPIPE_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "facepipe/errors.hpp"

namespace facepipe {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Dense 8-bit color raster, row-major. The universal input type of the
/// pipeline; all heavier processing happens on GrayImage.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {}) : width(w), height(h) {
    if (w < 1 || h < 1) throw DataError("image dimensions must be at least 1x1");
    pixels.assign(static_cast<std::size_t>(w) * h, fill);
  }

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool operator==(const RgbImage&) const = default;
};

/// Real-valued intensity raster in [0, 255]. Intensities stay floating
/// through the pipeline; quantization happens once, at save time.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0) : width(w), height(h) {
    if (w < 1 || h < 1) throw DataError("image dimensions must be at least 1x1");
    pixels.assign(static_cast<std::size_t>(w) * h, fill);
  }

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool operator==(const GrayImage&) const = default;
};

/// Row-major boolean raster (stored as bytes, one per pixel).
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h, bool fill = false) : width(w), height(h) {
    if (w < 1 || h < 1) throw DataError("mask dimensions must be at least 1x1");
    bits.assign(static_cast<std::size_t>(w) * h, fill ? 1 : 0);
  }

  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += (b != 0);
    return n;
  }
  bool operator==(const BinaryMask&) const = default;
};

// ---------------------------------------------------------------------------
// PPM I/O (P3 ASCII and P6 binary, maxval 255, '#' comments in headers)
// ---------------------------------------------------------------------------

enum class PpmFormat { P3, P6 };

namespace detail {

// Reads the next header/data token, skipping whitespace and '#' comments.
// Returns nullopt at end of stream so callers can raise phase-specific errors.
inline std::optional<std::string> ppm_next_token(std::istream& in) {
  int c = in.get();
  for (;;) {
    if (c == EOF) return std::nullopt;
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
      c = in.get();
      continue;
    }
    break;
  }
  std::string tok;
  while (c != EOF && c != ' ' && c != '\t' && c != '\r' && c != '\n' && c != '\f' &&
         c != '\v' && c != '#') {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c == '#') in.unget();
  // The terminating whitespace byte is consumed here; for P6 that is the
  // single separator byte before the raster data.
  return tok;
}

inline int ppm_parse_int(const std::string& tok, const std::string& what,
                         const std::string& path) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw DataError("malformed PPM header: bad " + what + " '" + tok + "' in " + path);
  long v = 0;
  for (char ch : tok) {
    v = v * 10 + (ch - '0');
    if (v > 1000000000L) throw DataError("malformed PPM header: " + what + " out of range in " + path);
  }
  return static_cast<int>(v);
}

}  // namespace detail

inline RgbImage load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PPM file: " + path);

  auto header_token = [&]() {
    auto tok = detail::ppm_next_token(in);
    if (!tok) throw DataError("malformed PPM header: unexpected end of file in " + path);
    return *tok;
  };

  const std::string magic = header_token();
  if (magic != "P3" && magic != "P6")
    throw DataError("malformed PPM header: unsupported magic '" + magic + "' in " + path);
  const int width = detail::ppm_parse_int(header_token(), "width", path);
  const int height = detail::ppm_parse_int(header_token(), "height", path);
  const int maxval = detail::ppm_parse_int(header_token(), "maxval", path);
  if (width < 1 || height < 1)
    throw DataError("malformed PPM header: non-positive dimensions in " + path);
  if (maxval != 255)
    throw DataError("unsupported PPM maxval " + std::to_string(maxval) + " (only 255) in " + path);

  RgbImage img(width, height);
  const std::size_t samples = static_cast<std::size_t>(width) * height * 3;
  if (magic == "P6") {
    std::vector<char> raw(samples);
    in.read(raw.data(), static_cast<std::streamsize>(samples));
    if (static_cast<std::size_t>(in.gcount()) != samples)
      throw DataError("truncated PPM pixel data in " + path);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      img.pixels[i] = {static_cast<std::uint8_t>(raw[3 * i]),
                       static_cast<std::uint8_t>(raw[3 * i + 1]),
                       static_cast<std::uint8_t>(raw[3 * i + 2])};
    }
  } else {
    for (std::size_t i = 0; i < samples; ++i) {
      auto tok = detail::ppm_next_token(in);
      if (!tok) throw DataError("truncated PPM pixel data in " + path);
      const int v = detail::ppm_parse_int(*tok, "sample", path);
      if (v > 255) throw DataError("PPM sample exceeds maxval in " + path);
      std::uint8_t* chan = &img.pixels[i / 3].r;
      chan[i % 3] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

inline void save_ppm(const RgbImage& img, const std::string& path,
                     PpmFormat format = PpmFormat::P6) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  if (format == PpmFormat::P6) {
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<char> raw;
    raw.reserve(img.pixels.size() * 3);
    for (const Rgb& p : img.pixels) {
      raw.push_back(static_cast<char>(p.r));
      raw.push_back(static_cast<char>(p.g));
      raw.push_back(static_cast<char>(p.b));
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  } else {
    out << "P3\n" << img.width << " " << img.height << "\n255\n";
    for (const Rgb& p : img.pixels)
      out << int(p.r) << ' ' << int(p.g) << ' ' << int(p.b) << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Conversions and per-pixel operations
// ---------------------------------------------------------------------------

/// Standard luma weights; the intensity that downstream clustering consumes.
inline double luma(const Rgb& p) {
  return 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
}

inline GrayImage to_gray(const RgbImage& img) {
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = luma(img.pixels[i]);
  return out;
}

/// Round-half-up quantization to an 8-bit channel.
inline std::uint8_t quantize_intensity(double v) {
  double q = std::floor(v + 0.5);
  if (q < 0.0) q = 0.0;
  if (q > 255.0) q = 255.0;
  return static_cast<std::uint8_t>(q);
}

inline RgbImage gray_to_rgb(const GrayImage& img) {
  RgbImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const std::uint8_t v = quantize_intensity(img.pixels[i]);
    out.pixels[i] = {v, v, v};
  }
  return out;
}

inline RgbImage mask_to_rgb(const BinaryMask& mask) {
  RgbImage out(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    const std::uint8_t v = mask.bits[i] ? 255 : 0;
    out.pixels[i] = {v, v, v};
  }
  return out;
}

/// Per-pixel absolute difference |a - b|; the motion cue for video frames.
inline GrayImage difference_image(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw DataError("difference_image: dimension mismatch");
  GrayImage out(a.width, a.height);
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    out.pixels[i] = std::fabs(a.pixels[i] - b.pixels[i]);
  return out;
}

/// Bit set iff intensity is strictly greater than t.
inline BinaryMask threshold(const GrayImage& img, double t) {
  BinaryMask out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.bits[i] = img.pixels[i] > t ? 1 : 0;
  return out;
}

namespace detail {

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

// Bilinear sample with clamped neighbor fetch. pos is already in-range.
inline double sample_clamped(const GrayImage& img, double sx, double sy) {
  int x0 = static_cast<int>(std::floor(sx));
  int y0 = static_cast<int>(std::floor(sy));
  x0 = std::clamp(x0, 0, img.width - 1);
  y0 = std::clamp(y0, 0, img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double top = lerp(img.at(x0, y0), img.at(x1, y0), fx);
  const double bot = lerp(img.at(x0, y1), img.at(x1, y1), fx);
  return lerp(top, bot, fy);
}

// Bilinear sample treating everything outside the raster as 0.
inline double sample_zero_fill(const GrayImage& img, double sx, double sy) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0;
  const double fy = sy - y0;
  auto px = [&](int x, int y) -> double {
    return img.in_bounds(x, y) ? img.at(x, y) : 0.0;
  };
  const double top = lerp(px(x0, y0), px(x0 + 1, y0), fx);
  const double bot = lerp(px(x0, y0 + 1), px(x0 + 1, y0 + 1), fx);
  return lerp(top, bot, fy);
}

}  // namespace detail

inline GrayImage resize_bilinear(const GrayImage& img, int w, int h) {
  if (w < 1 || h < 1) throw DataError("resize_bilinear: target dimensions must be at least 1x1");
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const double sy = (h == 1) ? (img.height - 1) / 2.0
                               : static_cast<double>(y) * (img.height - 1) / (h - 1);
    for (int x = 0; x < w; ++x) {
      const double sx = (w == 1) ? (img.width - 1) / 2.0
                                 : static_cast<double>(x) * (img.width - 1) / (w - 1);
      out.at(x, y) = detail::sample_clamped(img, sx, sy);
    }
  }
  return out;
}

/// Rotate the image content by `angle` radians about `center`.
///
/// Axis frame: x grows rightward, y grows downward; positive angles follow
/// the mathematical counterclockwise sense applied to that frame, so a
/// point at (cx+d, cy) moves toward (cx, cy+d) for angle pi/2. Output has
/// the input's dimensions; samples falling outside the input fill with 0.
inline GrayImage rotate_about(const GrayImage& img, double angle, double cx, double cy) {
  GrayImage out(img.width, img.height);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      // Inverse mapping: R(-angle) applied to the output coordinate.
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      out.at(x, y) = detail::sample_zero_fill(img, sx, sy);
    }
  }
  return out;
}

/// Forward-rotate a single point about (cx, cy); the coordinate-space
/// companion of rotate_about's image resampling.
inline void rotate_point(double angle, double cx, double cy, double& x, double& y) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double dx = x - cx;
  const double dy = y - cy;
  x = c * dx - s * dy + cx;
  y = s * dx + c * dy + cy;
}

}  // namespace facepipe

#endif  // FACEPIPE_IMAGE_HPP
