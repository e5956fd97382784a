#ifndef FACEPIPE_SKIN_HPP
#define FACEPIPE_SKIN_HPP

#include <algorithm>
#include <cstdint>

#include "facepipe/errors.hpp"
#include "facepipe/image.hpp"

namespace facepipe {

/// Diagnostics for a skin-mask pass: how often each rule clause fired.
/// The clauses are mutually exclusive on |R-G|, so total_skin normally
/// equals clause1_hits + clause2_hits.
struct SkinRuleReport {
  std::size_t clause1_hits = 0;
  std::size_t clause2_hits = 0;
  std::size_t total_skin = 0;
};

/// Clause 1: dominant-red skin tone under ordinary lighting.
inline bool skin_clause1(int r, int g, int b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  return r > 95 && g > 40 && b > 20 && (mx - mn) > 15 && std::abs(r - g) > 15 &&
         r > g && r > b;
}

/// Clause 2: washed-out skin tone under flash lighting.
inline bool skin_clause2(int r, int g, int b) {
  return r > 220 && g > 210 && b > 170 && std::abs(r - g) <= 15 && r > b && g > b;
}

/// The fixed two-clause RGB skin predicate. Comparison senses are exact;
/// no tolerance is applied anywhere.
inline bool is_skin(int r, int g, int b) {
  if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
    throw DataError("is_skin: channel out of [0,255]");
  return skin_clause1(r, g, b) || skin_clause2(r, g, b);
}

inline bool is_skin(const Rgb& p) { return skin_clause1(p.r, p.g, p.b) || skin_clause2(p.r, p.g, p.b); }

/// Pixelwise lift of is_skin over the whole image.
inline BinaryMask skin_mask(const RgbImage& img, SkinRuleReport* report = nullptr) {
  BinaryMask mask(img.width, img.height);
  SkinRuleReport rep;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const Rgb& p = img.pixels[i];
    const bool c1 = skin_clause1(p.r, p.g, p.b);
    const bool c2 = skin_clause2(p.r, p.g, p.b);
    rep.clause1_hits += c1;
    rep.clause2_hits += c2;
    const bool skin = c1 || c2;
    rep.total_skin += skin;
    mask.bits[i] = skin ? 1 : 0;
  }
  if (report) *report = rep;
  return mask;
}

}  // namespace facepipe

#endif  // FACEPIPE_SKIN_HPP
