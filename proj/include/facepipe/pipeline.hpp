#ifndef FACEPIPE_PIPELINE_HPP
#define FACEPIPE_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "facepipe/clustering.hpp"
#include "facepipe/errors.hpp"
#include "facepipe/features.hpp"
#include "facepipe/image.hpp"
#include "facepipe/regions.hpp"
#include "facepipe/skin.hpp"

namespace facepipe {

/// Frame-difference gating for sequences: pixels are kept only where the
/// dilated motion mask overlaps the skin mask. Frame 0 is never gated.
struct MotionGatingConfig {
  bool enabled = false;
  double threshold = 15.0;  // grayscale |difference| above this counts as motion
  int dilate_radius = 5;    // square (Chebyshev) dilation of the motion mask
};

struct PipelineConfig {
  FaceCandidateRule face_rule;
  std::uint64_t seed = 0;
  int dct_k = 64;
  MotionGatingConfig gating;

  void validate() const {
    if (face_rule.tolerance < 0.0) throw DataError("config: tolerance must be >= 0");
    if (face_rule.min_area < 1) throw DataError("config: min_area must be >= 1");
    if (dct_k < 1 || dct_k > 64) throw DataError("config: dct_k must be in [1, 64]");
    if (gating.threshold < 0.0) throw DataError("config: motion threshold must be >= 0");
    if (gating.dilate_radius < 0) throw DataError("config: dilate radius must be >= 0");
  }
};

/// Square dilation with Chebyshev radius r, done as two axis passes.
inline BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw DataError("dilate: negative radius");
  if (radius == 0) return mask;
  BinaryMask tmp(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      std::uint8_t v = 0;
      const int lo = std::max(0, x - radius), hi = std::min(mask.width - 1, x + radius);
      for (int xx = lo; xx <= hi && !v; ++xx) v = mask.at(xx, y);
      tmp.at(x, y) = v;
    }
  }
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      std::uint8_t v = 0;
      const int lo = std::max(0, y - radius), hi = std::min(mask.height - 1, y + radius);
      for (int yy = lo; yy <= hi && !v; ++yy) v = tmp.at(x, yy);
      out.at(x, y) = v;
    }
  }
  return out;
}

/// One face candidate carried through the stages. Failed stages leave the
/// later optional fields empty and record where processing stopped; the
/// bounding box always refers to full-frame coordinates.
struct Detection {
  int frame = 0;
  Region face_bbox;
  int crop_x = 0, crop_y = 0;  // origin of the analyzed crop in the frame
  int crop_w = 0, crop_h = 0;
  FeatureFailure failed_stage = FeatureFailure::none;
  std::optional<EyePair> eyes_frame;       // pre-correction, frame coordinates
  std::optional<Point> nose_frame;         // frame coordinates
  std::optional<Point> mouth_frame;        // frame coordinates
  std::optional<FaceGeometry> geometry;    // corrected-crop coordinates
  std::optional<FeatureVector> feature;
  std::string label;                       // empty when no classifier ran
  std::vector<double> scores;
};

/// Optional classification hook: maps a feature vector to (label, scores).
using ClassifyFn = std::function<std::pair<std::string, std::vector<double>>(const FeatureVector&)>;

namespace detail {

inline Region translate_region(Region r, int dx, int dy) {
  r.min_x += dx;
  r.max_x += dx;
  r.min_y += dy;
  r.max_y += dy;
  r.centroid_x += dx;
  r.centroid_y += dy;
  return r;
}

inline GrayImage mask_to_gray(const BinaryMask& mask) {
  GrayImage out(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) out.pixels[i] = mask.bits[i] ? 255.0 : 0.0;
  return out;
}

inline Detection process_candidate(const RgbImage& img, const Region& candidate,
                                   const PipelineConfig& cfg, const ClassifyFn& classify,
                                   int frame) {
  Detection det;
  det.frame = frame;
  det.face_bbox = candidate;

  // crop: bbox extended by 5% per side, clamped to the frame
  const int mx = static_cast<int>(std::lround(0.05 * candidate.bbox_width()));
  const int my = static_cast<int>(std::lround(0.05 * candidate.bbox_height()));
  const int x0 = std::max(0, candidate.min_x - mx);
  const int y0 = std::max(0, candidate.min_y - my);
  const int x1 = std::min(img.width - 1, candidate.max_x + mx);
  const int y1 = std::min(img.height - 1, candidate.max_y + my);
  det.crop_x = x0;
  det.crop_y = y0;
  det.crop_w = x1 - x0 + 1;
  det.crop_h = y1 - y0 + 1;
  RgbImage crop(det.crop_w, det.crop_h);
  for (int y = 0; y < det.crop_h; ++y)
    for (int x = 0; x < det.crop_w; ++x) crop.at(x, y) = img.at(x0 + x, y0 + y);

  const GrayImage gray = to_gray(crop);
  const SegmentedFace seg = segment_face(gray, cfg.seed);
  if (seg.degenerate) {
    det.failed_stage = FeatureFailure::segmentation;
    return det;
  }

  const Region local = translate_region(candidate, -x0, -y0);
  const std::optional<EyePair> eyes = locate_eyes(seg, local);
  if (!eyes) {
    det.failed_stage = FeatureFailure::eyes;
    return det;
  }
  det.eyes_frame = EyePair{{eyes->left.x + x0, eyes->left.y + y0},
                           {eyes->right.x + x0, eyes->right.y + y0}};

  OrientationResult orient;
  try {
    orient = correct_orientation(gray, *eyes);
  } catch (const DataError&) {
    det.failed_stage = FeatureFailure::orientation;
    return det;
  }
  const double mid_x = (eyes->left.x + eyes->right.x) / 2.0;
  const double mid_y = (eyes->left.y + eyes->right.y) / 2.0;

  // Relabel the dark class in the corrected frame rather than rotating
  // centroids: resampling can split or merge components near the border.
  BinaryMask rotated_mask = seg.class_i_mask;
  if (orient.angle != 0.0) {
    const GrayImage rotated =
        rotate_about(mask_to_gray(seg.class_i_mask), -orient.angle, mid_x, mid_y);
    rotated_mask = threshold(rotated, 127.5);
  }
  const std::vector<Region> comps = label_components(rotated_mask, 8).second;

  const NoseMouthSearch nm = locate_nose_mouth(comps, orient.eyes);
  if (!nm.nose_found) {
    det.failed_stage = FeatureFailure::nose;
    return det;
  }
  if (!nm.mouth_found) {
    det.failed_stage = FeatureFailure::mouth;
    return det;
  }

  FaceGeometry geo;
  geo.eye_left = orient.eyes.left;
  geo.eye_right = orient.eyes.right;
  geo.inter_eye_distance =
      std::hypot(orient.eyes.right.x - orient.eyes.left.x, orient.eyes.right.y - orient.eyes.left.y);
  geo.nose_tip = nm.nose_tip;
  geo.nose_length = nm.nose_length;
  geo.mouth_center = nm.mouth_center;
  geo.mouth_area = nm.mouth_area;
  geo.face_area = static_cast<double>(candidate.area);
  geo.rotation_applied = -orient.angle;
  det.geometry = geo;

  // map nose/mouth back into frame coordinates for reporting and overlays
  Point nose = nm.nose_tip, mouth = nm.mouth_center;
  rotate_point(orient.angle, mid_x, mid_y, nose.x, nose.y);
  rotate_point(orient.angle, mid_x, mid_y, mouth.x, mouth.y);
  det.nose_frame = Point{nose.x + x0, nose.y + y0};
  det.mouth_frame = Point{mouth.x + x0, mouth.y + y0};

  det.feature = build_feature_vector(orient.image, geo, cfg.dct_k);
  if (classify) {
    auto [label, scores] = classify(*det.feature);
    det.label = std::move(label);
    det.scores = std::move(scores);
  }
  return det;
}

inline std::vector<Detection> detect_in_frame(const RgbImage& img, const PipelineConfig& cfg,
                                              const ClassifyFn& classify, int frame,
                                              const BinaryMask* gate) {
  BinaryMask skin = skin_mask(img);
  if (gate) {
    if (gate->width != skin.width || gate->height != skin.height)
      throw DataError("detect: gate mask dimensions differ from the frame");
    for (std::size_t i = 0; i < skin.bits.size(); ++i) skin.bits[i] &= gate->bits[i];
  }
  const std::vector<Region> regions = label_components(skin, 8).second;
  std::vector<Detection> out;
  for (const Region& r : face_candidates(regions, cfg.face_rule))
    out.push_back(process_candidate(img, r, cfg, classify, frame));
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.face_bbox.min_y != b.face_bbox.min_y) return a.face_bbox.min_y < b.face_bbox.min_y;
    if (a.face_bbox.min_x != b.face_bbox.min_x) return a.face_bbox.min_x < b.face_bbox.min_x;
    return a.face_bbox.area > b.face_bbox.area;
  });
  return out;
}

}  // namespace detail

inline std::vector<Detection> detect_still(const RgbImage& img, const PipelineConfig& cfg,
                                           const ClassifyFn& classify = {}) {
  cfg.validate();
  return detail::detect_in_frame(img, cfg, classify, 0, nullptr);
}

/// Run the detector over an ordered frame sequence. With gating enabled,
/// frames after the first only consider skin pixels near inter-frame
/// motion; with gating disabled every frame matches detect_still exactly.
inline std::vector<std::vector<Detection>> detect_video(const std::vector<RgbImage>& frames,
                                                        const PipelineConfig& cfg,
                                                        const ClassifyFn& classify = {}) {
  cfg.validate();
  if (frames.empty()) throw DataError("detect_video: empty sequence");
  for (const RgbImage& f : frames)
    if (f.width != frames[0].width || f.height != frames[0].height)
      throw DataError("detect_video: frame dimensions differ");

  std::vector<std::vector<Detection>> out;
  out.reserve(frames.size());
  GrayImage prev;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    GrayImage gray = to_gray(frames[t]);
    if (t == 0 || !cfg.gating.enabled) {
      out.push_back(detail::detect_in_frame(frames[t], cfg, classify, static_cast<int>(t), nullptr));
    } else {
      const GrayImage diff = difference_image(gray, prev);
      const BinaryMask gate = dilate(threshold(diff, cfg.gating.threshold), cfg.gating.dilate_radius);
      out.push_back(detail::detect_in_frame(frames[t], cfg, classify, static_cast<int>(t), &gate));
    }
    prev = std::move(gray);
  }
  return out;
}

}  // namespace facepipe

#endif  // FACEPIPE_PIPELINE_HPP
