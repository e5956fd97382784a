#ifndef FACEPIPE_FEATURES_HPP
#define FACEPIPE_FEATURES_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "facepipe/clustering.hpp"
#include "facepipe/dct.hpp"
#include "facepipe/errors.hpp"
#include "facepipe/image.hpp"
#include "facepipe/regions.hpp"

namespace facepipe {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// First failing stage of per-face feature extraction. Failures are
/// first-class results; a face whose geometry is incomplete is reported
/// with the stage that failed, never silently dropped.
enum class FeatureFailure { none, segmentation, eyes, orientation, nose, mouth };

inline const char* to_string(FeatureFailure f) {
  switch (f) {
    case FeatureFailure::none: return "none";
    case FeatureFailure::segmentation: return "segmentation";
    case FeatureFailure::eyes: return "eyes";
    case FeatureFailure::orientation: return "orientation";
    case FeatureFailure::nose: return "nose";
    case FeatureFailure::mouth: return "mouth";
  }
  return "none";
}

/// Complete facial geometry, in face-crop coordinates after orientation
/// correction. face_area is the skin pixel count of the detected region;
/// rotation_applied is the angle handed to rotate_about (the negated tilt).
struct FaceGeometry {
  Point eye_left;
  Point eye_right;
  double inter_eye_distance = 0.0;
  Point nose_tip;
  double nose_length = 0.0;
  Point mouth_center;
  double mouth_area = 0.0;
  double face_area = 0.0;
  double rotation_applied = 0.0;
};

/// Classifier input: 6 normalized geometric parameters followed by the
/// k x k truncated DCT coefficients of the normalized face crop.
struct FeatureVector {
  std::vector<double> values;
  std::string label;  // empty when unlabeled
};

struct EyePair {
  Point left;
  Point right;
};

/// Tunable bounds for eye-pair selection. The defaults accept common face
/// proportions and are not load-bearing elsewhere.
struct EyeSearchConfig {
  double min_area_fraction = 0.001;  // of face area
  double max_area_fraction = 0.05;
  double max_pair_area_ratio = 3.0;
  double max_dy_fraction = 0.25;  // of face bbox height
};

/// Pick the eye pair among Class-I components: candidates must sit in the
/// upper half of the face bbox with area inside the configured band; the
/// winning pair maximizes horizontal separation subject to the area-ratio
/// and vertical-offset guards. face_bbox must be expressed in the same
/// coordinate frame as the segmentation (the crop frame), with area equal
/// to the skin pixel count.
inline std::optional<EyePair> locate_eyes(const SegmentedFace& seg, const Region& face_bbox,
                                          const EyeSearchConfig& cfg = {}) {
  const double face_area = static_cast<double>(face_bbox.area);
  const double upper_limit = face_bbox.min_y + face_bbox.bbox_height() / 2.0;
  std::vector<const Region*> candidates;
  for (const Region& comp : seg.components) {
    if (comp.centroid_y >= upper_limit) continue;
    const double a = static_cast<double>(comp.area);
    if (a < cfg.min_area_fraction * face_area || a > cfg.max_area_fraction * face_area)
      continue;
    candidates.push_back(&comp);
  }
  if (candidates.size() < 2) return std::nullopt;

  const double max_dy = cfg.max_dy_fraction * face_bbox.bbox_height();
  const Region* best_a = nullptr;
  const Region* best_b = nullptr;
  double best_sep = -1.0;
  double best_dy = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const Region* a = candidates[i];
      const Region* b = candidates[j];
      const double ratio = static_cast<double>(std::max(a->area, b->area)) /
                           static_cast<double>(std::min(a->area, b->area));
      if (ratio > cfg.max_pair_area_ratio) continue;
      const double dy = std::fabs(a->centroid_y - b->centroid_y);
      if (dy > max_dy) continue;
      const double sep = std::fabs(a->centroid_x - b->centroid_x);
      // widest separation wins; ties settle on the smaller vertical offset,
      // then the leftmost pair, purely geometric so label order is moot
      const bool wins =
          sep > best_sep ||
          (sep == best_sep &&
           (dy < best_dy || (dy == best_dy && std::min(a->centroid_x, b->centroid_x) <
                                                  std::min(best_a->centroid_x, best_b->centroid_x))));
      if (wins) {
        best_a = a;
        best_b = b;
        best_sep = sep;
        best_dy = dy;
      }
    }
  }
  if (!best_a) return std::nullopt;
  Point p1{best_a->centroid_x, best_a->centroid_y};
  Point p2{best_b->centroid_x, best_b->centroid_y};
  if (p2.x < p1.x) std::swap(p1, p2);
  return EyePair{p1, p2};
}

struct OrientationResult {
  GrayImage image;
  EyePair eyes;
  double angle = 0.0;  // measured tilt; the image was rotated by -angle
};

/// Level the eye line: measure the tilt between the eye centers and rotate
/// the crop by its negative about the eye midpoint. The returned eye
/// coordinates share the same y within 0.5 px.
inline OrientationResult correct_orientation(const GrayImage& face, const EyePair& eyes) {
  const double dx = eyes.right.x - eyes.left.x;
  const double dy = eyes.right.y - eyes.left.y;
  if (dx == 0.0 && dy == 0.0) throw DataError("correct_orientation: coincident eye centers");
  const double angle = std::atan2(dy, dx);
  const double cx = (eyes.left.x + eyes.right.x) / 2.0;
  const double cy = (eyes.left.y + eyes.right.y) / 2.0;
  OrientationResult out;
  out.angle = angle;
  out.image = (angle == 0.0) ? face : rotate_about(face, -angle, cx, cy);
  out.eyes = eyes;
  rotate_point(-angle, cx, cy, out.eyes.left.x, out.eyes.left.y);
  rotate_point(-angle, cx, cy, out.eyes.right.x, out.eyes.right.y);
  return out;
}

struct NoseMouthSearch {
  bool nose_found = false;
  bool mouth_found = false;
  Point nose_tip;
  double nose_length = 0.0;
  Point mouth_center;
  double mouth_area = 0.0;
};

/// Search the vertical strip centered on the eye midpoint (width = the
/// inter-eye distance) for components strictly below the eye line: the
/// highest is the nose, the next below it the mouth. Components must come
/// from the orientation-corrected Class-I mask. Components sitting on an
/// eye center are re-detections of that eye after resampling, never the
/// nose: anything within a quarter inter-eye distance of either eye is
/// not a candidate (a centered nose is at least half the spacing away).
inline NoseMouthSearch locate_nose_mouth(const std::vector<Region>& components,
                                         const EyePair& eyes) {
  const double mid_x = (eyes.left.x + eyes.right.x) / 2.0;
  const double eye_line_y = (eyes.left.y + eyes.right.y) / 2.0;
  const double ied = std::hypot(eyes.right.x - eyes.left.x, eyes.right.y - eyes.left.y);
  std::vector<const Region*> in_strip;
  for (const Region& comp : components) {
    if (comp.centroid_y <= eye_line_y) continue;
    if (std::fabs(comp.centroid_x - mid_x) > ied / 2.0) continue;
    if (std::hypot(comp.centroid_x - eyes.left.x, comp.centroid_y - eyes.left.y) < ied / 4.0 ||
        std::hypot(comp.centroid_x - eyes.right.x, comp.centroid_y - eyes.right.y) < ied / 4.0)
      continue;
    in_strip.push_back(&comp);
  }
  std::sort(in_strip.begin(), in_strip.end(), [](const Region* a, const Region* b) {
    if (a->centroid_y != b->centroid_y) return a->centroid_y < b->centroid_y;
    return a->centroid_x < b->centroid_x;
  });

  NoseMouthSearch out;
  if (in_strip.empty()) return out;
  const Region* nose = in_strip.front();
  out.nose_found = true;
  out.nose_tip = {nose->centroid_x, nose->centroid_y};
  out.nose_length = nose->centroid_y - eye_line_y;
  for (std::size_t i = 1; i < in_strip.size(); ++i) {
    if (in_strip[i]->centroid_y <= nose->centroid_y) continue;
    out.mouth_found = true;
    out.mouth_center = {in_strip[i]->centroid_x, in_strip[i]->centroid_y};
    out.mouth_area = static_cast<double>(in_strip[i]->area);
    break;
  }
  return out;
}

/// Assemble the classifier input from a complete geometry and the
/// orientation-corrected gray crop: lengths and positions normalized by
/// the crop diagonal, areas by its square, then the top-left dct_k x dct_k
/// coefficients of the 64x64-resized crop.
inline FeatureVector build_feature_vector(const GrayImage& corrected_face,
                                          const FaceGeometry& geometry, int dct_k) {
  if (dct_k < 1 || dct_k > 64) throw DataError("build_feature_vector: dct_k must be in [1, 64]");
  const double diag = std::hypot(static_cast<double>(corrected_face.width),
                                 static_cast<double>(corrected_face.height));
  FeatureVector fv;
  fv.values.reserve(6 + static_cast<std::size_t>(dct_k) * dct_k);
  fv.values.push_back(geometry.inter_eye_distance / diag);
  fv.values.push_back(geometry.nose_length / diag);
  fv.values.push_back(geometry.mouth_center.x / diag);
  fv.values.push_back(geometry.mouth_center.y / diag);
  fv.values.push_back(geometry.mouth_area / (diag * diag));
  fv.values.push_back(geometry.face_area / (diag * diag));

  const GrayImage resized = resize_bilinear(corrected_face, 64, 64);
  const CoefficientBlock block = dct2(resized);
  for (double c : truncate_block(block, dct_k)) fv.values.push_back(c);
  return fv;
}

/// Convenience overload for a raw color crop: converts to grayscale and
/// re-applies the recorded orientation correction about the eye midpoint
/// before building the vector.
inline FeatureVector build_feature_vector(const RgbImage& face_crop,
                                          const FaceGeometry& geometry, int dct_k) {
  GrayImage gray = to_gray(face_crop);
  if (geometry.rotation_applied != 0.0) {
    const double cx = (geometry.eye_left.x + geometry.eye_right.x) / 2.0;
    const double cy = (geometry.eye_left.y + geometry.eye_right.y) / 2.0;
    gray = rotate_about(gray, geometry.rotation_applied, cx, cy);
  }
  return build_feature_vector(gray, geometry, dct_k);
}

}  // namespace facepipe

#endif  // FACEPIPE_FEATURES_HPP
