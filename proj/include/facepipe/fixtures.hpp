#ifndef FACEPIPE_FIXTURES_HPP
#define FACEPIPE_FIXTURES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "facepipe/errors.hpp"
#include "facepipe/features.hpp"
#include "facepipe/image.hpp"
#include "facepipe/regions.hpp"
#include "facepipe/skin.hpp"

namespace facepipe {

/// Parametric synthetic face: a skin-colored ellipse on a plain background
/// with dark discs for the eyes and nose and a dark ellipse for the mouth,
/// rotated in-plane as a whole. Geometry is specified in upright face
/// coordinates (u right, v down, origin at the face center); `rotation`
/// follows the image-frame angle convention of rotate_about.
struct FaceFixtureSpec {
  int canvas_width = 200;
  int canvas_height = 200;
  double face_cx = 100.0;
  double face_cy = 100.0;
  double axis_x = 31.0;  // ellipse semi-axis along u
  double axis_y = 50.0;  // ellipse semi-axis along v
  Rgb skin_color{150, 80, 60};
  Rgb background_color{120, 140, 255};
  Rgb feature_color{40, 40, 40};
  double eye_offset_x = 14.0;  // eyes at (+-eye_offset_x, -eye_offset_y)
  double eye_offset_y = 13.0;
  double eye_radius = 3.5;
  double nose_offset_y = 8.0;  // nose at (0, +nose_offset_y)
  double nose_radius = 3.0;
  double mouth_offset_y = 22.0;  // mouth at (0, +mouth_offset_y)
  double mouth_radius_x = 8.0;
  double mouth_radius_y = 4.0;
  double rotation = 0.0;

  /// Continuous half-extents of the rotated ellipse along the frame axes.
  double extent_x() const {
    const double c = std::cos(rotation), s = std::sin(rotation);
    return std::sqrt(axis_x * axis_x * c * c + axis_y * axis_y * s * s);
  }
  double extent_y() const {
    const double c = std::cos(rotation), s = std::sin(rotation);
    return std::sqrt(axis_x * axis_x * s * s + axis_y * axis_y * c * c);
  }

  void validate() const {
    if (canvas_width < 8 || canvas_height < 8)
      throw DataError("fixture: canvas too small");
    if (axis_x <= 0 || axis_y <= 0 || eye_radius <= 0 || nose_radius <= 0 ||
        mouth_radius_x <= 0 || mouth_radius_y <= 0)
      throw DataError("fixture: non-positive dimension");
    if (!is_skin(skin_color)) throw DataError("fixture: skin color fails the skin rule");
    if (is_skin(background_color))
      throw DataError("fixture: background color passes the skin rule");
    const double feat = luma(feature_color);
    if (feat >= luma(skin_color) || feat >= luma(background_color))
      throw DataError("fixture: feature color must be the darkest intensity");
    // rotated face must stay on the canvas with a 1 px margin
    if (face_cx - extent_x() < 1.0 || face_cx + extent_x() > canvas_width - 2.0 ||
        face_cy - extent_y() < 1.0 || face_cy + extent_y() > canvas_height - 2.0)
      throw DataError("fixture: face extends past the canvas");
    // blob containment (conservative bounding-circle test against the ellipse)
    const auto inside = [&](double u, double v, double r) {
      const double su = (std::abs(u) + r) / axis_x;
      const double sv = (std::abs(v) + r) / axis_y;
      return su * su + sv * sv <= 1.0;
    };
    const double mouth_r = std::max(mouth_radius_x, mouth_radius_y);
    if (!inside(eye_offset_x, -eye_offset_y, eye_radius) ||
        !inside(0.0, nose_offset_y, nose_radius) ||
        !inside(0.0, mouth_offset_y, mouth_r))
      throw DataError("fixture: feature blob extends past the face ellipse");
    // blobs must stay separated and ordered top to bottom
    if (eye_offset_x - eye_radius <= 1.0)
      throw DataError("fixture: eye blobs touch at the midline");
    if (eye_offset_y - eye_radius <= 0.0)
      throw DataError("fixture: eyes must sit in the upper face half");
    if (nose_offset_y - nose_radius <= -eye_offset_y + eye_radius + 2.0)
      throw DataError("fixture: nose too close to the eye line");
    if (mouth_offset_y - mouth_radius_y <= nose_offset_y + nose_radius + 2.0)
      throw DataError("fixture: mouth too close to the nose");
    if (std::cos(rotation) <= 0.0)
      throw DataError("fixture: rotation must keep the face mostly upright");
  }
};

/// Exact geometry recorded at render time. Points are frame coordinates
/// (rotation already applied); scalar lengths are upright-face metrics,
/// which rotation preserves. Pixel counts come from the rasterization.
struct FixtureTruth {
  Point eye_left;
  Point eye_right;
  Point nose_tip;
  Point mouth_center;
  double inter_eye_distance = 0.0;
  double nose_length = 0.0;  // vertical drop from the eye line to the nose center
  double rotation = 0.0;
  double face_cx = 0.0;
  double face_cy = 0.0;
  std::size_t skin_area = 0;
  std::size_t eye_area_left = 0;
  std::size_t eye_area_right = 0;
  std::size_t nose_area = 0;
  std::size_t mouth_area = 0;
};

struct RenderedFixture {
  RgbImage image;
  FixtureTruth truth;
};

inline RenderedFixture render_fixture(const FaceFixtureSpec& spec) {
  spec.validate();
  const double c = std::cos(spec.rotation);
  const double s = std::sin(spec.rotation);

  RenderedFixture out;
  out.image = RgbImage(spec.canvas_width, spec.canvas_height, spec.background_color);
  FixtureTruth& t = out.truth;

  for (int y = 0; y < spec.canvas_height; ++y) {
    for (int x = 0; x < spec.canvas_width; ++x) {
      const double dx = x - spec.face_cx;
      const double dy = y - spec.face_cy;
      // upright face coordinates of this pixel
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      const double eu = u / spec.axis_x, ev = v / spec.axis_y;
      if (eu * eu + ev * ev > 1.0) continue;

      const auto in_disc = [&](double u0, double v0, double r) {
        return (u - u0) * (u - u0) + (v - v0) * (v - v0) <= r * r;
      };
      const double mu = u / spec.mouth_radius_x;
      const double mv = (v - spec.mouth_offset_y) / spec.mouth_radius_y;
      if (in_disc(-spec.eye_offset_x, -spec.eye_offset_y, spec.eye_radius)) {
        out.image.at(x, y) = spec.feature_color;
        ++t.eye_area_left;
      } else if (in_disc(spec.eye_offset_x, -spec.eye_offset_y, spec.eye_radius)) {
        out.image.at(x, y) = spec.feature_color;
        ++t.eye_area_right;
      } else if (in_disc(0.0, spec.nose_offset_y, spec.nose_radius)) {
        out.image.at(x, y) = spec.feature_color;
        ++t.nose_area;
      } else if (mu * mu + mv * mv <= 1.0) {
        out.image.at(x, y) = spec.feature_color;
        ++t.mouth_area;
      } else {
        out.image.at(x, y) = spec.skin_color;
        ++t.skin_area;
      }
    }
  }

  const auto to_frame = [&](double u0, double v0) {
    return Point{spec.face_cx + c * u0 - s * v0, spec.face_cy + s * u0 + c * v0};
  };
  Point a = to_frame(-spec.eye_offset_x, -spec.eye_offset_y);
  Point b = to_frame(spec.eye_offset_x, -spec.eye_offset_y);
  if (b.x < a.x) std::swap(a, b);  // validate() guarantees cos > 0, so this never fires
  t.eye_left = a;
  t.eye_right = b;
  t.nose_tip = to_frame(0.0, spec.nose_offset_y);
  t.mouth_center = to_frame(0.0, spec.mouth_offset_y);
  t.inter_eye_distance = 2.0 * spec.eye_offset_x;
  t.nose_length = spec.nose_offset_y + spec.eye_offset_y;
  t.rotation = spec.rotation;
  t.face_cx = spec.face_cx;
  t.face_cy = spec.face_cy;
  return out;
}

/// Render a frame sequence with the face translating by (dx, dy) per frame
/// over a static background. Throws if any frame pushes the face off the
/// canvas.
inline std::vector<RenderedFixture> render_sequence(const FaceFixtureSpec& spec, int frames,
                                                    double dx, double dy) {
  if (frames < 1) throw DataError("render_sequence: need at least one frame");
  std::vector<RenderedFixture> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    FaceFixtureSpec moved = spec;
    moved.face_cx += dx * f;
    moved.face_cy += dy * f;
    out.push_back(render_fixture(moved));
  }
  return out;
}

}  // namespace facepipe

#endif  // FACEPIPE_FIXTURES_HPP
