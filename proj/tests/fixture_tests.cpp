#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <facepipe/fixtures.hpp>

#include "test_support.hpp"

using namespace facepipe;
using Catch::Matchers::WithinAbs;

namespace {

bool same_color(const Rgb& a, const Rgb& b) { return a.r == b.r && a.g == b.g && a.b == b.b; }

BinaryMask color_mask(const RgbImage& img, const Rgb& color) {
  BinaryMask m(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    m.bits[i] = same_color(img.pixels[i], color) ? 1 : 0;
  return m;
}

struct BlobSet {
  Region eye_left, eye_right, nose, mouth;
};

// group the feature-colored pixels into the four blobs by position
BlobSet feature_blobs(const RgbImage& img, const Rgb& feature_color) {
  auto [labels, regions] = label_components(color_mask(img, feature_color), 8);
  (void)labels;
  REQUIRE(regions.size() == 4);
  std::sort(regions.begin(), regions.end(),
            [](const Region& a, const Region& b) { return a.centroid_y < b.centroid_y; });
  BlobSet out;
  out.eye_left = regions[0].centroid_x < regions[1].centroid_x ? regions[0] : regions[1];
  out.eye_right = regions[0].centroid_x < regions[1].centroid_x ? regions[1] : regions[0];
  out.nose = regions[2];
  out.mouth = regions[3];
  return out;
}

}  // namespace

TEST_CASE("default fixture: colors, counts, and exact truth") {
  const FaceFixtureSpec spec;
  const RenderedFixture fx = render_fixture(spec);
  REQUIRE(fx.image.width == 200);
  REQUIRE(fx.image.height == 200);

  std::size_t skin = 0, feature = 0, background = 0;
  for (const Rgb& px : fx.image.pixels) {
    if (same_color(px, spec.skin_color)) ++skin;
    else if (same_color(px, spec.feature_color)) ++feature;
    else if (same_color(px, spec.background_color)) ++background;
    else FAIL("unexpected color in fixture");
  }
  const FixtureTruth& t = fx.truth;
  CHECK(skin == t.skin_area);
  CHECK(feature == t.eye_area_left + t.eye_area_right + t.nose_area + t.mouth_area);
  CHECK(skin + feature + background == 40000u);
  CHECK(t.skin_area > 3000u);  // a solid face, well past any speckle threshold

  // upright render: truth is exact in frame coordinates
  CHECK(t.eye_left == Point{86.0, 87.0});
  CHECK(t.eye_right == Point{114.0, 87.0});
  CHECK(t.nose_tip == Point{100.0, 108.0});
  CHECK(t.mouth_center == Point{100.0, 122.0});
  CHECK(t.inter_eye_distance == 28.0);
  CHECK(t.nose_length == 21.0);
  CHECK(t.rotation == 0.0);
}

TEST_CASE("upright raster blobs sit exactly on the truth points") {
  const FaceFixtureSpec spec;
  const RenderedFixture fx = render_fixture(spec);
  const BlobSet blobs = feature_blobs(fx.image, spec.feature_color);
  // discs around integer centers rasterize symmetrically
  CHECK(blobs.eye_left.centroid_x == fx.truth.eye_left.x);
  CHECK(blobs.eye_left.centroid_y == fx.truth.eye_left.y);
  CHECK(blobs.eye_right.centroid_x == fx.truth.eye_right.x);
  CHECK(blobs.nose.centroid_x == fx.truth.nose_tip.x);
  CHECK(blobs.nose.centroid_y == fx.truth.nose_tip.y);
  CHECK(blobs.mouth.centroid_y == fx.truth.mouth_center.y);
  CHECK(blobs.eye_left.area == fx.truth.eye_area_left);
  CHECK(blobs.eye_right.area == fx.truth.eye_area_right);
  CHECK(blobs.nose.area == fx.truth.nose_area);
  CHECK(blobs.mouth.area == fx.truth.mouth_area);
}

TEST_CASE("rotated raster blobs track the truth within half a pixel") {
  for (double rot : {-0.4, -0.15, 0.2, 0.35}) {
    FaceFixtureSpec spec;
    spec.rotation = rot;
    const RenderedFixture fx = render_fixture(spec);
    const BlobSet blobs = feature_blobs(fx.image, spec.feature_color);
    CHECK_THAT(blobs.eye_left.centroid_x, WithinAbs(fx.truth.eye_left.x, 0.5));
    CHECK_THAT(blobs.eye_left.centroid_y, WithinAbs(fx.truth.eye_left.y, 0.5));
    CHECK_THAT(blobs.eye_right.centroid_x, WithinAbs(fx.truth.eye_right.x, 0.5));
    CHECK_THAT(blobs.eye_right.centroid_y, WithinAbs(fx.truth.eye_right.y, 0.5));
    CHECK_THAT(blobs.nose.centroid_x, WithinAbs(fx.truth.nose_tip.x, 0.5));
    CHECK_THAT(blobs.nose.centroid_y, WithinAbs(fx.truth.nose_tip.y, 0.5));
    CHECK_THAT(blobs.mouth.centroid_x, WithinAbs(fx.truth.mouth_center.x, 0.5));
    CHECK_THAT(blobs.mouth.centroid_y, WithinAbs(fx.truth.mouth_center.y, 0.5));
  }
}

TEST_CASE("truth respects rotation invariants") {
  for (double rot : {-0.3, 0.0, 0.12, 0.4}) {
    FaceFixtureSpec spec;
    spec.rotation = rot;
    const FixtureTruth t = render_fixture(spec).truth;
    // scalar metrics are upright quantities, unchanged by rotation
    CHECK(t.inter_eye_distance == 28.0);
    CHECK(t.nose_length == 21.0);
    // frame-space eye distance matches, and the eye line tilts by exactly rot
    const double dx = t.eye_right.x - t.eye_left.x;
    const double dy = t.eye_right.y - t.eye_left.y;
    CHECK_THAT(std::hypot(dx, dy), WithinAbs(28.0, 1e-12));
    CHECK_THAT(std::atan2(dy, dx), WithinAbs(rot, 1e-12));
    // eye midpoint stays on the rotated face axis
    const double mid_x = (t.eye_left.x + t.eye_right.x) / 2.0;
    const double mid_y = (t.eye_left.y + t.eye_right.y) / 2.0;
    CHECK_THAT(mid_x, WithinAbs(100.0 + 13.0 * std::sin(rot), 1e-12));
    CHECK_THAT(mid_y, WithinAbs(100.0 - 13.0 * std::cos(rot), 1e-12));
  }
}

TEST_CASE("the face proportions fall in the golden band") {
  const FaceFixtureSpec spec;
  const double ratio = spec.axis_y / spec.axis_x;
  CHECK(ratio > kGoldenRatio - 0.65);
  CHECK(ratio < kGoldenRatio + 0.65);
}

TEST_CASE("sequences translate the face over a static background") {
  FaceFixtureSpec spec;
  const auto frames = render_sequence(spec, 4, 3.0, -2.0);
  REQUIRE(frames.size() == 4);
  for (int f = 0; f < 4; ++f) {
    CHECK(frames[static_cast<std::size_t>(f)].truth.face_cx == 100.0 + 3.0 * f);
    CHECK(frames[static_cast<std::size_t>(f)].truth.face_cy == 100.0 - 2.0 * f);
  }
  // far corners never change
  const GrayImage diff =
      difference_image(to_gray(frames[0].image), to_gray(frames[3].image));
  CHECK(diff.at(5, 5) == 0.0);
  CHECK(diff.at(194, 194) == 0.0);
  // something did move
  double total = 0.0;
  for (double d : diff.pixels) total += d;
  CHECK(total > 0.0);
}

TEST_CASE("sequence guards") {
  const FaceFixtureSpec spec;
  CHECK_THROWS_AS(render_sequence(spec, 0, 1.0, 0.0), DataError);
  // frame 29 would put the center at x = 187 and the rim past the border
  CHECK_THROWS_AS(render_sequence(spec, 30, 3.0, 0.0), DataError);
}

TEST_CASE("fixture validation rejects bad geometry") {
  const auto expect_throw = [](auto mutate) {
    FaceFixtureSpec spec;
    mutate(spec);
    CHECK_THROWS_AS(render_fixture(spec), DataError);
  };
  expect_throw([](FaceFixtureSpec& s) { s.canvas_width = 7; });
  expect_throw([](FaceFixtureSpec& s) { s.axis_x = 0.0; });
  expect_throw([](FaceFixtureSpec& s) { s.skin_color = {0, 0, 255}; });
  expect_throw([](FaceFixtureSpec& s) { s.background_color = {150, 80, 60}; });
  expect_throw([](FaceFixtureSpec& s) { s.feature_color = {200, 200, 200}; });
  expect_throw([](FaceFixtureSpec& s) { s.face_cx = 20.0; });          // rim off canvas
  expect_throw([](FaceFixtureSpec& s) { s.eye_offset_x = 29.0; });     // eye outside ellipse
  expect_throw([](FaceFixtureSpec& s) { s.eye_offset_x = 4.0; });      // eyes touch midline
  expect_throw([](FaceFixtureSpec& s) { s.eye_offset_y = 3.0; });      // eyes below center
  expect_throw([](FaceFixtureSpec& s) { s.nose_offset_y = -5.0; });    // nose into eye line
  expect_throw([](FaceFixtureSpec& s) { s.mouth_offset_y = 14.0; });   // mouth into nose
  expect_throw([](FaceFixtureSpec& s) { s.rotation = 1.6; });          // past upright
}

TEST_CASE("default and tilted specs validate") {
  FaceFixtureSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.rotation = 0.4;
  CHECK_NOTHROW(spec.validate());
  spec.rotation = -0.4;
  CHECK_NOTHROW(spec.validate());
}
