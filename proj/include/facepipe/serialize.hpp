#ifndef FACEPIPE_SERIALIZE_HPP
#define FACEPIPE_SERIALIZE_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "facepipe/errors.hpp"
#include "facepipe/features.hpp"
#include "facepipe/fixtures.hpp"
#include "facepipe/fmaca.hpp"
#include "facepipe/pipeline.hpp"
#include "facepipe/rbf.hpp"
#include "facepipe/regions.hpp"

namespace facepipe {

using json = nlohmann::json;

/// Version stamped into every document this library writes. Loaders
/// reject any other value rather than guessing at compatibility.
inline constexpr const char* kSchemaVersion = "1";

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("invalid JSON in " + path.string());
  return j;
}

/// Write-then-rename so readers never observe a partial file.
inline void write_json_atomic(const std::filesystem::path& path, const json& j) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

namespace detail {

inline void check_schema_version(const json& j, const char* what) {
  if (!j.is_object()) throw DataError(std::string(what) + ": document is not a JSON object");
  if (!j.contains("schema_version") || !j["schema_version"].is_string())
    throw DataError(std::string(what) + ": missing schema_version");
  const std::string v = j["schema_version"].get<std::string>();
  if (v != kSchemaVersion)
    throw DataError(std::string(what) + ": unsupported schema_version \"" + v + "\"");
}

template <typename T>
T require(const json& j, const char* key, const char* what) {
  if (!j.contains(key))
    throw DataError(std::string(what) + ": missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string(what) + ": field \"" + key + "\" has the wrong type");
  }
}

}  // namespace detail

// ---- basic geometry -------------------------------------------------------

inline void to_json(json& j, const Point& p) { j = json{{"x", p.x}, {"y", p.y}}; }
inline void from_json(const json& j, Point& p) {
  p.x = detail::require<double>(j, "x", "point");
  p.y = detail::require<double>(j, "y", "point");
}

inline void to_json(json& j, const Region& r) {
  j = json{{"label", r.label},         {"area", r.area},           {"min_x", r.min_x},
           {"min_y", r.min_y},         {"max_x", r.max_x},         {"max_y", r.max_y},
           {"centroid_x", r.centroid_x}, {"centroid_y", r.centroid_y}};
}
inline void from_json(const json& j, Region& r) {
  r.label = detail::require<int>(j, "label", "region");
  r.area = detail::require<std::size_t>(j, "area", "region");
  r.min_x = detail::require<int>(j, "min_x", "region");
  r.min_y = detail::require<int>(j, "min_y", "region");
  r.max_x = detail::require<int>(j, "max_x", "region");
  r.max_y = detail::require<int>(j, "max_y", "region");
  r.centroid_x = detail::require<double>(j, "centroid_x", "region");
  r.centroid_y = detail::require<double>(j, "centroid_y", "region");
}

inline void to_json(json& j, const EyePair& e) {
  j = json{{"left", e.left}, {"right", e.right}};
}
inline void from_json(const json& j, EyePair& e) {
  e.left = detail::require<Point>(j, "left", "eye pair");
  e.right = detail::require<Point>(j, "right", "eye pair");
}

inline void to_json(json& j, const FaceGeometry& g) {
  j = json{{"eye_left", g.eye_left},
           {"eye_right", g.eye_right},
           {"inter_eye_distance", g.inter_eye_distance},
           {"nose_tip", g.nose_tip},
           {"nose_length", g.nose_length},
           {"mouth_center", g.mouth_center},
           {"mouth_area", g.mouth_area},
           {"face_area", g.face_area},
           {"rotation_applied", g.rotation_applied}};
}
inline void from_json(const json& j, FaceGeometry& g) {
  g.eye_left = detail::require<Point>(j, "eye_left", "geometry");
  g.eye_right = detail::require<Point>(j, "eye_right", "geometry");
  g.inter_eye_distance = detail::require<double>(j, "inter_eye_distance", "geometry");
  g.nose_tip = detail::require<Point>(j, "nose_tip", "geometry");
  g.nose_length = detail::require<double>(j, "nose_length", "geometry");
  g.mouth_center = detail::require<Point>(j, "mouth_center", "geometry");
  g.mouth_area = detail::require<double>(j, "mouth_area", "geometry");
  g.face_area = detail::require<double>(j, "face_area", "geometry");
  g.rotation_applied = detail::require<double>(j, "rotation_applied", "geometry");
}

inline void to_json(json& j, const FeatureVector& fv) {
  j = json{{"label", fv.label}, {"values", fv.values}};
}
inline void from_json(const json& j, FeatureVector& fv) {
  fv.label = detail::require<std::string>(j, "label", "feature vector");
  fv.values = detail::require<std::vector<double>>(j, "values", "feature vector");
}

// ---- pipeline config ------------------------------------------------------

inline void to_json(json& j, const PipelineConfig& cfg) {
  j = json{{"face_rule",
            json{{"tolerance", cfg.face_rule.tolerance}, {"min_area", cfg.face_rule.min_area}}},
           {"seed", cfg.seed},
           {"dct_k", cfg.dct_k},
           {"motion_gating", json{{"enabled", cfg.gating.enabled},
                                  {"threshold", cfg.gating.threshold},
                                  {"dilate_radius", cfg.gating.dilate_radius}}}};
}

/// Parsed config plus whether the file said anything about gating; the CLI
/// turns gating on for sequences only when the file left it unspecified.
struct LoadedConfig {
  PipelineConfig config;
  bool gating_enabled_set = false;
};

/// Missing fields keep their defaults; present fields must be well typed.
inline LoadedConfig config_from_json(const json& j) {
  if (!j.is_object()) throw DataError("config: document is not a JSON object");
  LoadedConfig out;
  PipelineConfig& cfg = out.config;
  if (j.contains("face_rule")) {
    const json& fr = j.at("face_rule");
    if (fr.contains("tolerance"))
      cfg.face_rule.tolerance = detail::require<double>(fr, "tolerance", "config");
    if (fr.contains("min_area"))
      cfg.face_rule.min_area = detail::require<std::size_t>(fr, "min_area", "config");
  }
  if (j.contains("seed")) cfg.seed = detail::require<std::uint64_t>(j, "seed", "config");
  if (j.contains("dct_k")) cfg.dct_k = detail::require<int>(j, "dct_k", "config");
  if (j.contains("motion_gating")) {
    const json& mg = j.at("motion_gating");
    if (mg.contains("enabled")) {
      cfg.gating.enabled = detail::require<bool>(mg, "enabled", "config");
      out.gating_enabled_set = true;
    }
    if (mg.contains("threshold"))
      cfg.gating.threshold = detail::require<double>(mg, "threshold", "config");
    if (mg.contains("dilate_radius"))
      cfg.gating.dilate_radius = detail::require<int>(mg, "dilate_radius", "config");
  }
  cfg.validate();
  return out;
}

// ---- detections -----------------------------------------------------------

inline FeatureFailure failure_from_string(const std::string& s) {
  for (FeatureFailure f : {FeatureFailure::none, FeatureFailure::segmentation,
                           FeatureFailure::eyes, FeatureFailure::orientation,
                           FeatureFailure::nose, FeatureFailure::mouth})
    if (s == to_string(f)) return f;
  throw DataError("unknown stage name \"" + s + "\"");
}

inline void to_json(json& j, const Detection& d) {
  j = json{{"frame", d.frame},
           {"bbox", d.face_bbox},
           {"crop", json{{"x", d.crop_x}, {"y", d.crop_y}, {"width", d.crop_w}, {"height", d.crop_h}}},
           {"failed_stage", to_string(d.failed_stage)},
           {"eyes", d.eyes_frame ? json(*d.eyes_frame) : json(nullptr)},
           {"nose", d.nose_frame ? json(*d.nose_frame) : json(nullptr)},
           {"mouth", d.mouth_frame ? json(*d.mouth_frame) : json(nullptr)},
           {"geometry", d.geometry ? json(*d.geometry) : json(nullptr)},
           {"feature", d.feature ? json(*d.feature) : json(nullptr)},
           {"label", d.label},
           {"scores", d.scores}};
}
inline void from_json(const json& j, Detection& d) {
  d.frame = detail::require<int>(j, "frame", "detection");
  d.face_bbox = detail::require<Region>(j, "bbox", "detection");
  const json& crop = j.at("crop");
  d.crop_x = detail::require<int>(crop, "x", "detection crop");
  d.crop_y = detail::require<int>(crop, "y", "detection crop");
  d.crop_w = detail::require<int>(crop, "width", "detection crop");
  d.crop_h = detail::require<int>(crop, "height", "detection crop");
  d.failed_stage = failure_from_string(detail::require<std::string>(j, "failed_stage", "detection"));
  d.eyes_frame.reset();
  d.nose_frame.reset();
  d.mouth_frame.reset();
  d.geometry.reset();
  d.feature.reset();
  if (j.contains("eyes") && !j.at("eyes").is_null()) d.eyes_frame = j.at("eyes").get<EyePair>();
  if (j.contains("nose") && !j.at("nose").is_null()) d.nose_frame = j.at("nose").get<Point>();
  if (j.contains("mouth") && !j.at("mouth").is_null()) d.mouth_frame = j.at("mouth").get<Point>();
  if (j.contains("geometry") && !j.at("geometry").is_null())
    d.geometry = j.at("geometry").get<FaceGeometry>();
  if (j.contains("feature") && !j.at("feature").is_null())
    d.feature = j.at("feature").get<FeatureVector>();
  d.label = detail::require<std::string>(j, "label", "detection");
  d.scores = detail::require<std::vector<double>>(j, "scores", "detection");
}

struct DetectionDocument {
  std::string source;
  std::string mode = "still";  // "still" or "video"
  int frame_count = 1;
  PipelineConfig config;
  std::vector<Detection> detections;
};

inline void to_json(json& j, const DetectionDocument& doc) {
  j = json{{"schema_version", kSchemaVersion}, {"source", doc.source},
           {"mode", doc.mode},                 {"frame_count", doc.frame_count},
           {"config", doc.config},             {"detections", doc.detections}};
}
inline void from_json(const json& j, DetectionDocument& doc) {
  detail::check_schema_version(j, "detections");
  doc.source = detail::require<std::string>(j, "source", "detections");
  doc.mode = detail::require<std::string>(j, "mode", "detections");
  if (doc.mode != "still" && doc.mode != "video")
    throw DataError("detections: mode must be \"still\" or \"video\"");
  doc.frame_count = detail::require<int>(j, "frame_count", "detections");
  doc.config = config_from_json(detail::require<json>(j, "config", "detections")).config;
  doc.detections = detail::require<std::vector<Detection>>(j, "detections", "detections");
}

// ---- feature corpora ------------------------------------------------------

struct FeaturesDocument {
  std::size_t dimension = 0;
  std::vector<FeatureVector> vectors;
};

inline void to_json(json& j, const FeaturesDocument& doc) {
  j = json{{"schema_version", kSchemaVersion},
           {"dimension", doc.dimension},
           {"vectors", doc.vectors}};
}
inline void from_json(const json& j, FeaturesDocument& doc) {
  detail::check_schema_version(j, "features");
  doc.dimension = detail::require<std::size_t>(j, "dimension", "features");
  doc.vectors = detail::require<std::vector<FeatureVector>>(j, "vectors", "features");
  for (const FeatureVector& fv : doc.vectors)
    if (fv.values.size() != doc.dimension)
      throw DataError("features: vector length differs from declared dimension");
}

// ---- models ---------------------------------------------------------------

inline void to_json(json& j, const RbfUnit& u) {
  j = json{{"center", u.center}, {"radius", u.radius}};
}
inline void from_json(const json& j, RbfUnit& u) {
  u.center = detail::require<std::vector<double>>(j, "center", "rbf unit");
  u.radius = detail::require<double>(j, "radius", "rbf unit");
}

inline void to_json(json& j, const RbfNetwork& net) {
  j = json{{"class_labels", net.class_labels},
           {"units", net.units},
           {"output_weights", net.output_weights}};
}
inline void from_json(const json& j, RbfNetwork& net) {
  net.class_labels = detail::require<std::vector<std::string>>(j, "class_labels", "rbf model");
  net.units = detail::require<std::vector<RbfUnit>>(j, "units", "rbf model");
  net.output_weights =
      detail::require<std::vector<std::vector<double>>>(j, "output_weights", "rbf model");
  if (net.class_labels.size() != net.output_weights.size())
    throw DataError("rbf model: output_weights rows differ from class count");
  for (const auto& row : net.output_weights)
    if (row.size() != net.units.size() + 1)
      throw DataError("rbf model: output_weights columns differ from unit count + 1");
}

inline void to_json(json& j, const FmacaNode& node) {
  if (node.is_leaf()) {
    j = json{{"label", node.label},
             {"training_count", node.training_count},
             {"purity", node.purity}};
  } else {
    j = json{{"centers", node.centers}, {"children", node.children}};
  }
}
inline void from_json(const json& j, FmacaNode& node) {
  node = FmacaNode{};
  if (j.contains("children")) {
    node.centers = detail::require<std::vector<std::vector<double>>>(j, "centers", "tree node");
    node.children = detail::require<std::vector<FmacaNode>>(j, "children", "tree node");
    if (node.centers.size() != node.children.size() || node.children.empty())
      throw DataError("tree node: centers and children must align and be non-empty");
  } else {
    node.label = detail::require<std::string>(j, "label", "tree leaf");
    node.training_count = detail::require<std::size_t>(j, "training_count", "tree leaf");
    node.purity = detail::require<double>(j, "purity", "tree leaf");
  }
}

inline void to_json(json& j, const FmacaTree& tree) {
  j = json{{"basins", tree.basins},
           {"max_depth", tree.max_depth},
           {"dimension", tree.dimension},
           {"seed", tree.seed},
           {"root", tree.root}};
}
inline void from_json(const json& j, FmacaTree& tree) {
  tree.basins = detail::require<int>(j, "basins", "tree model");
  tree.max_depth = detail::require<int>(j, "max_depth", "tree model");
  tree.dimension = detail::require<std::size_t>(j, "dimension", "tree model");
  tree.seed = detail::require<std::uint64_t>(j, "seed", "tree model");
  tree.root = detail::require<FmacaNode>(j, "root", "tree model");
}

struct ModelFile {
  std::string kind;  // "rbf" or "fmaca"
  std::uint64_t seed = 0;
  std::size_t training_count = 0;
  std::size_t dimension = 0;
  std::optional<RbfNetwork> rbf;
  std::optional<FmacaTree> fmaca;
};

inline void to_json(json& j, const ModelFile& m) {
  j = json{{"schema_version", kSchemaVersion},
           {"kind", m.kind},
           {"seed", m.seed},
           {"training_count", m.training_count},
           {"dimension", m.dimension},
           {"rbf", m.rbf ? json(*m.rbf) : json(nullptr)},
           {"fmaca", m.fmaca ? json(*m.fmaca) : json(nullptr)}};
}
inline void from_json(const json& j, ModelFile& m) {
  detail::check_schema_version(j, "model");
  m.kind = detail::require<std::string>(j, "kind", "model");
  m.seed = detail::require<std::uint64_t>(j, "seed", "model");
  m.training_count = detail::require<std::size_t>(j, "training_count", "model");
  m.dimension = detail::require<std::size_t>(j, "dimension", "model");
  m.rbf.reset();
  m.fmaca.reset();
  if (m.kind == "rbf") {
    if (!j.contains("rbf") || j.at("rbf").is_null())
      throw DataError("model: kind is rbf but the rbf payload is missing");
    m.rbf = j.at("rbf").get<RbfNetwork>();
  } else if (m.kind == "fmaca") {
    if (!j.contains("fmaca") || j.at("fmaca").is_null())
      throw DataError("model: kind is fmaca but the fmaca payload is missing");
    m.fmaca = j.at("fmaca").get<FmacaTree>();
  } else {
    throw DataError("model: unknown kind \"" + m.kind + "\"");
  }
}

// ---- fixtures -------------------------------------------------------------

inline void to_json(json& j, const Rgb& c) { j = json::array({c.r, c.g, c.b}); }
inline void from_json(const json& j, Rgb& c) {
  if (!j.is_array() || j.size() != 3) throw DataError("color: expected [r, g, b]");
  int v[3];
  for (int i = 0; i < 3; ++i) {
    v[i] = j.at(static_cast<std::size_t>(i)).get<int>();
    if (v[i] < 0 || v[i] > 255) throw DataError("color: channel out of [0, 255]");
  }
  c = Rgb{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]),
          static_cast<std::uint8_t>(v[2])};
}

inline void to_json(json& j, const FaceFixtureSpec& s) {
  j = json{{"canvas_width", s.canvas_width},
           {"canvas_height", s.canvas_height},
           {"face_cx", s.face_cx},
           {"face_cy", s.face_cy},
           {"axis_x", s.axis_x},
           {"axis_y", s.axis_y},
           {"skin_color", s.skin_color},
           {"background_color", s.background_color},
           {"feature_color", s.feature_color},
           {"eye_offset_x", s.eye_offset_x},
           {"eye_offset_y", s.eye_offset_y},
           {"eye_radius", s.eye_radius},
           {"nose_offset_y", s.nose_offset_y},
           {"nose_radius", s.nose_radius},
           {"mouth_offset_y", s.mouth_offset_y},
           {"mouth_radius_x", s.mouth_radius_x},
           {"mouth_radius_y", s.mouth_radius_y},
           {"rotation", s.rotation}};
}
inline void from_json(const json& j, FaceFixtureSpec& s) {
  s = FaceFixtureSpec{};
  const auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  opt("canvas_width", s.canvas_width);
  opt("canvas_height", s.canvas_height);
  opt("face_cx", s.face_cx);
  opt("face_cy", s.face_cy);
  opt("axis_x", s.axis_x);
  opt("axis_y", s.axis_y);
  opt("skin_color", s.skin_color);
  opt("background_color", s.background_color);
  opt("feature_color", s.feature_color);
  opt("eye_offset_x", s.eye_offset_x);
  opt("eye_offset_y", s.eye_offset_y);
  opt("eye_radius", s.eye_radius);
  opt("nose_offset_y", s.nose_offset_y);
  opt("nose_radius", s.nose_radius);
  opt("mouth_offset_y", s.mouth_offset_y);
  opt("mouth_radius_x", s.mouth_radius_x);
  opt("mouth_radius_y", s.mouth_radius_y);
  opt("rotation", s.rotation);
  s.validate();
}

}  // namespace facepipe

#endif  // FACEPIPE_SERIALIZE_HPP
