// facepipe: batch driver for the face-detection pipeline library.
//
// Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data or model error.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <facepipe/facepipe.hpp>

namespace fs = std::filesystem;
namespace fp = facepipe;

namespace {

// ---- seeds ------------------------------------------------------------

// Flag beats FACEPIPE_SEED, which beats the config file value.
std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("FACEPIPE_SEED");
  if (!raw || !*raw) return std::nullopt;
  std::uint64_t value = 0;
  const char* end = raw + std::string(raw).size();
  auto [ptr, ec] = std::from_chars(raw, end, value);
  if (ec != std::errc() || ptr != end)
    throw CLI::ValidationError("FACEPIPE_SEED", "not an unsigned integer: " + std::string(raw));
  return value;
}

// ---- atomic writes ------------------------------------------------------

void save_ppm_atomic(const fp::RgbImage& img, const fs::path& path,
                     fp::PpmFormat format = fp::PpmFormat::P6) {
  fs::path tmp = path;
  tmp += ".tmp";
  fp::save_ppm(img, tmp.string(), format);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw fp::IoError("cannot rename " + tmp.string() + " to " + path.string());
}

// Single input: `out` is the file. Several inputs: `out` is a directory
// and each input gets <stem><suffix> inside it.
fs::path resolve_output(const fs::path& out, bool multiple, const fs::path& input,
                        const std::string& suffix) {
  if (!multiple && !fs::is_directory(out)) return out;
  fs::create_directories(out);
  return out / (input.stem().string() + suffix);
}

// ---- overlays -----------------------------------------------------------

void put_pixel(fp::RgbImage& img, int x, int y, fp::Rgb c) {
  if (img.in_bounds(x, y)) img.at(x, y) = c;
}

void draw_box(fp::RgbImage& img, const fp::Region& r, fp::Rgb c) {
  for (int t = 0; t < 3; ++t) {  // 3 px thick, growing outward from the bbox
    const int x0 = r.min_x - t, x1 = r.max_x + t;
    const int y0 = r.min_y - t, y1 = r.max_y + t;
    for (int x = x0; x <= x1; ++x) {
      put_pixel(img, x, y0, c);
      put_pixel(img, x, y1, c);
    }
    for (int y = y0; y <= y1; ++y) {
      put_pixel(img, x0, y, c);
      put_pixel(img, x1, y, c);
    }
  }
}

void draw_crosshair(fp::RgbImage& img, const fp::Point& p, fp::Rgb c, int half = 4) {
  const int px = static_cast<int>(std::lround(p.x));
  const int py = static_cast<int>(std::lround(p.y));
  for (int d = -half; d <= half; ++d) {
    put_pixel(img, px + d, py, c);
    put_pixel(img, px, py + d, c);
  }
}

fp::RgbImage annotate(const fp::RgbImage& frame, const std::vector<fp::Detection>& dets,
                      int frame_index) {
  fp::RgbImage out = frame;
  for (const fp::Detection& d : dets) {
    if (d.frame != frame_index) continue;
    draw_box(out, d.face_bbox, {255, 0, 0});
    if (d.eyes_frame) {
      draw_crosshair(out, d.eyes_frame->left, {0, 255, 0});
      draw_crosshair(out, d.eyes_frame->right, {0, 255, 0});
    }
    if (d.nose_frame) draw_crosshair(out, *d.nose_frame, {0, 0, 255});
    if (d.mouth_frame) draw_crosshair(out, *d.mouth_frame, {255, 255, 0});
  }
  return out;
}

// ---- models ---------------------------------------------------------------

fp::ModelFile load_model(const fs::path& path) {
  return fp::load_json(path).get<fp::ModelFile>();
}

fp::ClassifyFn make_classifier(const fp::ModelFile& model) {
  if (model.rbf) {
    const fp::RbfNetwork net = *model.rbf;
    return [net](const fp::FeatureVector& fv) {
      const fp::ClassifyResult r = fp::classify(net, fv);
      return std::make_pair(r.label, r.scores);
    };
  }
  const fp::FmacaTree tree = *model.fmaca;
  return [tree](const fp::FeatureVector& fv) {
    const fp::TreePrediction p = fp::predict(tree, fv);
    return std::make_pair(p.label, std::vector<double>{p.leaf_purity});
  };
}

// ---- shared option state ----------------------------------------------

struct DetectOptions {
  std::vector<std::string> inputs;
  std::string config_path;
  std::string model_path;
  std::string out_json;
  std::string out_annotated;
  std::string gating = "auto";
  bool video = false;
  bool emit_features = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<std::uint64_t> min_area;
  std::optional<int> dct_k;
  std::optional<double> motion_threshold;
  std::optional<int> dilate_radius;
};

fp::PipelineConfig build_config(const DetectOptions& opt) {
  fp::PipelineConfig cfg;
  bool gating_from_config = false;
  if (!opt.config_path.empty()) {
    const fp::LoadedConfig loaded = fp::config_from_json(fp::load_json(opt.config_path));
    cfg = loaded.config;
    gating_from_config = loaded.gating_enabled_set;
  }
  if (opt.seed)
    cfg.seed = *opt.seed;
  else if (auto env = env_seed())
    cfg.seed = *env;
  if (opt.tolerance) cfg.face_rule.tolerance = *opt.tolerance;
  if (opt.min_area) cfg.face_rule.min_area = static_cast<std::size_t>(*opt.min_area);
  if (opt.dct_k) cfg.dct_k = *opt.dct_k;
  if (opt.motion_threshold) cfg.gating.threshold = *opt.motion_threshold;
  if (opt.dilate_radius) cfg.gating.dilate_radius = *opt.dilate_radius;
  if (opt.gating == "on")
    cfg.gating.enabled = true;
  else if (opt.gating == "off")
    cfg.gating.enabled = false;
  else if (!gating_from_config)
    cfg.gating.enabled = opt.video;  // sequences gate by default, stills do not
  cfg.validate();
  return cfg;
}

void print_detections(const std::string& source, const std::vector<fp::Detection>& dets) {
  std::cout << source << ": " << dets.size() << " detection(s)\n";
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const fp::Detection& d = dets[i];
    std::cout << "  [" << i << "] frame=" << d.frame << " bbox=(" << d.face_bbox.min_x << ","
              << d.face_bbox.min_y << ")-(" << d.face_bbox.max_x << "," << d.face_bbox.max_y
              << ") area=" << d.face_bbox.area;
    if (d.failed_stage != fp::FeatureFailure::none)
      std::cout << " failed_stage=" << fp::to_string(d.failed_stage);
    if (!d.label.empty()) std::cout << " label=" << d.label;
    std::cout << "\n";
  }
}

void strip_features(std::vector<fp::Detection>& dets) {
  for (fp::Detection& d : dets) d.feature.reset();
}

std::string join_paths(const std::vector<std::string>& paths) {
  std::string out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (i) out += ",";
    out += paths[i];
  }
  return out;
}

// ---- subcommands ---------------------------------------------------------

int cmd_detect(const DetectOptions& opt) {
  const fp::PipelineConfig cfg = build_config(opt);
  fp::ClassifyFn classify;
  if (!opt.model_path.empty()) classify = make_classifier(load_model(opt.model_path));

  if (opt.video) {
    std::vector<fp::RgbImage> frames;
    frames.reserve(opt.inputs.size());
    for (const std::string& path : opt.inputs) frames.push_back(fp::load_ppm(path));
    const auto per_frame = fp::detect_video(frames, cfg, classify);

    fp::DetectionDocument doc;
    doc.source = join_paths(opt.inputs);
    doc.mode = "video";
    doc.frame_count = static_cast<int>(frames.size());
    doc.config = cfg;
    for (const auto& dets : per_frame)
      doc.detections.insert(doc.detections.end(), dets.begin(), dets.end());
    if (!opt.emit_features) strip_features(doc.detections);

    for (std::size_t t = 0; t < per_frame.size(); ++t)
      print_detections(opt.inputs[t], per_frame[t]);
    if (!opt.out_json.empty()) fp::write_json_atomic(opt.out_json, fp::json(doc));
    if (!opt.out_annotated.empty()) {
      for (std::size_t t = 0; t < frames.size(); ++t) {
        const fs::path out = resolve_output(opt.out_annotated, true, opt.inputs[t], ".annotated.ppm");
        save_ppm_atomic(annotate(frames[t], per_frame[t], static_cast<int>(t)), out);
      }
    }
    return 0;
  }

  const bool multiple = opt.inputs.size() > 1;
  for (const std::string& path : opt.inputs) {
    const fp::RgbImage img = fp::load_ppm(path);
    std::vector<fp::Detection> dets = fp::detect_still(img, cfg, classify);
    print_detections(path, dets);

    fp::DetectionDocument doc;
    doc.source = path;
    doc.mode = "still";
    doc.frame_count = 1;
    doc.config = cfg;
    doc.detections = dets;
    if (!opt.emit_features) strip_features(doc.detections);
    if (!opt.out_json.empty())
      fp::write_json_atomic(resolve_output(opt.out_json, multiple, path, ".json"), fp::json(doc));
    if (!opt.out_annotated.empty())
      save_ppm_atomic(annotate(img, dets, 0),
                      resolve_output(opt.out_annotated, multiple, path, ".annotated.ppm"));
  }
  return 0;
}

struct TrainOptions {
  std::string features_path;
  std::vector<std::string> image_dirs;
  std::string classifier;
  std::string out_model;
  std::string config_path;
  int units = 8;
  int basins = 4;
  int max_depth = 32;
  std::optional<std::uint64_t> seed;
  bool run_log = false;
};

std::vector<fp::FeatureVector> gather_training_vectors(const TrainOptions& opt,
                                                       std::uint64_t seed) {
  if (!opt.features_path.empty())
    return fp::load_json(opt.features_path).get<fp::FeaturesDocument>().vectors;

  DetectOptions det;
  det.config_path = opt.config_path;
  det.seed = seed;
  const fp::PipelineConfig cfg = build_config(det);

  std::vector<fp::FeatureVector> vectors;
  for (const std::string& dir : opt.image_dirs) {
    if (!fs::is_directory(dir)) throw fp::IoError("not a directory: " + dir);
    const std::string label = fs::path(dir).filename().string();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".ppm")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      std::size_t found = 0;
      for (const fp::Detection& d : fp::detect_still(fp::load_ppm(file.string()), cfg)) {
        if (!d.feature) continue;
        fp::FeatureVector fv = *d.feature;
        fv.label = label;
        vectors.push_back(std::move(fv));
        ++found;
      }
      if (found == 0)
        std::cerr << "warning: no usable face in " << file.string() << "\n";
    }
  }
  return vectors;
}

int cmd_train(const TrainOptions& opt) {
  std::uint64_t seed = 0;
  if (opt.seed)
    seed = *opt.seed;
  else if (auto env = env_seed())
    seed = *env;

  const std::vector<fp::FeatureVector> train = gather_training_vectors(opt, seed);
  if (train.empty()) throw fp::DataError("train: no training vectors");

  std::map<std::string, std::size_t> class_counts;
  for (const fp::FeatureVector& fv : train) ++class_counts[fv.label];
  std::cout << "training vectors: " << train.size() << " (dimension "
            << train.front().values.size() << ")\n";
  for (const auto& [label, count] : class_counts)
    std::cout << "  class " << label << ": " << count << "\n";

  fp::ModelFile model;
  model.seed = seed;
  model.training_count = train.size();
  model.dimension = train.front().values.size();

  std::size_t correct = 0;
  if (opt.classifier == "rbf") {
    model.kind = "rbf";
    model.rbf = fp::train_rbf(train, opt.units, seed);
    if (opt.run_log) {
      // identical parameters and seed reproduce the center selection runs
      fp::WeightedPoints data;
      for (const fp::FeatureVector& fv : train) data.points.push_back(fv.values);
      data.weights.assign(train.size(), 1.0);
      const fp::DistinctKmeansResult km =
          fp::distinct_kmeans(data, opt.units, opt.units, 4, seed);
      for (const fp::KmeansRunRecord& r : km.runs)
        std::cout << "run k=" << r.k_requested << " restart=" << r.restart
                  << " effective_k=" << r.k << " iterations=" << r.iterations << " ss=" << r.ss
                  << " mse=" << (r.mse_undefined ? std::string("undefined") : std::to_string(r.mse))
                  << "\n";
    }
    for (const fp::FeatureVector& fv : train)
      if (fp::classify(*model.rbf, fv).label == fv.label) ++correct;
    std::cout << "units: " << model.rbf->units.size() << "\n";
  } else {
    model.kind = "fmaca";
    model.fmaca = fp::build_tree(train, opt.basins, seed, opt.max_depth);
    const fp::TreeStats stats = fp::tree_stats(*model.fmaca);
    std::cout << "tree depth " << stats.depth << ", " << stats.node_count << " nodes, "
              << stats.leaf_count << " leaves (" << stats.impure_leaves << " impure)\n";
    for (const fp::FeatureVector& fv : train)
      if (fp::predict(*model.fmaca, fv).label == fv.label) ++correct;
  }
  std::cout << "training accuracy: " << correct << "/" << train.size() << "\n";

  fp::write_json_atomic(opt.out_model, fp::json(model));
  std::cout << "model written to " << opt.out_model << "\n";
  return 0;
}

struct ClassifyOptions {
  std::string model_path;
  std::string features_path;
  std::string out_json;
};

int cmd_classify(const ClassifyOptions& opt) {
  const fp::ModelFile model = load_model(opt.model_path);
  const fp::FeaturesDocument features = fp::load_json(opt.features_path).get<fp::FeaturesDocument>();
  if (features.vectors.empty()) throw fp::DataError("classify: empty feature file");
  if (features.dimension != model.dimension)
    throw fp::DataError("classify: feature dimension " + std::to_string(features.dimension) +
                        " does not match model dimension " + std::to_string(model.dimension));

  fp::json results = fp::json::array();
  std::size_t labeled = 0, correct = 0;
  for (std::size_t i = 0; i < features.vectors.size(); ++i) {
    const fp::FeatureVector& fv = features.vectors[i];
    fp::json row{{"index", i}, {"true_label", fv.label}};
    if (model.rbf) {
      const fp::ClassifyResult r = fp::classify(*model.rbf, fv);
      row["predicted"] = r.label;
      row["scores"] = r.scores;
    } else {
      const fp::TreePrediction p = fp::predict(*model.fmaca, fv);
      row["predicted"] = p.label;
      row["leaf_purity"] = p.leaf_purity;
    }
    if (!fv.label.empty()) {
      ++labeled;
      if (row["predicted"].get<std::string>() == fv.label) ++correct;
    }
    std::cout << "[" << i << "] " << row["predicted"].get<std::string>();
    if (!fv.label.empty()) std::cout << " (true " << fv.label << ")";
    std::cout << "\n";
    results.push_back(std::move(row));
  }
  if (labeled > 0)
    std::cout << "accuracy: " << correct << "/" << labeled << "\n";

  if (!opt.out_json.empty()) {
    fp::json doc{{"schema_version", fp::kSchemaVersion},
                 {"model_kind", model.kind},
                 {"results", results}};
    if (labeled > 0)
      doc["accuracy"] = static_cast<double>(correct) / static_cast<double>(labeled);
    fp::write_json_atomic(opt.out_json, doc);
  }
  return 0;
}

struct SegmentOptions {
  std::string input;
  std::string out_levels;
  std::string out_mask;
  std::optional<std::uint64_t> seed;
};

int cmd_segment(const SegmentOptions& opt) {
  std::uint64_t seed = 0;
  if (opt.seed)
    seed = *opt.seed;
  else if (auto env = env_seed())
    seed = *env;
  const fp::GrayImage gray = fp::to_gray(fp::load_ppm(opt.input));
  const fp::SegmentedFace seg = fp::segment_face(gray, seed);

  std::cout << opt.input << ": " << seg.class_centers.size() << " classes, centers";
  for (double c : seg.class_centers) std::cout << " " << c;
  std::cout << "\n" << seg.components.size() << " dark-class component(s)";
  if (seg.degenerate) std::cout << " (degenerate segmentation)";
  std::cout << "\n";

  if (!opt.out_levels.empty()) {
    fp::GrayImage levels(gray.width, gray.height);
    for (int y = 0; y < gray.height; ++y)
      for (int x = 0; x < gray.width; ++x)
        levels.at(x, y) = seg.class_centers[static_cast<std::size_t>(seg.class_map.at(x, y))];
    save_ppm_atomic(fp::gray_to_rgb(levels), opt.out_levels);
  }
  if (!opt.out_mask.empty()) save_ppm_atomic(fp::mask_to_rgb(seg.class_i_mask), opt.out_mask);
  return 0;
}

struct EdgesOptions {
  std::string input;
  std::string op = "sobel";
  std::string out;
  double sigma = 1.0;
  double floor = 0.0;
};

int cmd_edges(const EdgesOptions& opt) {
  const fp::GrayImage gray = fp::to_gray(fp::load_ppm(opt.input));
  fp::RgbImage out;
  if (opt.op == "log") {
    out = fp::mask_to_rgb(fp::log_zero_crossings(gray, opt.sigma, opt.floor));
  } else {
    fp::GrayImage mag = fp::gradient_edges(gray, fp::EdgeOperator::by_name(opt.op));
    double peak = 0.0;
    for (double v : mag.pixels) peak = std::max(peak, v);
    if (peak > 0.0)
      for (double& v : mag.pixels) v = v * 255.0 / peak;  // full-range display scaling
    out = fp::gray_to_rgb(mag);
  }
  save_ppm_atomic(out, opt.out);
  std::cout << "edge map written to " << opt.out << "\n";
  return 0;
}

struct DiffOptions {
  std::string input_a;
  std::string input_b;
  std::string out;
};

int cmd_diff(const DiffOptions& opt) {
  const fp::GrayImage a = fp::to_gray(fp::load_ppm(opt.input_a));
  const fp::GrayImage b = fp::to_gray(fp::load_ppm(opt.input_b));
  const fp::GrayImage diff = fp::difference_image(a, b);
  save_ppm_atomic(fp::gray_to_rgb(diff), opt.out);
  std::cout << "difference image written to " << opt.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"face detection pipeline driver"};
  app.require_subcommand(1);

  DetectOptions det;
  CLI::App* detect = app.add_subcommand("detect", "detect faces in PPM stills or frame sequences");
  detect->add_option("inputs", det.inputs, "input PPM file(s)")->required()->expected(-1);
  detect->add_flag("--video", det.video, "treat inputs as ordered frames of one sequence");
  detect->add_option("--config", det.config_path, "pipeline config JSON");
  detect->add_option("--model", det.model_path, "classifier model JSON");
  detect->add_option("--out-json", det.out_json, "detection document path (directory when several inputs)");
  detect->add_option("--out-annotated", det.out_annotated, "annotated PPM path (directory when several inputs)");
  detect->add_flag("--emit-features", det.emit_features, "keep feature vectors in the JSON output");
  detect->add_option("--seed", det.seed, "segmentation seed (beats FACEPIPE_SEED and config)");
  detect->add_option("--tolerance", det.tolerance, "golden-ratio band half-width");
  detect->add_option("--min-area", det.min_area, "minimum candidate area in pixels");
  detect->add_option("--dct-k", det.dct_k, "DCT truncation size, 1..64");
  detect->add_option("--gating", det.gating, "motion gating: auto, on, off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  detect->add_option("--motion-threshold", det.motion_threshold, "frame-difference threshold");
  detect->add_option("--dilate-radius", det.dilate_radius, "motion mask dilation radius");

  TrainOptions tr;
  CLI::App* train = app.add_subcommand("train", "train a classifier from features or labeled image dirs");
  auto* tr_features = train->add_option("--features", tr.features_path, "feature corpus JSON");
  train->add_option("--image-dir", tr.image_dirs, "directory of PPMs, its name is the class label")
      ->excludes(tr_features);
  train->add_option("--classifier", tr.classifier, "rbf or fmaca")
      ->required()
      ->check(CLI::IsMember({"rbf", "fmaca"}));
  train->add_option("--out-model", tr.out_model, "model JSON output path")->required();
  train->add_option("--config", tr.config_path, "pipeline config JSON (image-dir mode)");
  train->add_option("--units", tr.units, "RBF hidden unit count")->check(CLI::PositiveNumber);
  train->add_option("--basins", tr.basins, "top-level basin bound for the tree");
  train->add_option("--max-depth", tr.max_depth, "tree depth cap");
  train->add_option("--seed", tr.seed, "training seed (beats FACEPIPE_SEED)");
  train->add_flag("--run-log", tr.run_log, "print the clustering run log (rbf)");

  ClassifyOptions cl;
  CLI::App* classify = app.add_subcommand("classify", "classify stored feature vectors");
  classify->add_option("--model", cl.model_path, "model JSON")->required();
  classify->add_option("--features", cl.features_path, "feature corpus JSON")->required();
  classify->add_option("--out-json", cl.out_json, "results JSON path");

  SegmentOptions sg;
  CLI::App* segment = app.add_subcommand("segment", "three-class intensity segmentation of one image");
  segment->add_option("input", sg.input, "input PPM")->required();
  segment->add_option("--out", sg.out_levels, "per-class intensity visualization PPM");
  segment->add_option("--out-mask", sg.out_mask, "darkest-class mask PPM");
  segment->add_option("--seed", sg.seed, "seed (beats FACEPIPE_SEED)");

  EdgesOptions ed;
  CLI::App* edges = app.add_subcommand("edges", "gradient or zero-crossing edge map of one image");
  edges->add_option("input", ed.input, "input PPM")->required();
  edges->add_option("--op", ed.op, "roberts, prewitt, sobel, or log")
      ->check(CLI::IsMember({"roberts", "prewitt", "sobel", "log"}));
  edges->add_option("--sigma", ed.sigma, "LoG sigma")->check(CLI::PositiveNumber);
  edges->add_option("--floor", ed.floor, "LoG response magnitude floor");
  edges->add_option("--out", ed.out, "output PPM")->required();

  DiffOptions df;
  CLI::App* diff = app.add_subcommand("diff", "absolute grayscale difference of two images");
  diff->add_option("a", df.input_a, "first PPM")->required();
  diff->add_option("b", df.input_b, "second PPM")->required();
  diff->add_option("--out", df.out, "output PPM")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*detect) return cmd_detect(det);
    if (*train) {
      if (tr.features_path.empty() == tr.image_dirs.empty())
        throw CLI::ValidationError("train", "give exactly one of --features or --image-dir");
      return cmd_train(tr);
    }
    if (*classify) return cmd_classify(cl);
    if (*segment) return cmd_segment(sg);
    if (*edges) return cmd_edges(ed);
    if (*diff) return cmd_diff(df);
    return 1;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fp::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const fp::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
