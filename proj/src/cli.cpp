// Copyright 2026 The MobileDenseNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "mdn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "mdn/analysis.hpp"
#include "mdn/anchors.hpp"
#include "mdn/config.hpp"
#include "mdn/datasets.hpp"
#include "mdn/evaluation.hpp"
#include "mdn/inference.hpp"
#include "mdn/model.hpp"
#include "mdn/training.hpp"

namespace mdn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::string out;
  std::string images;
  std::string dataset;
  std::string thresholds;
  int count = 100;
  int size = 320;
};

// Removes whatever a failed command left behind in its output directory.
class OutputScope {
 public:
  explicit OutputScope(const std::string& dir) : dir_(dir) {
    if (dir_.empty()) return;
    existed_ = fs::exists(dir_);
    if (existed_) {
      if (!fs::is_directory(dir_)) throw CliError("output path " + dir_.string() + " is not a directory");
      for (const auto& e : fs::directory_iterator(dir_)) before_.insert(e.path().filename().string());
    }
    fs::create_directories(dir_);
  }
  ~OutputScope() {
    if (committed_ || dir_.empty()) return;
    std::error_code ec;
    if (!existed_) {
      fs::remove_all(dir_, ec);
      return;
    }
    for (const auto& e : fs::directory_iterator(dir_, ec))
      if (!before_.count(e.path().filename().string())) fs::remove_all(e.path(), ec);
  }
  OutputScope(const OutputScope&) = delete;
  OutputScope& operator=(const OutputScope&) = delete;

  fs::path path(const std::string& name) const { return dir_ / name; }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  bool existed_ = false;
  bool committed_ = false;
  std::set<std::string> before_;
};

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError("cannot write " + path.string());
    out << text;
    if (!out) throw CliError("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

ModelConfig resolve_config(const Options& o, const ModelConfig& base) {
  ModelConfig c = o.config.empty() ? base : load_config(o.config);
  std::vector<std::string> sets = o.sets;
  if (o.seed) sets.push_back("seed=" + std::to_string(*o.seed));
  return with_overrides(c, sets);
}

// "synth:N[:SIZE[:SEED]]" or a COCO annotation file.
Dataset open_dataset(const Options& o, bool check_images) {
  if (o.dataset.empty()) throw CliError("--dataset is required");
  if (o.dataset.rfind("synth:", 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(o.dataset.substr(6));
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.empty() || parts.size() > 3) throw CliError("bad synthetic dataset spec " + o.dataset);
    try {
      const int n = std::stoi(parts[0]);
      const int size = parts.size() > 1 ? std::stoi(parts[1]) : 320;
      const std::uint64_t seed = parts.size() > 2 ? std::stoull(parts[2]) : 0;
      return synth_shapes(seed, n, size);
    } catch (const std::logic_error&) {
      throw CliError("bad synthetic dataset spec " + o.dataset);
    }
  }
  const std::string root =
      o.images.empty() ? fs::path(o.dataset).parent_path().string() : o.images;
  return load_coco(o.dataset, root, check_images);
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(p, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != p.size() || !(v > 0.0 && v <= 1.0))
      throw CliError(std::string("bad ") + what + " value '" + p + "' (expected numbers in (0, 1])");
    out.push_back(v);
  }
  if (out.empty()) throw CliError(std::string("empty ") + what + " list");
  return out;
}

// Loads a checkpoint and the config to run it with. A flagged config must
// agree with the stored one except for decoding settings.
struct Loaded {
  Detector<float> model;
  CheckpointMeta meta;
  ModelConfig settings;
};

Loaded load_for_inference(const Options& o) {
  if (o.checkpoint.empty()) throw CliError("--checkpoint is required");
  CheckpointMeta meta;
  Detector<float> model = load_checkpoint<float>(o.checkpoint, &meta);
  ModelConfig settings = resolve_config(o, meta.config);
  if (!o.thresholds.empty()) {
    const auto t = parse_list(o.thresholds, "threshold");
    if (t.size() > 2) throw CliError("--thresholds takes SCORE[,NMS_IOU]");
    settings.score_threshold = t[0];
    if (t.size() > 1) settings.nms_iou_threshold = t[1];
  }
  const std::string diff = config_difference(settings, meta.config, true);
  if (!diff.empty())
    throw CliError("config mismatch: '" + diff + "' differs from the checkpoint's config");
  return {std::move(model), std::move(meta), settings};
}

void check_categories(const Dataset& ds, const CheckpointMeta& meta) {
  if (ds.categories != meta.categories)
    throw CliError("dataset categories differ from the checkpoint's category table");
}

int cmd_train(const Options& o, std::ostream& out) {
  const ModelConfig config = resolve_config(o, ModelConfig{});
  if (o.out.empty()) throw CliError("--out is required");
  const Dataset ds = open_dataset(o, true);
  OutputScope scope(o.out);
  write_text(scope.path("config.json"), to_json(config).dump(2) + "\n");
  write_text(scope.path("categories.json"), json(ds.categories).dump(1) + "\n");
  TrainOptions to;
  to.out_dir = o.out;
  const auto start = std::chrono::steady_clock::now();
  to.on_log = [&](const LogRecord& r) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char line[200];
    std::snprintf(line, sizeof line, "iter %lld lr %.2e cls %.4f loc %.4f total %.4f (%.0fs)\n",
                  static_cast<long long>(r.iteration), r.lr, r.cls_loss, r.loc_loss, r.total, secs);
    out << line << std::flush;
  };
  const TrainResult res = train(config, ds, to);
  out << "checkpoint " << res.checkpoint << "\n";
  scope.commit();
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  Loaded l = load_for_inference(o);
  const Dataset ds = open_dataset(o, true);
  check_categories(ds, l.meta);
  OutputScope scope(o.out);
  const auto dets = detect_dataset(l.model, ds, 8, &l.settings);
  const EvalReport rep = evaluate_ap(dets, dataset_ground_truth(ds), ds.categories);
  out << format_table(rep);
  if (!o.out.empty()) write_text(scope.path("eval_report.json"), to_json(rep).dump(2) + "\n");
  scope.commit();
  return 0;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

int cmd_infer(const Options& o, std::ostream& out) {
  if (o.images.empty()) throw CliError("--images is required");
  if (o.out.empty()) throw CliError("--out is required");
  Loaded l = load_for_inference(o);
  std::vector<fs::path> files;
  if (fs::is_directory(o.images)) {
    for (const auto& e : fs::directory_iterator(o.images))
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(o.images)) {
    files.push_back(o.images);
  } else {
    throw CliError("no such image file or directory " + o.images);
  }
  if (files.empty()) throw CliError("no images found in " + o.images);
  OutputScope scope(o.out);
  fs::create_directories(scope.path("annotated"));
  json report = json::object();
  for (const auto& f : files) {
    Image img = read_image(f.string());
    const auto dets = detect_images(l.model, {img}, &l.settings)[0];
    report[f.filename().string()] = detections_to_json(dets, l.meta.categories);
    draw_detections(img, dets, l.meta.categories);
    write_image((scope.path("annotated") / (f.stem().string() + ".png")).string(), img);
    out << f.filename().string() << ": " << dets.size() << " detections\n";
  }
  write_text(scope.path("detections.json"), report.dump(2) + "\n");
  scope.commit();
  return 0;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const ModelConfig config = resolve_config(o, ModelConfig{});
  OutputScope scope(o.out);
  Detector<float> model(config);
  const CostReport rep = analyze(model, config.input_size);
  out << format_table(rep);
  if (!o.out.empty()) write_text(scope.path("cost_report.json"), to_json(rep).dump(2) + "\n");
  scope.commit();
  return 0;
}

int cmd_anchors(const Options& o, std::ostream& out) {
  const ModelConfig config = resolve_config(o, ModelConfig{});
  const std::vector<double> thresholds = parse_list(o.thresholds.empty() ? "0.5" : o.thresholds, "threshold");
  const Dataset ds = open_dataset(o, false);
  OutputScope scope(o.out);
  const int size = config.input_size;
  const AnchorSet anchors = generate_anchors(config, size);
  std::vector<BoxXYXY> boxes;
  for (const auto& e : ds.images) {
    const double kx = static_cast<double>(size) / e.width, ky = static_cast<double>(size) / e.height;
    for (const auto& b : training_boxes(e))
      boxes.push_back({b.box.x1 * kx, b.box.y1 * ky, b.box.x2 * kx, b.box.y2 * ky});
  }
  if (boxes.empty()) throw CliError("dataset has no boxes to cover");
  json rep{{"input_size", size}, {"anchors", anchors.size()}, {"boxes", boxes.size()}};
  rep["coverage_error"] = json::array();
  out << "input " << size << ", " << anchors.size() << " anchors, " << boxes.size() << " boxes\n";
  for (double t : thresholds) {
    const double err = coverage_error(anchors, boxes, t);
    rep["coverage_error"].push_back({{"iou_threshold", t}, {"percent", err}});
    char line[120];
    std::snprintf(line, sizeof line, "iou %.2f: %.4f%% of boxes below threshold\n", t, err);
    out << line;
  }
  if (!o.out.empty()) write_text(scope.path("anchors_report.json"), rep.dump(2) + "\n");
  scope.commit();
  return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw CliError("--out is required");
  OutputScope scope(o.out);
  Dataset ds = synth_shapes(o.seed.value_or(0), o.count, o.size);
  materialize_images(ds, (fs::path(o.out) / "images").string());
  ds.image_root = "images";
  save_coco(ds, scope.path("annotations.json").string());
  out << "wrote " << ds.size() << " images to " << o.out << "\n";
  scope.commit();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MobileDenseNet detector toolkit", "mdn"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto add_config = [&](CLI::App* s) {
    s->add_option("--config", o.config, "Config JSON file")->check(CLI::ExistingFile);
    s->add_option("--set", o.sets, "Override KEY=VALUE (repeatable)")->take_all()->allow_extra_args(false);
  };
  auto add_seed = [&](CLI::App* s) {
    s->add_option("--seed", seed, "Random seed (overrides config seed)")
        ->check(CLI::NonNegativeNumber)
        ->each([&](const std::string& v) { o.seed = std::stoull(v); });
  };

  auto* train = app.add_subcommand("train", "Train a detector");
  add_config(train);
  add_seed(train);
  train->add_option("--dataset", o.dataset, "COCO annotation file or synth:N[:SIZE[:SEED]]")->required();
  train->add_option("--images", o.images, "Image root (default: annotation file directory)");
  train->add_option("--out", o.out, "Output directory for checkpoints and the loss log")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_config(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  eval->add_option("--dataset", o.dataset, "COCO annotation file or synth:N[:SIZE[:SEED]]")->required();
  eval->add_option("--images", o.images, "Image root (default: annotation file directory)");
  eval->add_option("--thresholds", o.thresholds, "SCORE[,NMS_IOU] decoding thresholds");
  eval->add_option("--out", o.out, "Directory for eval_report.json");

  auto* infer = app.add_subcommand("infer", "Run detection on images");
  add_config(infer);
  infer->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  infer->add_option("--images", o.images, "Image file or directory")->required();
  infer->add_option("--thresholds", o.thresholds, "SCORE[,NMS_IOU] decoding thresholds");
  infer->add_option("--out", o.out, "Directory for annotated images and detections.json")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "Parameter and multiply-add report");
  add_config(analyze_cmd);
  analyze_cmd->add_option("--out", o.out, "Directory for cost_report.json");

  auto* anchors = app.add_subcommand("anchors", "Anchor coverage error for a dataset");
  add_config(anchors);
  anchors->add_option("--dataset", o.dataset, "COCO annotation file or synth:N[:SIZE[:SEED]]")->required();
  anchors->add_option("--images", o.images, "Image root (unused; accepted for symmetry)");
  anchors->add_option("--thresholds", o.thresholds, "Comma-separated IoU thresholds (default 0.5)");
  anchors->add_option("--out", o.out, "Directory for anchors_report.json");

  auto* synth = app.add_subcommand("synth", "Write a synthetic shapes dataset in COCO format");
  add_seed(synth);
  synth->add_option("--count", o.count, "Number of images")->check(CLI::PositiveNumber);
  synth->add_option("--size", o.size, "Image side in pixels")->check(CLI::Range(32, 4096));
  synth->add_option("--out", o.out, "Output directory")->required();

  std::vector<std::string> argv_store{"mdn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "mdn: error: " << msg << "\n";
    return 2;
  }

  try {
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*infer) return cmd_infer(o, out);
    if (*analyze_cmd) return cmd_analyze(o, out);
    if (*anchors) return cmd_anchors(o, out);
    if (*synth) return cmd_synth(o, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "mdn: error: " << msg << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mdn
