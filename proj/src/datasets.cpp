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
#include "mdn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "mdn/random.hpp"

namespace mdn {

namespace fs = std::filesystem;
using nlohmann::json;

Image read_image(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw DatasetError("cannot decode image " + path);
  Image img;
  img.width = bgr.cols;
  img.height = bgr.rows;
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  cv::Mat rgb(img.height, img.width, CV_8UC3, img.rgb.data());
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return img;
}

void write_image(const std::string& path, const Image& image) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.rgb.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path, bgr)) throw DatasetError("cannot write image " + path);
}

Image Dataset::image(std::size_t index) const {
  if (index >= images.size()) throw DatasetError("image index out of range");
  if (!pixels.empty()) return pixels[index];
  return read_image(image_path(index));
}

std::string Dataset::image_path(std::size_t index) const {
  return (fs::path(image_root) / images[index].file_name).string();
}

std::vector<LabeledBox> training_boxes(const ImageEntry& entry) {
  std::vector<LabeledBox> out;
  for (const auto& b : entry.boxes)
    if (!b.crowd) out.push_back(b);
  return out;
}

namespace {

template <typename V>
V field(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DatasetError(std::string(where) + " entry lacks \"" + key + "\"");
  try {
    return it->get<V>();
  } catch (const json::exception&) {
    throw DatasetError(std::string(where) + " entry has a mistyped \"" + key + "\"");
  }
}

}  // namespace

Dataset coco_from_json(const json& doc, const std::string& image_root) {
  if (!doc.is_object()) throw DatasetError("annotation document is not an object");
  for (const char* key : {"images", "annotations", "categories"})
    if (!doc.contains(key) || !doc[key].is_array())
      throw DatasetError(std::string("annotation document lacks a \"") + key + "\" array");

  Dataset ds;
  ds.image_root = image_root;

  std::vector<std::pair<std::int64_t, std::string>> cats;
  for (const auto& c : doc["categories"])
    cats.emplace_back(field<std::int64_t>(c, "id", "category"), field<std::string>(c, "name", "category"));
  std::sort(cats.begin(), cats.end());
  std::map<std::int64_t, int> dense;
  for (const auto& [id, name] : cats) {
    if (!dense.emplace(id, static_cast<int>(ds.categories.size())).second)
      throw DatasetError("duplicate category id " + std::to_string(id));
    ds.categories.push_back(name);
    ds.category_ids.push_back(id);
  }

  std::map<std::int64_t, std::size_t> by_id;
  for (const auto& im : doc["images"]) {
    ImageEntry e;
    e.id = field<std::int64_t>(im, "id", "image");
    e.file_name = field<std::string>(im, "file_name", "image");
    e.width = field<int>(im, "width", "image");
    e.height = field<int>(im, "height", "image");
    if (e.width <= 0 || e.height <= 0)
      throw DatasetError("image " + std::to_string(e.id) + " has a non-positive extent");
    if (!by_id.emplace(e.id, ds.images.size()).second)
      throw DatasetError("duplicate image id " + std::to_string(e.id));
    ds.images.push_back(std::move(e));
  }

  for (const auto& an : doc["annotations"]) {
    const auto image_id = field<std::int64_t>(an, "image_id", "annotation");
    const auto cat = field<std::int64_t>(an, "category_id", "annotation");
    const auto bbox = field<std::vector<double>>(an, "bbox", "annotation");
    if (bbox.size() != 4) throw DatasetError("annotation bbox must have 4 numbers");
    auto img = by_id.find(image_id);
    if (img == by_id.end())
      throw DatasetError("annotation refers to unknown image " + std::to_string(image_id));
    auto c = dense.find(cat);
    if (c == dense.end())
      throw DatasetError("annotation refers to unknown category " + std::to_string(cat));
    ImageEntry& e = ds.images[img->second];
    LabeledBox lb;
    lb.box = BoxXYXY::from_xywh(bbox[0], bbox[1], bbox[2], bbox[3]).clipped(e.width, e.height);
    lb.class_id = c->second;
    if (auto it = an.find("iscrowd"); it != an.end()) {
      if (it->is_boolean()) lb.crowd = it->get<bool>();
      else if (it->is_number_integer()) lb.crowd = it->get<int>() != 0;
      else throw DatasetError("annotation has a mistyped \"iscrowd\"");
    }
    if (!(lb.box.width() > 0.0 && lb.box.height() > 0.0)) {
      ++ds.dropped_zero_area;
      continue;
    }
    e.boxes.push_back(lb);
  }
  return ds;
}

Dataset load_coco(const std::string& annotation_path, const std::string& image_root,
                  bool check_images) {
  std::ifstream in(annotation_path, std::ios::binary);
  if (!in) throw DatasetError("cannot open annotation file " + annotation_path);
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw DatasetError("malformed JSON in " + annotation_path + " at byte " +
                       std::to_string(e.byte));
  }
  Dataset ds = coco_from_json(doc, image_root);
  if (check_images) {
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (!fs::is_regular_file(ds.image_path(i))) missing.push_back(ds.image_path(i));
    if (!missing.empty()) {
      std::string msg = std::to_string(missing.size()) + " image file(s) missing:";
      for (const auto& m : missing) msg += " " + m;
      throw DatasetError(msg);
    }
  }
  return ds;
}

json export_coco(const Dataset& ds) {
  json doc;
  doc["categories"] = json::array();
  for (std::size_t i = 0; i < ds.categories.size(); ++i) {
    const std::int64_t id = i < ds.category_ids.size() ? ds.category_ids[i] : static_cast<std::int64_t>(i) + 1;
    doc["categories"].push_back({{"id", id}, {"name", ds.categories[i]}});
  }
  doc["images"] = json::array();
  doc["annotations"] = json::array();
  std::int64_t ann_id = 1;
  for (const auto& e : ds.images) {
    doc["images"].push_back(
        {{"id", e.id}, {"file_name", e.file_name}, {"width", e.width}, {"height", e.height}});
    for (const auto& b : e.boxes) {
      const std::int64_t cat = static_cast<std::size_t>(b.class_id) < ds.category_ids.size()
                                   ? ds.category_ids[b.class_id]
                                   : b.class_id + 1;
      doc["annotations"].push_back({{"id", ann_id++},
                                    {"image_id", e.id},
                                    {"category_id", cat},
                                    {"bbox", {b.box.x1, b.box.y1, b.box.width(), b.box.height()}},
                                    {"area", b.box.area()},
                                    {"iscrowd", b.crowd ? 1 : 0}});
    }
  }
  return doc;
}

void save_coco(const Dataset& ds, const std::string& path) {
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot write " + path);
    out << export_coco(ds).dump(1) << "\n";
    if (!out) throw DatasetError("cannot write " + path);
  }
  fs::rename(tmp, path);
}

std::vector<std::uint8_t> render_shape_mask(int shape_class, const BoxXYXY& frame, int width,
                                            int height) {
  cv::Mat mask = cv::Mat::zeros(height, width, CV_8UC1);
  const int x1 = static_cast<int>(frame.x1), y1 = static_cast<int>(frame.y1);
  const int x2 = static_cast<int>(frame.x2) - 1, y2 = static_cast<int>(frame.y2) - 1;
  switch (shape_class) {
    case 0:
      cv::rectangle(mask, cv::Point(x1, y1), cv::Point(x2, y2), cv::Scalar(255), cv::FILLED,
                    cv::LINE_8);
      break;
    case 1: {
      // Center and semi-axes in 1/16 pixel units so odd extents stay exact.
      constexpr int kShift = 4;
      const cv::Point center((x1 + x2) << (kShift - 1), (y1 + y2) << (kShift - 1));
      const cv::Size axes((x2 - x1) << (kShift - 1), (y2 - y1) << (kShift - 1));
      cv::ellipse(mask, center, axes, 0.0, 0.0, 360.0, cv::Scalar(255), cv::FILLED, cv::LINE_8,
                  kShift);
      break;
    }
    case 2: {
      const cv::Point pts[3] = {{x1, y2}, {x2, y2}, {(x1 + x2) / 2, y1}};
      cv::fillConvexPoly(mask, pts, 3, cv::Scalar(255), cv::LINE_8);
      break;
    }
    default:
      throw DatasetError("unknown shape class " + std::to_string(shape_class));
  }
  return {mask.data, mask.data + mask.total()};
}

namespace {

BoxXYXY mask_extent(const std::vector<std::uint8_t>& mask, int width, int height) {
  int x1 = width, y1 = height, x2 = -1, y2 = -1;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (mask[static_cast<std::size_t>(y) * width + x]) {
        x1 = std::min(x1, x);
        y1 = std::min(y1, y);
        x2 = std::max(x2, x);
        y2 = std::max(y2, y);
      }
  if (x2 < 0) return {};
  return {double(x1), double(y1), double(x2 + 1), double(y2 + 1)};
}

std::array<double, 3> random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 255.0);
  return {u(rng), u(rng), u(rng)};
}

double color_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

void paint_background(Image& img, std::mt19937_64& rng, const std::array<double, 3>& base) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 0.01 + 0.08 * u(rng), fy = 0.01 + 0.08 * u(rng);
  const double phase = 6.283185307179586 * u(rng);
  const double amp = 10.0 + 20.0 * u(rng);
  std::normal_distribution<double> noise(0.0, 6.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double wave = amp * std::sin(fx * x + fy * y + phase);
      std::uint8_t* p = img.pixel(x, y);
      for (int c = 0; c < 3; ++c)
        p[c] = static_cast<std::uint8_t>(std::clamp(base[c] + wave + noise(rng), 0.0, 255.0));
    }
}

void synth_one(std::uint64_t seed, int index, int size, ImageEntry& entry, Image& img) {
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  img.width = img.height = size;
  img.rgb.assign(static_cast<std::size_t>(size) * size * 3, 0);
  const auto base = random_color(rng);
  paint_background(img, rng, base);

  entry.id = index + 1;
  entry.file_name = "synth_" + std::to_string(index) + ".png";
  entry.width = entry.height = size;
  entry.boxes.clear();

  const int count = 1 + static_cast<int>(u(rng) * 5.0);
  const int max_side = std::min(kShapeMaxSide, size);
  const double log_lo = std::log(double(kShapeMinSide)), log_hi = std::log(double(max_side));
  std::vector<BoxXYXY> placed;
  for (int s = 0; s < count; ++s) {
    const int cls = static_cast<int>(u(rng) * 3.0) % 3;
    // Side length log-uniform, aspect within [1/2, 2], both extents clamped
    // to the side range.
    const double side = std::exp(log_lo + (log_hi - log_lo) * u(rng));
    const double aspect = std::exp(std::log(2.0) * (2.0 * u(rng) - 1.0));
    const int w = std::clamp(static_cast<int>(std::lround(side * std::sqrt(aspect))), kShapeMinSide, max_side);
    const int h = std::clamp(static_cast<int>(std::lround(side / std::sqrt(aspect))), kShapeMinSide, max_side);
    bool ok = false;
    BoxXYXY frame;
    for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
      const int x = static_cast<int>(u(rng) * (size - w + 1));
      const int y = static_cast<int>(u(rng) * (size - h + 1));
      frame = {double(x), double(y), double(x + w), double(y + h)};
      ok = true;
      for (const auto& p : placed)
        if (intersection_area({frame.x1 - 2, frame.y1 - 2, frame.x2 + 2, frame.y2 + 2}, p) > 0.0) {
          ok = false;
          break;
        }
    }
    if (!ok) continue;
    std::array<double, 3> color = random_color(rng);
    for (int tries = 0; tries < 20 && color_distance(color, base) < 120.0; ++tries)
      color = random_color(rng);
    if (color_distance(color, base) < 120.0)
      for (int c = 0; c < 3; ++c) color[c] = base[c] < 128.0 ? 230.0 : 25.0;

    const auto mask = render_shape_mask(cls, frame, size, size);
    for (int y = static_cast<int>(frame.y1); y < static_cast<int>(frame.y2); ++y)
      for (int x = static_cast<int>(frame.x1); x < static_cast<int>(frame.x2); ++x)
        if (mask[static_cast<std::size_t>(y) * size + x]) {
          std::uint8_t* p = img.pixel(x, y);
          for (int c = 0; c < 3; ++c) p[c] = static_cast<std::uint8_t>(color[c]);
        }
    placed.push_back(frame);
    entry.boxes.push_back({mask_extent(mask, size, size), cls, false});
  }
}

}  // namespace

Dataset synth_shapes(std::uint64_t seed, int n_images, int image_size) {
  if (n_images < 1) throw DatasetError("synthetic dataset needs at least one image");
  if (image_size < 2 * kShapeMinSide) throw DatasetError("synthetic image size too small");
  Dataset ds;
  ds.categories = kShapeClasses;
  ds.category_ids = {1, 2, 3};
  ds.images.resize(n_images);
  ds.pixels.resize(n_images);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n_images; ++i) synth_one(seed, i, image_size, ds.images[i], ds.pixels[i]);
  return ds;
}

void materialize_images(Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < ds.size(); ++i)
    write_image((fs::path(dir) / ds.images[i].file_name).string(), ds.image(i));
  ds.image_root = dir;
}

}  // namespace mdn
