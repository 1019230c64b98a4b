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
#ifndef MDN_DATASETS_HPP_
#define MDN_DATASETS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdn/geometry.hpp"

namespace mdn {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 8-bit RGB, row-major, channels interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  friend bool operator==(const Image&, const Image&) = default;
};

Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);

struct ImageEntry {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<LabeledBox> boxes;  // crowd boxes included, flagged

  friend bool operator==(const ImageEntry&, const ImageEntry&) = default;
};

struct Dataset {
  std::vector<std::string> categories;       // dense id -> name
  std::vector<std::int64_t> category_ids;    // dense id -> id in the source file
  std::vector<ImageEntry> images;
  std::string image_root;
  // Decoded pixels for generated datasets, parallel to images. Empty when
  // images live on disk.
  std::vector<Image> pixels;
  int dropped_zero_area = 0;

  std::size_t size() const { return images.size(); }
  int num_categories() const { return static_cast<int>(categories.size()); }
  Image image(std::size_t index) const;
  std::string image_path(std::size_t index) const;
};

// Boxes that take part in training (crowd regions removed).
std::vector<LabeledBox> training_boxes(const ImageEntry& entry);

// COCO detection JSON. Category ids are remapped to dense indices in
// ascending id order; boxes are clipped to the image and zero-area boxes are
// dropped and counted. With check_images every referenced file must exist.
Dataset load_coco(const std::string& annotation_path, const std::string& image_root,
                  bool check_images = true);
Dataset coco_from_json(const nlohmann::json& doc, const std::string& image_root);
nlohmann::json export_coco(const Dataset& dataset);
void save_coco(const Dataset& dataset, const std::string& path);

inline const std::vector<std::string> kShapeClasses{"rectangle", "ellipse", "triangle"};
inline constexpr int kShapeMinSide = 16;
inline constexpr int kShapeMaxSide = 160;

// Deterministic images of 1-5 filled shapes on a textured background. Boxes
// are the exact pixel extent of each shape; shapes never touch each other.
Dataset synth_shapes(std::uint64_t seed, int n_images, int image_size);

// Writes generated pixels as PNG files under dir and points image_root there.
void materialize_images(Dataset& dataset, const std::string& dir);

// Renders one shape into a binary mask of the given extent (255 inside).
std::vector<std::uint8_t> render_shape_mask(int shape_class, const BoxXYXY& frame, int width,
                                            int height);

}  // namespace mdn

#endif  // MDN_DATASETS_HPP_
