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
#ifndef MDN_AUGMENT_HPP_
#define MDN_AUGMENT_HPP_

#include <random>
#include <vector>

#include "mdn/config.hpp"
#include "mdn/datasets.hpp"
#include "mdn/geometry.hpp"
#include "mdn/tensor.hpp"

namespace mdn {

// Image as float RGB in [0, 255] with its boxes in pixel coordinates.
struct Sample {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;
  std::vector<LabeledBox> boxes;
};

Sample make_sample(const Image& image, std::vector<LabeledBox> boxes);

struct AugmentPlan {
  bool flip = false;
  bool crop = false;
  BoxXYXY crop_box;  // integer pixel bounds when crop is set
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
};

inline constexpr int kCropAttempts = 50;

// Draws flip, crop and color factors. A crop must keep at least one box
// center; after kCropAttempts failures the image is left uncropped.
AugmentPlan draw_augment_plan(std::mt19937_64& rng, const ModelConfig& config,
                              const Sample& sample);
Sample apply_augment(const Sample& sample, const AugmentPlan& plan);
Sample augment(const Sample& sample, std::mt19937_64& rng, const ModelConfig& config);

Sample flip_horizontal(const Sample& sample);
// Boxes whose center lies in the crop are kept, shifted and clipped.
Sample crop(const Sample& sample, const BoxXYXY& region);
Sample color_jitter(const Sample& sample, double brightness, double contrast, double saturation);

// Bilinear resampling with pixel centers aligned (half-pixel convention),
// three interleaved channels.
void resize_bilinear(const float* src, int src_w, int src_h, float* dst, int dst_w, int dst_h);

// Resizes to size x size, maps [0, 255] to [-1, 1] and writes image slot n of
// an NHWC batch. Returns the boxes rescaled to the new extent.
template <typename T>
std::vector<LabeledBox> write_input(const Sample& sample, int size, Tensor<T>& batch, int n);

}  // namespace mdn

#endif  // MDN_AUGMENT_HPP_
