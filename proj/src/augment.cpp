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
#include "mdn/augment.hpp"

#include <algorithm>
#include <cmath>

namespace mdn {

Sample make_sample(const Image& image, std::vector<LabeledBox> boxes) {
  Sample s;
  s.width = image.width;
  s.height = image.height;
  s.rgb.assign(image.rgb.begin(), image.rgb.end());
  s.boxes = std::move(boxes);
  return s;
}

namespace {

bool center_inside(const BoxXYXY& b, const BoxXYXY& r) {
  const double cx = b.center_x(), cy = b.center_y();
  return cx >= r.x1 && cx < r.x2 && cy >= r.y1 && cy < r.y2;
}

}  // namespace

AugmentPlan draw_augment_plan(std::mt19937_64& rng, const ModelConfig& config,
                              const Sample& sample) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AugmentPlan plan;
  plan.flip = u(rng) < config.flip_probability;
  if (u(rng) < config.crop_probability) {
    for (int attempt = 0; attempt < kCropAttempts; ++attempt) {
      const double sw = config.min_crop_scale + (1.0 - config.min_crop_scale) * u(rng);
      const double sh = config.min_crop_scale + (1.0 - config.min_crop_scale) * u(rng);
      const int cw = std::max(1, static_cast<int>(std::lround(sw * sample.width)));
      const int ch = std::max(1, static_cast<int>(std::lround(sh * sample.height)));
      const int x = static_cast<int>(u(rng) * (sample.width - cw + 1));
      const int y = static_cast<int>(u(rng) * (sample.height - ch + 1));
      const BoxXYXY region{double(x), double(y), double(x + cw), double(y + ch)};
      const bool keeps = sample.boxes.empty() ||
                         std::any_of(sample.boxes.begin(), sample.boxes.end(),
                                     [&](const LabeledBox& b) { return center_inside(b.box, region); });
      if (keeps) {
        plan.crop = true;
        plan.crop_box = region;
        break;
      }
    }
  }
  const double j = config.color_jitter;
  if (j > 0.0) {
    plan.brightness = 1.0 - j + 2.0 * j * u(rng);
    plan.contrast = 1.0 - j + 2.0 * j * u(rng);
    plan.saturation = 1.0 - j + 2.0 * j * u(rng);
  }
  return plan;
}

Sample flip_horizontal(const Sample& s) {
  Sample out = s;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const float* src = s.rgb.data() + (static_cast<std::size_t>(y) * s.width + (s.width - 1 - x)) * 3;
      float* dst = out.rgb.data() + (static_cast<std::size_t>(y) * s.width + x) * 3;
      std::copy(src, src + 3, dst);
    }
  for (auto& b : out.boxes) {
    const double x1 = s.width - b.box.x2, x2 = s.width - b.box.x1;
    b.box.x1 = x1;
    b.box.x2 = x2;
  }
  return out;
}

Sample crop(const Sample& s, const BoxXYXY& r) {
  const int x0 = static_cast<int>(r.x1), y0 = static_cast<int>(r.y1);
  const int w = static_cast<int>(r.x2) - x0, h = static_cast<int>(r.y2) - y0;
  Sample out;
  out.width = w;
  out.height = h;
  out.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const float* src = s.rgb.data() + (static_cast<std::size_t>(y + y0) * s.width + x0) * 3;
    std::copy(src, src + static_cast<std::size_t>(w) * 3,
              out.rgb.data() + static_cast<std::size_t>(y) * w * 3);
  }
  for (const auto& b : s.boxes) {
    if (!center_inside(b.box, r)) continue;
    LabeledBox nb = b;
    nb.box = b.box.translated(-x0, -y0).clipped(w, h);
    if (nb.box.area() > 0.0) out.boxes.push_back(nb);
  }
  return out;
}

Sample color_jitter(const Sample& s, double brightness, double contrast, double saturation) {
  Sample out = s;
  auto& px = out.rgb;
  const std::size_t n = static_cast<std::size_t>(s.width) * s.height;
  if (brightness != 1.0)
    for (auto& v : px) v = static_cast<float>(v * brightness);
  if (contrast != 1.0 && n > 0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean += 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
    mean /= static_cast<double>(n);
    for (auto& v : px) v = static_cast<float>((v - mean) * contrast + mean);
  }
  if (saturation != 1.0)
    for (std::size_t i = 0; i < n; ++i) {
      float* p = px.data() + 3 * i;
      const double gray = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(gray + (p[c] - gray) * saturation);
    }
  if (brightness != 1.0 || contrast != 1.0 || saturation != 1.0)
    for (auto& v : px) v = std::clamp(v, 0.0f, 255.0f);
  return out;
}

Sample apply_augment(const Sample& sample, const AugmentPlan& plan) {
  Sample s = plan.flip ? flip_horizontal(sample) : sample;
  if (plan.crop) {
    // The crop window was drawn on the unflipped image.
    BoxXYXY r = plan.crop_box;
    if (plan.flip) r = {sample.width - r.x2, r.y1, sample.width - r.x1, r.y2};
    s = crop(s, r);
  }
  return color_jitter(s, plan.brightness, plan.contrast, plan.saturation);
}

Sample augment(const Sample& sample, std::mt19937_64& rng, const ModelConfig& config) {
  return apply_augment(sample, draw_augment_plan(rng, config, sample));
}

void resize_bilinear(const float* src, int sw, int sh, float* dst, int dw, int dh) {
  const double sx = static_cast<double>(sw) / dw, sy = static_cast<double>(sh) / dh;
  std::vector<int> x0(dw), x1(dw);
  std::vector<float> fx(dw);
  for (int x = 0; x < dw; ++x) {
    const double p = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(sw - 1));
    x0[x] = static_cast<int>(p);
    x1[x] = std::min(x0[x] + 1, sw - 1);
    fx[x] = static_cast<float>(p - x0[x]);
  }
  for (int y = 0; y < dh; ++y) {
    const double p = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(sh - 1));
    const int y0 = static_cast<int>(p), y1 = std::min(y0 + 1, sh - 1);
    const float fy = static_cast<float>(p - y0);
    const float* r0 = src + static_cast<std::size_t>(y0) * sw * 3;
    const float* r1 = src + static_cast<std::size_t>(y1) * sw * 3;
    float* out = dst + static_cast<std::size_t>(y) * dw * 3;
    for (int x = 0; x < dw; ++x)
      for (int c = 0; c < 3; ++c) {
        const float top = r0[x0[x] * 3 + c] + fx[x] * (r0[x1[x] * 3 + c] - r0[x0[x] * 3 + c]);
        const float bot = r1[x0[x] * 3 + c] + fx[x] * (r1[x1[x] * 3 + c] - r1[x0[x] * 3 + c]);
        out[x * 3 + c] = top + fy * (bot - top);
      }
  }
}

template <typename T>
std::vector<LabeledBox> write_input(const Sample& s, int size, Tensor<T>& batch, int n) {
  std::vector<float> buf;
  const float* px = s.rgb.data();
  if (s.width != size || s.height != size) {
    buf.resize(static_cast<std::size_t>(size) * size * 3);
    resize_bilinear(s.rgb.data(), s.width, s.height, buf.data(), size, size);
    px = buf.data();
  }
  T* out = batch.data() + batch.offset(n, 0, 0, 0);
  const std::size_t count = static_cast<std::size_t>(size) * size * 3;
  for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<T>(px[i] / 127.5f - 1.0f);
  const double kx = static_cast<double>(size) / s.width, ky = static_cast<double>(size) / s.height;
  std::vector<LabeledBox> boxes = s.boxes;
  for (auto& b : boxes) b.box = {b.box.x1 * kx, b.box.y1 * ky, b.box.x2 * kx, b.box.y2 * ky};
  return boxes;
}

template std::vector<LabeledBox> write_input<float>(const Sample&, int, Tensor<float>&, int);
template std::vector<LabeledBox> write_input<double>(const Sample&, int, Tensor<double>&, int);

}  // namespace mdn
