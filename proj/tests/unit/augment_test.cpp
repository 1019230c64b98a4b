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
#include <gtest/gtest.h>

#include <random>

#include "mdn/augment.hpp"
#include "test_util.hpp"

namespace mdn {
namespace {

Sample random_sample(int w, int h, std::uint64_t seed, int boxes = 3) {
  std::mt19937_64 rng(seed);
  Sample s;
  s.width = w;
  s.height = h;
  s.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (auto& v : s.rgb) v = static_cast<float>(rng() % 256);
  std::uniform_real_distribution<double> px(0, w - 20), py(0, h - 20), side(4, 20);
  for (int i = 0; i < boxes; ++i) {
    const double x = px(rng), y = py(rng);
    s.boxes.push_back({{x, y, x + side(rng), y + side(rng)}, i % 3, false});
  }
  return s;
}

TEST(Augment, FlipExample) {
  Sample s = random_sample(320, 40, 1, 0);
  s.boxes.push_back({{10, 0, 30, 20}, 0, false});
  const Sample f = flip_horizontal(s);
  EXPECT_EQ(f.boxes[0].box, (BoxXYXY{290, 0, 310, 20}));
  // Pixel (x, y) moves to (W - 1 - x, y).
  EXPECT_EQ(f.rgb[(5 * 320 + 319) * 3 + 1], s.rgb[(5 * 320 + 0) * 3 + 1]);
}

TEST(Augment, DoubleFlipIsIdentity) {
  const Sample s = random_sample(57, 31, 2);
  const Sample f = flip_horizontal(flip_horizontal(s));
  EXPECT_EQ(f.rgb, s.rgb);
  ASSERT_EQ(f.boxes.size(), s.boxes.size());
  for (std::size_t i = 0; i < s.boxes.size(); ++i) {
    EXPECT_NEAR(f.boxes[i].box.x1, s.boxes[i].box.x1, 1e-9);
    EXPECT_NEAR(f.boxes[i].box.x2, s.boxes[i].box.x2, 1e-9);
    EXPECT_EQ(f.boxes[i].box.y1, s.boxes[i].box.y1);
    EXPECT_EQ(f.boxes[i].class_id, s.boxes[i].class_id);
  }
}

TEST(Augment, IdentityPlanReturnsInput) {
  const Sample s = random_sample(64, 48, 3);
  const Sample out = apply_augment(s, AugmentPlan{});
  EXPECT_EQ(out.rgb, s.rgb);
  EXPECT_EQ(out.boxes, s.boxes);
}

TEST(Augment, DisabledConfigNeverChangesInput) {
  ModelConfig c;
  c.flip_probability = 0.0;
  c.crop_probability = 0.0;
  c.color_jitter = 0.0;
  const Sample s = random_sample(64, 48, 4);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Sample out = augment(s, rng, c);
    EXPECT_EQ(out.rgb, s.rgb);
    EXPECT_EQ(out.boxes, s.boxes);
  }
}

TEST(Augment, CropKeepsCentersAndClips) {
  Sample s = random_sample(100, 100, 5, 0);
  s.boxes = {{{10, 10, 28, 28}, 0, false}, {{40, 40, 90, 90}, 1, false}, {{0, 0, 8, 8}, 2, false}};
  const Sample c = crop(s, {20, 20, 80, 80});
  EXPECT_EQ(c.width, 60);
  EXPECT_EQ(c.height, 60);
  ASSERT_EQ(c.boxes.size(), 1u);  // only (40..90) has its center (65, 65) inside
  EXPECT_EQ(c.boxes[0].box, (BoxXYXY{20, 20, 60, 60}));
  EXPECT_EQ(c.boxes[0].class_id, 1);
  EXPECT_EQ(c.rgb[0], s.rgb[(20 * 100 + 20) * 3]);
}

TEST(Augment, DrawnCropsKeepABoxCenter) {
  ModelConfig c;
  c.crop_probability = 1.0;
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const Sample s = random_sample(120, 90, 100 + i, 1 + i % 4);
    const AugmentPlan plan = draw_augment_plan(rng, c, s);
    if (!plan.crop) continue;
    bool kept = false;
    for (const auto& b : s.boxes) {
      const double cx = b.box.center_x(), cy = b.box.center_y();
      kept = kept || (cx >= plan.crop_box.x1 && cx <= plan.crop_box.x2 &&
                      cy >= plan.crop_box.y1 && cy <= plan.crop_box.y2);
    }
    EXPECT_TRUE(kept);
    const Sample out = apply_augment(s, plan);
    EXPECT_FALSE(out.boxes.empty());
    for (const auto& b : out.boxes) {
      EXPECT_GE(b.box.x1, 0);
      EXPECT_LE(b.box.x2, out.width);
      EXPECT_LE(b.box.y2, out.height);
      EXPECT_TRUE(b.box.valid());
    }
  }
}

TEST(Augment, ColorFactorsStayInRange) {
  ModelConfig c;
  std::mt19937_64 rng(7);
  const Sample s = random_sample(32, 32, 7);
  for (int i = 0; i < 500; ++i) {
    const AugmentPlan p = draw_augment_plan(rng, c, s);
    for (double f : {p.brightness, p.contrast, p.saturation}) {
      EXPECT_GE(f, 0.75);
      EXPECT_LE(f, 1.25);
    }
  }
}

TEST(Augment, FlipFrequencyNearHalf) {
  ModelConfig c;
  std::mt19937_64 rng(8);
  const Sample s = random_sample(32, 32, 8);
  int flips = 0;
  for (int i = 0; i < 4000; ++i) flips += draw_augment_plan(rng, c, s).flip ? 1 : 0;
  EXPECT_NEAR(flips / 4000.0, 0.5, 0.03);
}

TEST(Augment, DeterministicUnderSeed) {
  ModelConfig c;
  const Sample s = random_sample(80, 60, 9);
  std::mt19937_64 a(99), b(99);
  const Sample x = augment(s, a, c), y = augment(s, b, c);
  EXPECT_EQ(x.rgb, y.rgb);
  EXPECT_EQ(x.boxes, y.boxes);
}

TEST(Augment, JitterClampsAndBrightnessScales) {
  Sample s;
  s.width = 1;
  s.height = 2;
  s.rgb = {100, 50, 10, 250, 240, 230};
  const Sample b = color_jitter(s, 1.2, 1.0, 1.0);
  EXPECT_FLOAT_EQ(b.rgb[0], 120.0f);
  EXPECT_FLOAT_EQ(b.rgb[3], 255.0f);
  for (float v : color_jitter(s, 1.25, 1.25, 1.25).rgb) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 255.0f);
  }
}

TEST(Augment, ZeroSaturationGivesGray) {
  Sample s = random_sample(8, 8, 10, 0);
  const Sample g = color_jitter(s, 1.0, 1.0, 0.0);
  for (std::size_t i = 0; i < g.rgb.size(); i += 3) {
    EXPECT_NEAR(g.rgb[i], g.rgb[i + 1], 1e-3);
    EXPECT_NEAR(g.rgb[i], g.rgb[i + 2], 1e-3);
  }
}

TEST(Resize, IdentityAndConstant) {
  const Sample s = random_sample(13, 7, 11, 0);
  std::vector<float> out(s.rgb.size());
  resize_bilinear(s.rgb.data(), 13, 7, out.data(), 13, 7);
  EXPECT_EQ(out, s.rgb);
  std::vector<float> flat(10 * 10 * 3, 42.0f), big(25 * 17 * 3);
  resize_bilinear(flat.data(), 10, 10, big.data(), 25, 17);
  for (float v : big) EXPECT_FLOAT_EQ(v, 42.0f);
}

TEST(Resize, UpscaleByTwoInterpolates) {
  // One row 0, 100 in a single channel replicated.
  std::vector<float> src{0, 0, 0, 100, 100, 100};
  std::vector<float> dst(4 * 3);
  resize_bilinear(src.data(), 2, 1, dst.data(), 4, 1);
  // Half-pixel centers: 0.25 -> edge clamp 0, 0.75 -> 25, 1.25 -> 75, 1.75 -> 100.
  EXPECT_FLOAT_EQ(dst[0], 0.0f);
  EXPECT_FLOAT_EQ(dst[3], 25.0f);
  EXPECT_FLOAT_EQ(dst[6], 75.0f);
  EXPECT_FLOAT_EQ(dst[9], 100.0f);
}

TEST(WriteInput, NormalizesAndScalesBoxes) {
  Sample s = random_sample(64, 32, 12, 0);
  s.boxes = {{{8, 8, 24, 16}, 1, false}};
  Tensor<float> batch(2, 32, 32, 3);
  const auto boxes = write_input(s, 32, batch, 1);
  EXPECT_EQ(boxes[0].box, (BoxXYXY{4, 8, 12, 16}));
  for (std::size_t i = 0; i < batch.size() / 2; ++i) EXPECT_EQ(batch.values()[i], 0.0f);
  for (std::size_t i = batch.size() / 2; i < batch.size(); ++i) {
    EXPECT_GE(batch.values()[i], -1.0f);
    EXPECT_LE(batch.values()[i], 1.0f);
  }
}

}  // namespace
}  // namespace mdn
