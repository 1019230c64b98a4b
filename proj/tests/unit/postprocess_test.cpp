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

#include <algorithm>
#include <cmath>
#include <random>

#include "mdn/postprocess.hpp"

namespace mdn {
namespace {

AnchorSet grid_anchors(int count) {
  AnchorSet s;
  for (int i = 0; i < count; ++i) {
    s.boxes.push_back(BoxXYXY::from_center(10.0 + 7 * (i % 9), 10.0 + 9 * (i / 9), 12, 16));
    s.level.push_back(0);
    s.cell.push_back(i);
    s.scale_index.push_back(0);
    s.ratio_index.push_back(0);
  }
  return s;
}

TEST(Decode, UniformLogitsGiveOneOverK) {
  const int K = 5;
  const AnchorSet set = grid_anchors(3);
  const std::vector<double> cls(3 * K, 0.0), box(3 * 4, 0.0);
  DecodeOptions opt;
  opt.score_threshold = 0.0;
  const auto dets = decode_predictions(cls.data(), box.data(), K, set, opt);
  ASSERT_EQ(dets.size(), 3u * (K - 1));
  for (const auto& d : dets) EXPECT_NEAR(d.score, 1.0 / K, 1e-12);
  // 1/K = 0.2 survives a 0.05 threshold; with K = 25 it would not.
  const std::vector<double> cls25(3 * 25, 0.0);
  opt.score_threshold = 0.05;
  EXPECT_TRUE(decode_predictions(cls25.data(), box.data(), 25, set, opt).empty());
}

TEST(Decode, SingleConfidentAnchor) {
  const int K = 5;
  const AnchorSet set = grid_anchors(4);
  std::vector<double> cls(4 * K, 0.0), box(4 * 4, 0.0);
  for (int a = 0; a < 4; ++a) cls[a * K + K - 1] = 10.0;  // background elsewhere
  cls[2 * K + K - 1] = 0.0;
  cls[2 * K + 3] = 10.0;
  const auto dets = decode_predictions(cls.data(), box.data(), K, set, DecodeOptions{});
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].class_id, 3);
  EXPECT_EQ(dets[0].anchor_index, 2);
  EXPECT_EQ(dets[0].box, set.boxes[2]);
  EXPECT_GT(dets[0].score, 0.999);
}

TEST(Decode, ClipsToImage) {
  const int K = 2;
  AnchorSet set = grid_anchors(1);
  set.boxes[0] = {-10, -10, 30, 30};
  const std::vector<double> cls{5.0, 0.0}, box(4, 0.0);
  DecodeOptions opt;
  opt.clip_width = 20;
  opt.clip_height = 25;
  const auto dets = decode_predictions(cls.data(), box.data(), K, set, opt);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].box, (BoxXYXY{0, 0, 20, 25}));
}

// Naive decode: every pair above threshold, full sort, truncate.
std::vector<Detection> decode_oracle(const std::vector<double>& cls, const std::vector<double>& box,
                                     int K, const AnchorSet& set, double thr, int top_k) {
  std::vector<Detection> out;
  for (std::size_t a = 0; a < set.size(); ++a) {
    double s = 0;
    for (int c = 0; c < K; ++c) s += std::exp(cls[a * K + c]);
    for (int c = 0; c < K - 1; ++c) {
      const double p = std::exp(cls[a * K + c]) / s;
      if (p <= thr) continue;
      const Offsets t{box[a * 4], box[a * 4 + 1], box[a * 4 + 2], box[a * 4 + 3]};
      out.push_back({decode(t, set.boxes[a]), c, p, static_cast<int>(a)});
    }
  }
  std::sort(out.begin(), out.end(), [](const Detection& x, const Detection& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.anchor_index != y.anchor_index) return x.anchor_index < y.anchor_index;
    return x.class_id < y.class_id;
  });
  if (static_cast<int>(out.size()) > top_k) out.resize(top_k);
  return out;
}

TEST(Decode, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.5);
  for (int trial = 0; trial < 30; ++trial) {
    const int K = 2 + trial % 5, A = 20 + trial * 3;
    const AnchorSet set = grid_anchors(A);
    std::vector<double> cls(A * K), box(A * 4);
    for (auto& v : cls) v = g(rng);
    for (auto& v : box) v = 0.3 * g(rng);
    DecodeOptions opt;
    opt.top_k = 10 + trial;
    const auto got = decode_predictions(cls.data(), box.data(), K, set, opt);
    const auto want = decode_oracle(cls, box, K, set, opt.score_threshold, opt.top_k);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].anchor_index, want[i].anchor_index);
      EXPECT_EQ(got[i].class_id, want[i].class_id);
      EXPECT_NEAR(got[i].score, want[i].score, 1e-12);
      EXPECT_NEAR(got[i].box.x1, want[i].box.x1, 1e-9);
      EXPECT_NEAR(got[i].box.y2, want[i].box.y2, 1e-9);
    }
  }
}

TEST(Nms, IdenticalBoxesSameClass) {
  const BoxXYXY b{0, 0, 10, 10};
  const auto out = nms({{b, 1, 0.8, 1}, {b, 1, 0.9, 0}}, 0.45);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.9);
}

TEST(Nms, IdenticalBoxesDifferentClasses) {
  const BoxXYXY b{0, 0, 10, 10};
  EXPECT_EQ(nms({{b, 1, 0.8, 1}, {b, 2, 0.9, 0}}, 0.45).size(), 2u);
}

TEST(Nms, ThresholdIsInclusive) {
  // IoU exactly 0.5 suppresses at threshold 0.5.
  const auto out = nms({{{0, 0, 10, 10}, 0, 0.9, 0}, {{0, 0, 10, 5}, 0, 0.8, 1}}, 0.5);
  EXPECT_EQ(out.size(), 1u);
}

std::vector<Detection> nms_oracle(std::vector<Detection> d, double thr) {
  std::sort(d.begin(), d.end(), detection_before);
  std::vector<bool> dead(d.size(), false);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (dead[i]) continue;
    for (std::size_t j = i + 1; j < d.size(); ++j)
      if (d[j].class_id == d[i].class_id && iou(d[i].box, d[j].box) >= thr) dead[j] = true;
  }
  std::vector<Detection> out;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!dead[i]) out.push_back(d[i]);
  return out;
}

std::vector<Detection> random_dets(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(0, 60), side(5, 30), u(0, 1);
  std::vector<Detection> d;
  for (int i = 0; i < n; ++i) {
    const double x = pos(rng), y = pos(rng);
    // Coarse scores create ties resolved by anchor index.
    d.push_back({{x, y, x + side(rng), y + side(rng)}, static_cast<int>(u(rng) * 3),
                 std::round(u(rng) * 10) / 10, i});
  }
  return d;
}

TEST(Nms, MatchesQuadraticReference) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_dets(rng, 50);
    EXPECT_EQ(nms(d, 0.45), nms_oracle(d, 0.45));
  }
}

TEST(Nms, OrderIndependent) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto d = random_dets(rng, 40);
    const auto ref = nms(d, 0.45);
    std::shuffle(d.begin(), d.end(), rng);
    EXPECT_EQ(nms(d, 0.45), ref);
  }
}

TEST(Postprocess, CapsDetections) {
  const int K = 3, A = 60;
  const AnchorSet set = grid_anchors(A);
  std::vector<float> cls(A * K, 0.0f), box(A * 4, 0.0f);
  for (int a = 0; a < A; ++a) cls[a * K] = 3.0f + 0.01f * a;
  ModelConfig c;
  c.num_classes = K;
  c.max_detections = 7;
  c.nms_iou_threshold = 1.0;
  const auto out = postprocess(cls.data(), box.data(), set, c, 0, 0);
  ASSERT_EQ(out.size(), 7u);
  EXPECT_TRUE(std::is_sorted(out.begin(), out.end(), detection_before));
  EXPECT_EQ(out[0].anchor_index, A - 1);
}

}  // namespace
}  // namespace mdn
