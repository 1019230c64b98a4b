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
#ifndef MDN_ANCHORS_HPP_
#define MDN_ANCHORS_HPP_

#include <array>
#include <vector>

#include "mdn/config.hpp"
#include "mdn/geometry.hpp"

namespace mdn {

inline constexpr double kCenterVariance = 0.1;
inline constexpr double kSizeVariance = 0.2;

// Prior boxes in input pixels, ordered by level, then row-major cell, then
// anchor (scale-major, then ratio). This matches the head flattening.
struct AnchorSet {
  int input_size = 0;
  std::vector<BoxXYXY> boxes;
  std::vector<int> level;
  std::vector<int> cell;
  std::vector<int> scale_index;
  std::vector<int> ratio_index;
  std::array<int, kNumLevels> level_h{};
  std::array<int, kNumLevels> level_w{};
  std::array<int, kNumLevels> level_anchors{};
  std::array<int, kNumLevels> level_offset{};

  std::size_t size() const { return boxes.size(); }
};

// Feature-map extents for a square input: S/8, S/16, S/32 then ceil halving.
std::array<int, kNumLevels> level_extents(int input_size);

AnchorSet generate_anchors(const ModelConfig& config, int input_size);

using Offsets = std::array<double, 4>;  // tx, ty, tw, th

Offsets encode(const BoxXYXY& gt, const BoxXYXY& anchor);
BoxXYXY decode(const Offsets& t, const BoxXYXY& anchor);
// Largest admissible size offset (after variance scaling) used by decode.
double max_log_scale();

inline constexpr int kUnmatched = -1;

struct MatchResult {
  std::vector<int> gt_index;     // kUnmatched for background
  std::vector<int> label;        // class id, or background column
  std::vector<Offsets> target;   // valid where gt_index >= 0
  std::vector<bool> forced;
  int n_pos = 0;
};

// (1) In ground-truth order, each box claims its highest-IoU anchor not yet
// claimed (lowest index on ties). (2) Every other anchor whose best IoU,
// lowest gt index on ties, reaches the threshold is matched to that box.
// Crowd boxes are skipped.
MatchResult match(const AnchorSet& anchors, const std::vector<LabeledBox>& gts,
                  double iou_threshold, int background_class);

// Percentage of boxes whose best IoU over all anchors is below threshold.
// Throws std::invalid_argument on an empty box list.
double coverage_error(const AnchorSet& anchors, const std::vector<BoxXYXY>& gts,
                      double iou_threshold);
// Best IoU over all anchors for each box.
std::vector<double> best_anchor_iou(const AnchorSet& anchors, const std::vector<BoxXYXY>& gts);

}  // namespace mdn

#endif  // MDN_ANCHORS_HPP_
