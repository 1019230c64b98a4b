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
#include "mdn/anchors.hpp"

#include <cmath>
#include <stdexcept>

#include "mdn/kernels/common.hpp"

namespace mdn {

std::array<int, kNumLevels> level_extents(int input_size) {
  std::array<int, kNumLevels> e{};
  e[0] = input_size / 8;
  for (int l = 1; l < kNumLevels; ++l) e[l] = kernels::conv_out(e[l - 1], 2);
  return e;
}

AnchorSet generate_anchors(const ModelConfig& config, int input_size) {
  if (input_size <= 0 || input_size % 32 != 0)
    throw ConfigError("anchor input size must be a positive multiple of 32, got " +
                      std::to_string(input_size));
  AnchorSet set;
  set.input_size = input_size;
  const auto extents = level_extents(input_size);
  // Original SSDLite finest-level layout.
  const std::vector<double> reduced_ratios{1.0, 2.0, 0.5};
  int offset = 0;
  for (int l = 0; l < kNumLevels; ++l) {
    const int f = extents[l];
    const double stride = static_cast<double>(input_size) / f;
    const bool reduced = config.reduce_lowest_level_anchors && l == 0;
    const std::vector<double> scales = reduced ? std::vector<double>{1.0} : config.anchor_scales;
    const std::vector<double>& ratios = reduced ? reduced_ratios : config.anchor_ratios;
    const int a_count = static_cast<int>(scales.size() * ratios.size());
    set.level_h[l] = f;
    set.level_w[l] = f;
    set.level_anchors[l] = a_count;
    set.level_offset[l] = offset;
    for (int y = 0; y < f; ++y)
      for (int x = 0; x < f; ++x) {
        const double cx = (x + 0.5) * stride, cy = (y + 0.5) * stride;
        for (std::size_t si = 0; si < scales.size(); ++si)
          for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
            const double side = config.anchor_base_sizes[l] * scales[si];
            const double root = std::sqrt(ratios[ri]);
            set.boxes.push_back(BoxXYXY::from_center(cx, cy, side * root, side / root));
            set.level.push_back(l);
            set.cell.push_back(y * f + x);
            set.scale_index.push_back(static_cast<int>(si));
            set.ratio_index.push_back(static_cast<int>(ri));
          }
      }
    offset += f * f * a_count;
  }
  return set;
}

double max_log_scale() { return std::log(1000.0 / 16.0); }

Offsets encode(const BoxXYXY& gt, const BoxXYXY& anchor) {
  const double aw = anchor.width(), ah = anchor.height();
  return {(gt.center_x() - anchor.center_x()) / (aw * kCenterVariance),
          (gt.center_y() - anchor.center_y()) / (ah * kCenterVariance),
          std::log(gt.width() / aw) / kSizeVariance, std::log(gt.height() / ah) / kSizeVariance};
}

BoxXYXY decode(const Offsets& t, const BoxXYXY& anchor) {
  const double aw = anchor.width(), ah = anchor.height();
  const double cx = anchor.center_x() + t[0] * kCenterVariance * aw;
  const double cy = anchor.center_y() + t[1] * kCenterVariance * ah;
  const double lw = std::min(t[2] * kSizeVariance, max_log_scale());
  const double lh = std::min(t[3] * kSizeVariance, max_log_scale());
  return BoxXYXY::from_center(cx, cy, aw * std::exp(lw), ah * std::exp(lh));
}

MatchResult match(const AnchorSet& anchors, const std::vector<LabeledBox>& gts,
                  double iou_threshold, int background_class) {
  const std::size_t n = anchors.size();
  MatchResult r;
  r.gt_index.assign(n, kUnmatched);
  r.label.assign(n, background_class);
  r.target.assign(n, Offsets{0, 0, 0, 0});
  r.forced.assign(n, false);

  std::vector<int> active;
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!gts[g].crowd) active.push_back(static_cast<int>(g));
  if (active.empty()) return r;

  // Best gt per anchor (first maximum wins, i.e. the lower gt index).
  std::vector<double> best_iou(n, -1.0);
  std::vector<int> best_gt(n, kUnmatched);
  for (int g : active) {
    const BoxXYXY& box = gts[g].box;
    int best_anchor = -1;
    double best = -1.0;
    for (std::size_t a = 0; a < n; ++a) {
      const double v = iou(anchors.boxes[a], box);
      if (v > best_iou[a]) {
        best_iou[a] = v;
        best_gt[a] = g;
      }
      if (!r.forced[a] && v > best) {
        best = v;
        best_anchor = static_cast<int>(a);
      }
    }
    if (best_anchor >= 0) {
      r.forced[best_anchor] = true;
      r.gt_index[best_anchor] = g;
    }
  }
  for (std::size_t a = 0; a < n; ++a)
    if (!r.forced[a] && best_gt[a] != kUnmatched && best_iou[a] >= iou_threshold)
      r.gt_index[a] = best_gt[a];
  for (std::size_t a = 0; a < n; ++a) {
    const int g = r.gt_index[a];
    if (g == kUnmatched) continue;
    r.label[a] = gts[g].class_id;
    r.target[a] = encode(gts[g].box, anchors.boxes[a]);
    ++r.n_pos;
  }
  return r;
}

std::vector<double> best_anchor_iou(const AnchorSet& anchors, const std::vector<BoxXYXY>& gts) {
  std::vector<double> best(gts.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t g = 0; g < gts.size(); ++g) {
    double b = 0.0;
    for (const auto& a : anchors.boxes) b = std::max(b, iou(a, gts[g]));
    best[g] = b;
  }
  return best;
}

double coverage_error(const AnchorSet& anchors, const std::vector<BoxXYXY>& gts,
                      double iou_threshold) {
  if (gts.empty()) throw std::invalid_argument("coverage_error: no ground-truth boxes");
  const auto best = best_anchor_iou(anchors, gts);
  std::size_t uncovered = 0;
  for (double b : best) uncovered += b < iou_threshold ? 1 : 0;
  return 100.0 * static_cast<double>(uncovered) / static_cast<double>(gts.size());
}

}  // namespace mdn
