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
#ifndef MDN_LOSSES_HPP_
#define MDN_LOSSES_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mdn/anchors.hpp"
#include "mdn/config.hpp"
#include "mdn/tensor.hpp"

namespace mdn {

inline constexpr double kProbEpsilon = 1e-7;

struct LossBreakdown {
  double classification = 0.0;  // summed, before division by N
  double localization = 0.0;    // summed, before division by N
  double total = 0.0;           // (classification + a * localization) / max(N, 1)
  int n_pos = 0;
  int n_neg_selected = 0;
  bool no_positives = false;    // N was 0 and the divisor fell back to 1
};

// Distance-IoU loss 1 - IoU + |center offset|^2 / enclosing diagonal^2.
double diou_loss(const BoxXYXY& pred, const BoxXYXY& gt);
// Same value; grad receives d loss / d (x1, y1, x2, y2) of pred.
double diou_loss_grad(const BoxXYXY& pred, const BoxXYXY& gt, std::array<double, 4>& grad);

// Elementwise Huber with transition 1, summed.
double smooth_l1(const Offsets& pred, const Offsets& target, Offsets* grad = nullptr);

int hard_negative_count(int n_pos, int n_neg, int ratio);
// Indices (ascending) of the k candidates with the largest loss; ties go to
// the lower index.
std::vector<std::size_t> select_hard_negatives(std::span<const double> loss,
                                               std::span<const unsigned char> candidate,
                                               std::size_t k);

// Weighted cross entropy with hard negative mining over one image, for a
// row-major anchors x K probability matrix. Returns the summed loss.
double ce_hard_negative_image(std::span<const double> probs, int num_classes,
                              const MatchResult& match, int ratio, double neg_coef,
                              int* n_neg_selected = nullptr);

// Focal loss with uniform alpha over every anchor of one image.
double focal_image(std::span<const double> probs, int num_classes, const MatchResult& match,
                   double alpha, double gamma);

struct LossTargets {
  const AnchorSet* anchors = nullptr;
  const std::vector<MatchResult>* matches = nullptr;
  const std::vector<std::vector<LabeledBox>>* gts = nullptr;
};

// Full objective over a batch. cls is N x 1 x anchors x K, box is
// N x 1 x anchors x 4. When the gradient tensors are non-null they receive
// d total / d input (overwritten).
template <typename T>
LossBreakdown detection_loss(const Tensor<T>& cls, const Tensor<T>& box,
                             const LossTargets& targets, const ModelConfig& config,
                             Tensor<T>* dcls, Tensor<T>* dbox);

}  // namespace mdn

#endif  // MDN_LOSSES_HPP_
