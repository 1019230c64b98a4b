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
#ifndef MDN_HEADS_HPP_
#define MDN_HEADS_HPP_

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "mdn/backbone.hpp"

namespace mdn {

// One predictor: class logits (A*K channels) and box offsets (A*4) per cell.
template <typename T>
class HeadModule {
 public:
  struct Cache {
    typename DSConvUnit<T>::Cache trunk;
    Act<T> x;
    typename BatchNormRelu6<T>::Cache cls_bn, box_bn;
  };
  struct Output {
    Act<T> cls;
    Act<T> box;
  };

  HeadModule(const std::string& name, HeadStyle style, int cin, int width, int anchors,
             int num_classes, const InitContext& ctx);

  Output forward(const Act<T>& x, bool train, Cache* cache) const;
  Tensor<T> backward(const Tensor<T>& dcls, const Tensor<T>& dbox, const Cache& cache);
  void collect(ParamList<T>& out);
  void trace(int h, int w, CostTrace& sink) const;

  int in_channels() const { return cin_; }
  int anchors() const { return anchors_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  HeadStyle style_;
  int cin_, anchors_, classes_;
  DSConvUnit<T> trunk_;                       // trunk style
  DepthwiseConv3x3<T> cls_dw_, box_dw_;       // ssdlite style
  BatchNormRelu6<T> cls_bn_, box_bn_;         // ssdlite style
  PointwiseConv<T> cls_out_, box_out_;
};

// Head modules plus the level -> module assignment for a sharing mode.
// Flattened outputs are N x 1 x anchors x K (logits) and N x 1 x anchors x 4
// (offsets), ordered by level, then row-major cell, then anchor.
template <typename T>
class HeadSet {
 public:
  struct Cache {
    std::array<typename PointwiseBnRelu6<T>::Cache, kNumLevels> adapter;
    std::array<typename HeadModule<T>::Cache, kNumLevels> head;
    std::array<std::array<int, 2>, kNumLevels> extent{};
  };
  struct Output {
    Tensor<T> cls;
    Tensor<T> box;
    std::array<std::array<int, 2>, kNumLevels> extent{};
  };

  HeadSet(const ModelConfig& config, const std::array<int, kNumLevels>& level_channels,
          const InitContext& ctx);

  Output forward(const Pyramid<T>& p, bool train, Cache* cache) const;
  PyramidGrad<T> backward(const Tensor<T>& dcls, const Tensor<T>& dbox, const Cache& cache);
  void collect(ParamList<T>& out);
  void trace(const std::array<std::pair<int, int>, kNumLevels>& dims, CostTrace& sink) const;

  HeadShareMode mode() const { return mode_; }
  int module_count() const { return static_cast<int>(modules_.size()); }
  int module_for_level(int level) const { return assignment_[level]; }
  HeadModule<T>& module(int i) { return *modules_[i]; }
  const HeadModule<T>& module(int i) const { return *modules_[i]; }
  bool has_adapter(int level) const { return adapters_[level].has_value(); }
  int anchors_on_level(int level) const { return anchors_[level]; }

 private:
  HeadShareMode mode_;
  int classes_;
  std::array<int, kNumLevels> assignment_{};
  std::array<int, kNumLevels> anchors_{};
  std::vector<std::unique_ptr<HeadModule<T>>> modules_;
  std::array<std::optional<PointwiseBnRelu6<T>>, kNumLevels> adapters_;
};

// Level -> module index for a sharing mode.
std::array<int, kNumLevels> head_assignment(HeadShareMode mode);

// Bias giving every foreground class probability 0.01 under a softmax whose
// background logit is 0.
double foreground_prior_bias(int num_classes);

}  // namespace mdn

#endif  // MDN_HEADS_HPP_
