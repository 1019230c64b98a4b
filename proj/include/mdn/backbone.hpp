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
#ifndef MDN_BACKBONE_HPP_
#define MDN_BACKBONE_HPP_

#include <array>
#include <string>
#include <vector>

#include "mdn/config.hpp"
#include "mdn/layers.hpp"

namespace mdn {

// Five maps, finest first (C3..C7 out of the backbone, P3..P7 out of a neck).
template <typename T>
using Pyramid = std::array<Act<T>, kNumLevels>;
// Gradients for a pyramid. An empty tensor stands for an all-zero gradient.
template <typename T>
using PyramidGrad = std::array<Tensor<T>, kNumLevels>;

template <typename T>
struct FeatureMap {
  std::string level;
  double stride = 0.0;
  Act<T> data;
  int channels() const { return data ? data->c() : 0; }
};

// Describes one unit of the backbone body, for inspection and tests.
struct UnitInfo {
  int block = 0;  // 1-based
  int layer = 0;  // 1-based
  bool dense = false;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int bottleneck_channels = 0;  // dense units only
};

template <typename T>
class Backbone {
 public:
  struct UnitCache {
    typename DSConvUnit<T>::Cache ds;
    typename DenseUnit<T>::Cache dense;
  };
  struct Cache {
    typename StemBlock<T>::Cache stem;
    std::vector<UnitCache> units;
    std::array<typename DSConvUnit<T>::Cache, 2> extras;
  };

  Backbone(const ModelConfig& config, const InitContext& ctx);

  // image: N x H x W x 3 with H and W multiples of 32. Returns C3..C7.
  Pyramid<T> forward(const Act<T>& image, bool train, Cache* cache) const;
  void backward(const PyramidGrad<T>& grads, const Cache& cache);
  void collect(ParamList<T>& out);
  // Appends per-layer costs and returns the (h, w) of each level.
  std::array<std::pair<int, int>, kNumLevels> trace(int h, int w, CostTrace& sink) const;

  std::array<int, kNumLevels> level_channels() const;
  const std::vector<UnitInfo>& units() const { return info_; }
  int dense_site_count() const;

 private:
  struct Slot {
    bool dense = false;
    DSConvUnit<T> ds;
    DenseUnit<T> dense_unit;
    int skip_from = -1;  // index of the unit whose output is concatenated
  };

  StemBlock<T> stem_;
  std::vector<Slot> slots_;
  std::vector<UnitInfo> info_;
  std::array<int, 3> level_unit_{};  // last unit of blocks 3, 4, 5
  std::array<DSConvUnit<T>, 2> extras_;
};

// Throws ConfigError unless both sides are positive multiples of 32.
void check_input_extent(int h, int w);

}  // namespace mdn

#endif  // MDN_BACKBONE_HPP_
