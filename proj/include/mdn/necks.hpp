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
#ifndef MDN_NECKS_HPP_
#define MDN_NECKS_HPP_

#include <array>
#include <optional>
#include <vector>

#include "mdn/backbone.hpp"

namespace mdn {

// Maps C3..C7 to P3..P7.
//   ssdlite:  P = C.
//   fcpnlite: P_k = 1x1(concat(C_k, up(C_k+1))) for k = 3..6, P7 = C7.
//   fpnlite:  P_k = L_k + up(L_k+1) with 1x1 laterals L, P7 = C7.
//   ssdclite: merges only into P3 and P4; P5..P7 = C5..C7.
// up() is a nearest resize to the exact extent of the finer map.
template <typename T>
class Neck {
 public:
  struct Cache {
    std::array<typename PointwiseBnRelu6<T>::Cache, kNumLevels> proj;
    std::array<std::array<int, 2>, kNumLevels> extent{};
  };

  Neck(const ModelConfig& config, const std::array<int, kNumLevels>& in_channels,
       const InitContext& ctx);

  Pyramid<T> forward(const Pyramid<T>& c, bool train, Cache* cache) const;
  PyramidGrad<T> backward(const PyramidGrad<T>& dp, const Cache& cache);
  void collect(ParamList<T>& out);
  void trace(const std::array<std::pair<int, int>, kNumLevels>& dims, CostTrace& sink) const;

  NeckVariant variant() const { return variant_; }
  const std::array<int, kNumLevels>& out_channels() const { return out_channels_; }
  // Number of levels that fuse a coarser map.
  int merge_sites() const;
  bool merges(int level) const { return merge_[level]; }

 private:
  NeckVariant variant_;
  std::array<int, kNumLevels> in_channels_{};
  std::array<int, kNumLevels> out_channels_{};
  std::array<bool, kNumLevels> merge_{};
  // Post-merge projections (concat variants) or laterals (fpnlite).
  std::array<std::optional<PointwiseBnRelu6<T>>, kNumLevels> proj_;
};

}  // namespace mdn

#endif  // MDN_NECKS_HPP_
