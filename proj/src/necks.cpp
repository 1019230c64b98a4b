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
#include "mdn/necks.hpp"

#include <string>

namespace mdn {

template <typename T>
Neck<T>::Neck(const ModelConfig& config, const std::array<int, kNumLevels>& in_channels,
              const InitContext& ctx)
    : variant_(config.neck_variant), in_channels_(in_channels), out_channels_(in_channels) {
  const int nc = config.scaled(config.neck_channels);
  auto name = [](int k) { return "neck.p" + std::to_string(k + 3); };
  switch (variant_) {
    case NeckVariant::kSsdLite:
      break;
    case NeckVariant::kFcpnLite:
    case NeckVariant::kSsdcLite: {
      const int merged = variant_ == NeckVariant::kFcpnLite ? 4 : 2;
      for (int k = 0; k < merged; ++k) {
        merge_[k] = true;
        proj_[k].emplace(name(k), in_channels[k] + in_channels[k + 1], nc, ctx);
        out_channels_[k] = nc;
      }
      break;
    }
    case NeckVariant::kFpnLite:
      for (int k = 0; k < kNumLevels; ++k)
        proj_[k].emplace("neck.lateral" + std::to_string(k + 3), in_channels[k], nc, ctx);
      for (int k = 0; k < 4; ++k) {
        merge_[k] = true;
        out_channels_[k] = nc;
      }
      break;
  }
}

template <typename T>
int Neck<T>::merge_sites() const {
  int n = 0;
  for (bool m : merge_) n += m ? 1 : 0;
  return n;
}

template <typename T>
Pyramid<T> Neck<T>::forward(const Pyramid<T>& c, bool train, Cache* cache) const {
  for (int k = 0; k < kNumLevels; ++k) {
    if (c[k]->c() != in_channels_[k])
      throw ConfigError("neck: level " + std::to_string(k + 3) + " has " +
                        std::to_string(c[k]->c()) + " channels, expected " +
                        std::to_string(in_channels_[k]));
    if (cache) cache->extent[k] = {c[k]->h(), c[k]->w()};
  }
  Pyramid<T> p = c;
  if (variant_ == NeckVariant::kSsdLite) return p;
  if (variant_ == NeckVariant::kFpnLite) {
    Pyramid<T> lat;
    for (int k = 0; k < kNumLevels; ++k)
      lat[k] = proj_[k]->forward(c[k], train, cache ? &cache->proj[k] : nullptr);
    for (int k = 0; k < 4; ++k) {
      auto sum = std::make_shared<Tensor<T>>(*lat[k]);
      add_into(*sum, *upsample_nearest(lat[k + 1], lat[k]->h(), lat[k]->w()));
      p[k] = sum;
    }
    return p;
  }
  for (int k = 0; k < kNumLevels; ++k) {
    if (!merge_[k]) continue;
    auto up = upsample_nearest(c[k + 1], c[k]->h(), c[k]->w());
    auto cat = concat_channels<T>({c[k], up});
    p[k] = proj_[k]->forward(cat, train, cache ? &cache->proj[k] : nullptr);
  }
  return p;
}

namespace {
template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  if (src.size() == 0) return;
  if (dst.size() == 0) {
    dst = src;
  } else {
    add_into(dst, src);
  }
}
}  // namespace

template <typename T>
PyramidGrad<T> Neck<T>::backward(const PyramidGrad<T>& dp, const Cache& cache) {
  PyramidGrad<T> dc;
  if (variant_ == NeckVariant::kSsdLite) return dp;
  if (variant_ == NeckVariant::kFpnLite) {
    PyramidGrad<T> dlat;
    for (int k = 0; k < 4; ++k) {
      if (dp[k].size() == 0) continue;
      accumulate(dlat[k], dp[k]);
      accumulate(dlat[k + 1],
                 upsample_nearest_backward(dp[k], cache.extent[k + 1][0], cache.extent[k + 1][1]));
    }
    dc[4] = dp[4];
    for (int k = 0; k < kNumLevels; ++k)
      if (dlat[k].size()) accumulate(dc[k], proj_[k]->backward(dlat[k], cache.proj[k]));
    return dc;
  }
  for (int k = 0; k < kNumLevels; ++k)
    if (!merge_[k]) accumulate(dc[k], dp[k]);
  for (int k = kNumLevels - 1; k >= 0; --k) {
    if (!merge_[k] || dp[k].size() == 0) continue;
    const Tensor<T> dcat = proj_[k]->backward(dp[k], cache.proj[k]);
    auto parts = split_channels(dcat, {in_channels_[k], in_channels_[k + 1]});
    accumulate(dc[k], parts[0]);
    accumulate(dc[k + 1],
               upsample_nearest_backward(parts[1], cache.extent[k + 1][0], cache.extent[k + 1][1]));
  }
  return dc;
}

template <typename T>
void Neck<T>::collect(ParamList<T>& out) {
  for (auto& p : proj_)
    if (p) p->collect(out);
}

template <typename T>
void Neck<T>::trace(const std::array<std::pair<int, int>, kNumLevels>& dims,
                    CostTrace& sink) const {
  for (int k = 0; k < kNumLevels; ++k)
    if (proj_[k]) proj_[k]->trace(dims[k].first, dims[k].second, sink);
}

template class Neck<float>;
template class Neck<double>;

}  // namespace mdn
