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
#include "mdn/backbone.hpp"

#include <set>

namespace mdn {

void check_input_extent(int h, int w) {
  if (h <= 0 || w <= 0 || h % 32 != 0 || w % 32 != 0)
    throw ConfigError("input extent " + std::to_string(h) + "x" + std::to_string(w) +
                      " is not a positive multiple of 32");
}

template <typename T>
Backbone<T>::Backbone(const ModelConfig& config, const InitContext& ctx) {
  config.validate();
  std::set<std::pair<int, int>> sites;
  for (const auto& s : config.dense_connection_sites) sites.insert({s.block, s.layer});
  if (config.backbone_variant == BackboneVariant::kMobileNetV1 && !sites.empty())
    throw ConfigError("mobilenetv1 backbone takes no dense_connection_sites");

  stem_ = StemBlock<T>("backbone.stem", 3, config.scaled(config.stem_width), ctx);
  int channels = stem_.out_channels();
  for (int b = 0; b < kNumBlocks; ++b) {
    const int width = config.scaled(config.block_channel_widths[b]);
    const int first = static_cast<int>(slots_.size());
    for (int l = 0; l < config.block_layer_counts[b]; ++l) {
      const int stride = (l == 0 && b > 0) ? 2 : 1;
      const std::string name =
          "backbone.block" + std::to_string(b + 1) + ".unit" + std::to_string(l + 1);
      Slot slot;
      UnitInfo info{b + 1, l + 1, false, channels, width, stride, 0};
      if (sites.count({b + 1, l + 1})) {
        const int skip_channels = info_[first].out_channels;
        slot.dense = true;
        slot.skip_from = first;
        slot.dense_unit = DenseUnit<T>(name, {channels, skip_channels}, config.bottleneck_ratio,
                                       width, stride, ctx);
        info.dense = true;
        info.bottleneck_channels = slot.dense_unit.bottleneck_channels();
      } else {
        slot.ds = DSConvUnit<T>(name, channels, width, stride, ctx);
      }
      slots_.push_back(std::move(slot));
      info_.push_back(info);
      channels = width;
    }
    if (b >= 2) level_unit_[b - 2] = static_cast<int>(slots_.size()) - 1;
  }
  const int w6 = config.scaled(config.extra_level_widths[0]);
  const int w7 = config.scaled(config.extra_level_widths[1]);
  extras_[0] = DSConvUnit<T>("backbone.extra6", channels, w6, 2, ctx);
  extras_[1] = DSConvUnit<T>("backbone.extra7", w6, w7, 2, ctx);
}

template <typename T>
Pyramid<T> Backbone<T>::forward(const Act<T>& image, bool train, Cache* cache) const {
  check_input_extent(image->h(), image->w());
  if (image->c() != 3)
    throw ConfigError("backbone expects 3-channel images, got " + image->shape_string());
  if (cache) cache->units.assign(slots_.size(), {});
  Act<T> x = stem_.forward(image, train, cache ? &cache->stem : nullptr);
  std::vector<Act<T>> outputs(slots_.size());
  for (std::size_t u = 0; u < slots_.size(); ++u) {
    const Slot& s = slots_[u];
    if (s.dense) {
      x = s.dense_unit.forward(x, {outputs[s.skip_from]}, train,
                               cache ? &cache->units[u].dense : nullptr);
    } else {
      x = s.ds.forward(x, train, cache ? &cache->units[u].ds : nullptr);
    }
    outputs[u] = x;
  }
  Pyramid<T> levels;
  for (int i = 0; i < 3; ++i) levels[i] = outputs[level_unit_[i]];
  levels[3] = extras_[0].forward(levels[2], train, cache ? &cache->extras[0] : nullptr);
  levels[4] = extras_[1].forward(levels[3], train, cache ? &cache->extras[1] : nullptr);
  return levels;
}

namespace {
template <typename T>
void accumulate(Tensor<T>& dst, Tensor<T>&& src) {
  if (src.size() == 0) return;
  if (dst.size() == 0) {
    dst = std::move(src);
  } else {
    add_into(dst, src);
  }
}
}  // namespace

template <typename T>
void Backbone<T>::backward(const PyramidGrad<T>& grads, const Cache& cache) {
  std::vector<Tensor<T>> d_out(slots_.size());
  Tensor<T> d7 = grads[4];
  Tensor<T> d6 = grads[3];
  if (d7.size()) accumulate(d6, extras_[1].backward(d7, cache.extras[1]));
  Tensor<T> d5 = grads[2];
  if (d6.size()) accumulate(d5, extras_[0].backward(d6, cache.extras[0]));
  accumulate(d_out[level_unit_[2]], std::move(d5));
  accumulate(d_out[level_unit_[1]], Tensor<T>(grads[1]));
  accumulate(d_out[level_unit_[0]], Tensor<T>(grads[0]));

  Tensor<T> d_stem;
  for (int u = static_cast<int>(slots_.size()) - 1; u >= 0; --u) {
    if (d_out[u].size() == 0) continue;
    Slot& s = slots_[u];
    Tensor<T>& d_prev = u > 0 ? d_out[u - 1] : d_stem;
    if (s.dense) {
      auto parts = s.dense_unit.backward(d_out[u], cache.units[u].dense);
      accumulate(d_prev, std::move(parts[0]));
      accumulate(d_out[s.skip_from], std::move(parts[1]));
    } else {
      accumulate(d_prev, s.ds.backward(d_out[u], cache.units[u].ds));
    }
    d_out[u] = Tensor<T>();
  }
  if (d_stem.size()) stem_.backward(d_stem, cache.stem);
}

template <typename T>
void Backbone<T>::collect(ParamList<T>& out) {
  stem_.collect(out);
  for (auto& s : slots_) {
    if (s.dense) {
      s.dense_unit.collect(out);
    } else {
      s.ds.collect(out);
    }
  }
  extras_[0].collect(out);
  extras_[1].collect(out);
}

template <typename T>
std::array<std::pair<int, int>, kNumLevels> Backbone<T>::trace(int h, int w,
                                                               CostTrace& sink) const {
  std::array<std::pair<int, int>, kNumLevels> dims{};
  stem_.trace(h, w, sink);
  for (std::size_t u = 0; u < slots_.size(); ++u) {
    if (slots_[u].dense) {
      slots_[u].dense_unit.trace(h, w, sink);
    } else {
      slots_[u].ds.trace(h, w, sink);
    }
    for (int i = 0; i < 3; ++i)
      if (level_unit_[i] == static_cast<int>(u)) dims[i] = {h, w};
  }
  extras_[0].trace(h, w, sink);
  dims[3] = {h, w};
  extras_[1].trace(h, w, sink);
  dims[4] = {h, w};
  return dims;
}

template <typename T>
std::array<int, kNumLevels> Backbone<T>::level_channels() const {
  return {info_[level_unit_[0]].out_channels, info_[level_unit_[1]].out_channels,
          info_[level_unit_[2]].out_channels, extras_[0].out_channels(),
          extras_[1].out_channels()};
}

template <typename T>
int Backbone<T>::dense_site_count() const {
  int n = 0;
  for (const auto& i : info_) n += i.dense ? 1 : 0;
  return n;
}

template class Backbone<float>;
template class Backbone<double>;

}  // namespace mdn
