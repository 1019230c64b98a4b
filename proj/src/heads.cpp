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
#include "mdn/heads.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace mdn {

std::array<int, kNumLevels> head_assignment(HeadShareMode mode) {
  switch (mode) {
    case HeadShareMode::kFullShare:
      return {0, 0, 0, 0, 0};
    case HeadShareMode::kShareExcept1:
      return {0, 0, 0, 0, 1};
    case HeadShareMode::kHalfShare:
      return {0, 0, 1, 1, 2};
    case HeadShareMode::kNonShare:
      break;
  }
  return {0, 1, 2, 3, 4};
}

double foreground_prior_bias(int num_classes) {
  const double prior = 0.01;
  const double rest = std::max(1e-3, 1.0 - prior * (num_classes - 1));
  return std::log(prior / rest);
}

namespace {

template <typename T>
void init_output(PointwiseConv<T>& pw, const InitContext& ctx) {
  std::normal_distribution<double> dist(0.0, 0.01);
  for (auto& v : pw.weight.value) v = static_cast<T>(dist(*ctx.rng));
}

}  // namespace

template <typename T>
HeadModule<T>::HeadModule(const std::string& name, HeadStyle style, int cin, int width,
                          int anchors, int num_classes, const InitContext& ctx)
    : name_(name), style_(style), cin_(cin), anchors_(anchors), classes_(num_classes) {
  int proj_in = cin;
  if (style == HeadStyle::kTrunk) {
    trunk_ = DSConvUnit<T>(name + ".trunk", cin, width, 1, ctx);
    proj_in = width;
  } else {
    cls_dw_ = DepthwiseConv3x3<T>(name + ".cls_dw", cin, 1, ctx);
    cls_bn_ = BatchNormRelu6<T>(name + ".cls_dw_bn", cin, ctx);
    box_dw_ = DepthwiseConv3x3<T>(name + ".box_dw", cin, 1, ctx);
    box_bn_ = BatchNormRelu6<T>(name + ".box_dw_bn", cin, ctx);
  }
  cls_out_ = PointwiseConv<T>(name + ".cls", proj_in, anchors * num_classes, true, ctx);
  box_out_ = PointwiseConv<T>(name + ".box", proj_in, anchors * 4, true, ctx);
  init_output(cls_out_, ctx);
  init_output(box_out_, ctx);
  const T fg = static_cast<T>(foreground_prior_bias(num_classes));
  for (int a = 0; a < anchors; ++a)
    for (int k = 0; k < num_classes; ++k)
      cls_out_.bias.value[a * num_classes + k] = k == num_classes - 1 ? T(0) : fg;
}

template <typename T>
typename HeadModule<T>::Output HeadModule<T>::forward(const Act<T>& x, bool train,
                                                      Cache* cache) const {
  if (x->c() != cin_)
    throw ConfigError(name_ + ": expected " + std::to_string(cin_) + " channels, got " +
                      std::to_string(x->c()));
  if (style_ == HeadStyle::kTrunk) {
    auto t = trunk_.forward(x, train, cache ? &cache->trunk : nullptr);
    return {cls_out_.forward(t), box_out_.forward(t)};
  }
  if (cache) cache->x = x;
  auto c = cls_bn_.forward(cls_dw_.forward(x), train, cache ? &cache->cls_bn : nullptr);
  auto b = box_bn_.forward(box_dw_.forward(x), train, cache ? &cache->box_bn : nullptr);
  return {cls_out_.forward(c), box_out_.forward(b)};
}

template <typename T>
Tensor<T> HeadModule<T>::backward(const Tensor<T>& dcls, const Tensor<T>& dbox,
                                  const Cache& cache) {
  if (style_ == HeadStyle::kTrunk) {
    const Tensor<T>& t = *cache.trunk.bn2.y;
    Tensor<T> dt = cls_out_.backward(dcls, t);
    add_into(dt, box_out_.backward(dbox, t));
    return trunk_.backward(dt, cache.trunk);
  }
  const Tensor<T> dc = cls_out_.backward(dcls, *cache.cls_bn.y);
  const Tensor<T> db = box_out_.backward(dbox, *cache.box_bn.y);
  Tensor<T> dx = cls_dw_.backward(cls_bn_.backward(dc, cache.cls_bn), *cache.x);
  add_into(dx, box_dw_.backward(box_bn_.backward(db, cache.box_bn), *cache.x));
  return dx;
}

template <typename T>
void HeadModule<T>::collect(ParamList<T>& out) {
  if (style_ == HeadStyle::kTrunk) {
    trunk_.collect(out);
  } else {
    cls_dw_.collect(out);
    cls_bn_.collect(out);
    box_dw_.collect(out);
    box_bn_.collect(out);
  }
  cls_out_.collect(out);
  box_out_.collect(out);
}

template <typename T>
void HeadModule<T>::trace(int h, int w, CostTrace& sink) const {
  int th = h, tw = w;
  if (style_ == HeadStyle::kTrunk) {
    trunk_.trace(th, tw, sink);
  } else {
    sink.push_back({name_ + ".cls_dw", cls_dw_.madds(h, w)});
    sink.push_back({name_ + ".box_dw", box_dw_.madds(h, w)});
  }
  sink.push_back({name_ + ".cls", cls_out_.madds(h, w)});
  sink.push_back({name_ + ".box", box_out_.madds(h, w)});
}

template <typename T>
HeadSet<T>::HeadSet(const ModelConfig& config,
                    const std::array<int, kNumLevels>& level_channels, const InitContext& ctx)
    : mode_(config.head_share_mode), classes_(config.num_classes) {
  assignment_ = head_assignment(mode_);
  const int width = config.scaled(config.neck_channels);
  const bool shared = mode_ != HeadShareMode::kNonShare;
  int count = 0;
  for (int l = 0; l < kNumLevels; ++l) {
    anchors_[l] = config.anchors_on_level(l);
    count = std::max(count, assignment_[l] + 1);
  }
  for (int m = 0; m < count; ++m) {
    int first = 0;
    while (assignment_[first] != m) ++first;
    const int cin = shared ? width : level_channels[first];
    modules_.push_back(std::make_unique<HeadModule<T>>("head.h" + std::to_string(m + 1),
                                                       config.head_style, cin, width,
                                                       anchors_[first], classes_, ctx));
  }
  for (int l = 0; l < kNumLevels; ++l) {
    const auto& mod = *modules_[assignment_[l]];
    if (mod.anchors() != anchors_[l])
      throw ConfigError("levels sharing a head must use the same anchor count");
    if (level_channels[l] != mod.in_channels())
      adapters_[l].emplace("head.adapter" + std::to_string(l + 3), level_channels[l],
                           mod.in_channels(), ctx);
  }
}

template <typename T>
typename HeadSet<T>::Output HeadSet<T>::forward(const Pyramid<T>& p, bool train,
                                                Cache* cache) const {
  const int n = p[0]->n();
  std::array<typename HeadModule<T>::Output, kNumLevels> maps;
  std::size_t total = 0;
  Output out;
  for (int l = 0; l < kNumLevels; ++l) {
    Act<T> x = p[l];
    if (adapters_[l]) x = adapters_[l]->forward(x, train, cache ? &cache->adapter[l] : nullptr);
    maps[l] = modules_[assignment_[l]]->forward(x, train, cache ? &cache->head[l] : nullptr);
    out.extent[l] = {p[l]->h(), p[l]->w()};
    total += static_cast<std::size_t>(p[l]->h()) * p[l]->w() * anchors_[l];
  }
  if (cache) cache->extent = out.extent;
  out.cls = Tensor<T>(n, 1, static_cast<int>(total), classes_);
  out.box = Tensor<T>(n, 1, static_cast<int>(total), 4);
  std::size_t offset = 0;
  for (int l = 0; l < kNumLevels; ++l) {
    const std::size_t count = static_cast<std::size_t>(out.extent[l][0]) * out.extent[l][1] * anchors_[l];
    for (int i = 0; i < n; ++i) {
      std::memcpy(out.cls.data() + (i * total + offset) * classes_,
                  maps[l].cls->data() + i * count * classes_, sizeof(T) * count * classes_);
      std::memcpy(out.box.data() + (i * total + offset) * 4, maps[l].box->data() + i * count * 4,
                  sizeof(T) * count * 4);
    }
    offset += count;
  }
  return out;
}

template <typename T>
PyramidGrad<T> HeadSet<T>::backward(const Tensor<T>& dcls, const Tensor<T>& dbox,
                                    const Cache& cache) {
  const int n = dcls.n();
  const std::size_t total = static_cast<std::size_t>(dcls.w());
  PyramidGrad<T> dp;
  std::size_t offset = 0;
  for (int l = 0; l < kNumLevels; ++l) {
    const int h = cache.extent[l][0], w = cache.extent[l][1];
    const int a = anchors_[l];
    const std::size_t count = static_cast<std::size_t>(h) * w * a;
    Tensor<T> gc(n, h, w, a * classes_), gb(n, h, w, a * 4);
    for (int i = 0; i < n; ++i) {
      std::memcpy(gc.data() + i * count * classes_, dcls.data() + (i * total + offset) * classes_,
                  sizeof(T) * count * classes_);
      std::memcpy(gb.data() + i * count * 4, dbox.data() + (i * total + offset) * 4,
                  sizeof(T) * count * 4);
    }
    offset += count;
    Tensor<T> dx = modules_[assignment_[l]]->backward(gc, gb, cache.head[l]);
    dp[l] = adapters_[l] ? adapters_[l]->backward(dx, cache.adapter[l]) : std::move(dx);
  }
  return dp;
}

template <typename T>
void HeadSet<T>::collect(ParamList<T>& out) {
  for (auto& a : adapters_)
    if (a) a->collect(out);
  for (auto& m : modules_) m->collect(out);
}

template <typename T>
void HeadSet<T>::trace(const std::array<std::pair<int, int>, kNumLevels>& dims,
                       CostTrace& sink) const {
  for (int l = 0; l < kNumLevels; ++l) {
    if (adapters_[l]) adapters_[l]->trace(dims[l].first, dims[l].second, sink);
    modules_[assignment_[l]]->trace(dims[l].first, dims[l].second, sink);
  }
}

template class HeadModule<float>;
template class HeadModule<double>;
template class HeadSet<float>;
template class HeadSet<double>;

}  // namespace mdn
