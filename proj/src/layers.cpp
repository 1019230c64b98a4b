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
#include "mdn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "kernels/dispatch.hpp"

namespace mdn {

using kernels::conv_out;
using kernels::Dims;

namespace {

template <typename T>
Dims dims_of(const Tensor<T>& t) {
  return {t.n(), t.h(), t.w(), t.c()};
}

template <typename T>
void fill_normal(Param<T>& p, double stddev, const InitContext& ctx) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : p.value) v = static_cast<T>(dist(*ctx.rng));
}

void check_channels(const std::string& where, int got, int want) {
  if (got != want)
    throw std::invalid_argument(where + ": expected " + std::to_string(want) +
                                " input channels, got " + std::to_string(got));
}

}  // namespace

int bottleneck_width(double ratio, int concat_channels) {
  return std::max(1, static_cast<int>(std::lround(ratio * concat_channels)));
}

// ---------------------------------------------------------------- BN + ReLU6

template <typename T>
BatchNormRelu6<T>::BatchNormRelu6(const std::string& name, int channels,
                                  const InitContext& ctx)
    : gamma(name + ".gamma", {channels}, true, false),
      beta(name + ".beta", {channels}, true, false),
      running_mean(name + ".running_mean", {channels}, false, false),
      running_var(name + ".running_var", {channels}, false, false),
      channels_(channels),
      eps_(ctx.bn_epsilon),
      momentum_(ctx.bn_momentum) {
  gamma.value.assign(channels, T(1));
  running_var.value.assign(channels, T(1));
}

template <typename T>
Act<T> BatchNormRelu6<T>::forward(const Act<T>& x, bool train, Cache* cache) const {
  check_channels(gamma.name, x->c(), channels_);
  const std::size_t rows = x->pixels();
  std::vector<T> mean(channels_), var(channels_), invstd(channels_);
  if (train) {
    MDN_KERNEL(batch_stats, x->data(), rows, channels_, mean.data(), var.data());
  } else {
    mean = running_mean.value;
    var = running_var.value;
  }
  for (int c = 0; c < channels_; ++c)
    invstd[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var[c]) + eps_));
  auto y = make_tensor<T>(x->n(), x->h(), x->w(), x->c());
  MDN_KERNEL(bn_relu6_forward, x->data(), rows, channels_, mean.data(), invstd.data(),
             gamma.value.data(), beta.value.data(), y->data());
  if (cache) {
    cache->x = x;
    cache->y = y;
    cache->mean = std::move(mean);
    cache->var = std::move(var);
    cache->invstd = std::move(invstd);
    cache->batch = train;
  }
  return y;
}

template <typename T>
Tensor<T> BatchNormRelu6<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  const Tensor<T>& x = *cache.x;
  const std::size_t rows = x.pixels();
  Tensor<T> dx(x.n(), x.h(), x.w(), x.c());
  MDN_KERNEL(bn_relu6_backward, x.data(), cache.y->data(), dy.data(), rows, channels_,
             cache.mean.data(), cache.invstd.data(), gamma.value.data(), cache.batch,
             dx.data(), gamma.grad.data(), beta.grad.data());
  if (cache.batch && rows > 0) {
    const double unbias = rows > 1 ? static_cast<double>(rows) / (rows - 1) : 1.0;
    for (int c = 0; c < channels_; ++c) {
      running_mean.value[c] = static_cast<T>(momentum_ * running_mean.value[c] +
                                             (1.0 - momentum_) * cache.mean[c]);
      running_var.value[c] = static_cast<T>(momentum_ * running_var.value[c] +
                                            (1.0 - momentum_) * cache.var[c] * unbias);
    }
  }
  return dx;
}

template <typename T>
void BatchNormRelu6<T>::collect(ParamList<T>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
  out.push_back(&running_mean);
  out.push_back(&running_var);
}

// ---------------------------------------------------------------- depthwise

template <typename T>
DepthwiseConv3x3<T>::DepthwiseConv3x3(const std::string& name, int channels, int stride,
                                      const InitContext& ctx)
    : weight(name + ".weight", {3, 3, channels}, true, true),
      channels_(channels),
      stride_(stride) {
  if (stride != 1 && stride != 2) throw std::invalid_argument(name + ": stride must be 1 or 2");
  fill_normal(weight, std::sqrt(2.0 / 9.0), ctx);
}

template <typename T>
Act<T> DepthwiseConv3x3<T>::forward(const Act<T>& x) const {
  check_channels(weight.name, x->c(), channels_);
  auto y = make_tensor<T>(x->n(), conv_out(x->h(), stride_), conv_out(x->w(), stride_),
                          channels_);
  MDN_KERNEL(depthwise3x3_forward, x->data(), dims_of(*x), weight.value.data(), stride_,
             y->data());
  return y;
}

template <typename T>
Tensor<T> DepthwiseConv3x3<T>::backward(const Tensor<T>& dy, const Tensor<T>& x) {
  Tensor<T> dx(x.n(), x.h(), x.w(), x.c());
  MDN_KERNEL(depthwise3x3_backward_weight, x.data(), dims_of(x), dy.data(), stride_,
             weight.grad.data());
  MDN_KERNEL(depthwise3x3_backward_input, dy.data(), dims_of(x), weight.value.data(), stride_,
             dx.data());
  return dx;
}

template <typename T>
std::int64_t DepthwiseConv3x3<T>::madds(int h, int w) const {
  return std::int64_t{conv_out(h, stride_)} * conv_out(w, stride_) * 9 * channels_;
}

// ---------------------------------------------------------------- pointwise

template <typename T>
PointwiseConv<T>::PointwiseConv(const std::string& name, int cin, int cout, bool with_bias,
                                const InitContext& ctx)
    : weight(name + ".weight", {cin, cout}, true, true), cin_(cin), cout_(cout),
      has_bias_(with_bias) {
  if (with_bias) bias = Param<T>(name + ".bias", {cout}, true, false);
  fill_normal(weight, std::sqrt(2.0 / cin), ctx);
}

template <typename T>
Act<T> PointwiseConv<T>::forward(const Act<T>& x) const {
  check_channels(weight.name, x->c(), cin_);
  auto y = make_tensor<T>(x->n(), x->h(), x->w(), cout_);
  MDN_KERNEL(pointwise_forward, x->data(), x->pixels(), cin_, weight.value.data(),
             has_bias_ ? bias.value.data() : static_cast<const T*>(nullptr), cout_, y->data());
  return y;
}

template <typename T>
Tensor<T> PointwiseConv<T>::backward(const Tensor<T>& dy, const Tensor<T>& x, bool need_dx) {
  Tensor<T> dx;
  if (need_dx) dx = Tensor<T>(x.n(), x.h(), x.w(), cin_);
  MDN_KERNEL(pointwise_backward, x.data(), dy.data(), x.pixels(), cin_, weight.value.data(),
             cout_, need_dx ? dx.data() : static_cast<T*>(nullptr), weight.grad.data(),
             has_bias_ ? bias.grad.data() : static_cast<T*>(nullptr));
  return dx;
}

template <typename T>
void PointwiseConv<T>::collect(ParamList<T>& out) {
  out.push_back(&weight);
  if (has_bias_) out.push_back(&bias);
}

template <typename T>
std::int64_t PointwiseConv<T>::madds(int h, int w) const {
  return std::int64_t{h} * w * cin_ * cout_;
}

// ---------------------------------------------------------------- stem

template <typename T>
StemConv<T>::StemConv(const std::string& name, int cin, int cout, int stride,
                      const InitContext& ctx)
    : weight(name + ".weight", {3, 3, cin, cout}, true, true),
      cin_(cin),
      cout_(cout),
      stride_(stride) {
  fill_normal(weight, std::sqrt(2.0 / (9.0 * cin)), ctx);
}

template <typename T>
Act<T> StemConv<T>::forward(const Act<T>& x) const {
  check_channels(weight.name, x->c(), cin_);
  auto y = make_tensor<T>(x->n(), conv_out(x->h(), stride_), conv_out(x->w(), stride_), cout_);
  MDN_KERNEL(conv3x3_forward, x->data(), dims_of(*x), weight.value.data(), cout_, stride_,
             y->data());
  return y;
}

template <typename T>
void StemConv<T>::backward(const Tensor<T>& dy, const Tensor<T>& x) {
  MDN_KERNEL(conv3x3_backward_weight, x.data(), dims_of(x), dy.data(), cout_, stride_,
             weight.grad.data());
}

template <typename T>
std::int64_t StemConv<T>::madds(int h, int w) const {
  return std::int64_t{conv_out(h, stride_)} * conv_out(w, stride_) * 9 * cin_ * cout_;
}

template <typename T>
StemBlock<T>::StemBlock(const std::string& name, int cin, int cout, const InitContext& ctx)
    : name_(name), conv_(name + ".conv", cin, cout, 2, ctx), bn_(name + ".bn", cout, ctx) {}

template <typename T>
Act<T> StemBlock<T>::forward(const Act<T>& x, bool train, Cache* cache) const {
  auto z = conv_.forward(x);
  if (cache) cache->x = x;
  return bn_.forward(z, train, cache ? &cache->bn : nullptr);
}

template <typename T>
void StemBlock<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  const Tensor<T> dz = bn_.backward(dy, cache.bn);
  conv_.backward(dz, *cache.x);
}

template <typename T>
void StemBlock<T>::collect(ParamList<T>& out) {
  conv_.collect(out);
  bn_.collect(out);
}

template <typename T>
void StemBlock<T>::trace(int& h, int& w, CostTrace& sink) const {
  sink.push_back({name_ + ".conv", conv_.madds(h, w)});
  h = conv_out(h, conv_.stride());
  w = conv_out(w, conv_.stride());
}

// ---------------------------------------------------------------- 1x1 + BN

template <typename T>
PointwiseBnRelu6<T>::PointwiseBnRelu6(const std::string& name, int cin, int cout,
                                      const InitContext& ctx)
    : name_(name), pw_(name + ".pw", cin, cout, false, ctx), bn_(name + ".bn", cout, ctx) {}

template <typename T>
Act<T> PointwiseBnRelu6<T>::forward(const Act<T>& x, bool train, Cache* cache) const {
  auto z = pw_.forward(x);
  if (cache) cache->x = x;
  return bn_.forward(z, train, cache ? &cache->bn : nullptr);
}

template <typename T>
Tensor<T> PointwiseBnRelu6<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  const Tensor<T> dz = bn_.backward(dy, cache.bn);
  return pw_.backward(dz, *cache.x);
}

template <typename T>
void PointwiseBnRelu6<T>::collect(ParamList<T>& out) {
  pw_.collect(out);
  bn_.collect(out);
}

template <typename T>
void PointwiseBnRelu6<T>::trace(int h, int w, CostTrace& sink) const {
  sink.push_back({name_ + ".pw", pw_.madds(h, w)});
}

// ---------------------------------------------------------------- DS unit

template <typename T>
DSConvUnit<T>::DSConvUnit(const std::string& name, int cin, int cout, int stride,
                          const InitContext& ctx)
    : name_(name),
      dw_(name + ".dw", cin, stride, ctx),
      bn1_(name + ".dw_bn", cin, ctx),
      pw_(name + ".pw", cin, cout, false, ctx),
      bn2_(name + ".pw_bn", cout, ctx) {}

template <typename T>
Act<T> DSConvUnit<T>::forward(const Act<T>& x, bool train, Cache* cache) const {
  if (cache) cache->x = x;
  auto a = bn1_.forward(dw_.forward(x), train, cache ? &cache->bn1 : nullptr);
  return bn2_.forward(pw_.forward(a), train, cache ? &cache->bn2 : nullptr);
}

template <typename T>
Tensor<T> DSConvUnit<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  const Tensor<T> d_pw = bn2_.backward(dy, cache.bn2);
  const Tensor<T> d_a = pw_.backward(d_pw, *cache.bn1.y);
  const Tensor<T> d_dw = bn1_.backward(d_a, cache.bn1);
  return dw_.backward(d_dw, *cache.x);
}

template <typename T>
void DSConvUnit<T>::collect(ParamList<T>& out) {
  dw_.collect(out);
  bn1_.collect(out);
  pw_.collect(out);
  bn2_.collect(out);
}

template <typename T>
void DSConvUnit<T>::trace(int& h, int& w, CostTrace& sink) const {
  sink.push_back({name_ + ".dw", dw_.madds(h, w)});
  h = conv_out(h, dw_.stride());
  w = conv_out(w, dw_.stride());
  sink.push_back({name_ + ".pw", pw_.madds(h, w)});
}

// ---------------------------------------------------------------- dense unit

namespace {
int sum_of(const std::vector<int>& v) {
  int s = 0;
  for (int x : v) s += x;
  return s;
}
}  // namespace

template <typename T>
DenseUnit<T>::DenseUnit(const std::string& name, const std::vector<int>& part_channels,
                        double ratio, int cout, int stride, const InitContext& ctx)
    : parts_(part_channels),
      bottleneck_(name + ".bottleneck", sum_of(part_channels),
                  bottleneck_width(ratio, sum_of(part_channels)), ctx),
      unit_(name + ".unit", bottleneck_width(ratio, sum_of(part_channels)), cout, stride, ctx) {}

template <typename T>
Act<T> DenseUnit<T>::forward(const Act<T>& x, const std::vector<Act<T>>& skips, bool train,
                             Cache* cache) const {
  std::vector<Act<T>> parts{x};
  for (const auto& s : skips) {
    if (s->n() != x->n() || s->h() != x->h() || s->w() != x->w())
      throw std::invalid_argument("dense unit: skip " + s->shape_string() +
                                  " does not match input " + x->shape_string());
    parts.push_back(s);
  }
  if (parts.size() != parts_.size())
    throw std::invalid_argument("dense unit: wrong number of inputs");
  auto cat = parts.size() == 1 ? x : mdn::concat_channels<T>(parts);
  if (cache) {
    cache->part_channels = parts_;
    cache->concat = cat;
  }
  auto b = bottleneck_.forward(cat, train, cache ? &cache->bottleneck : nullptr);
  return unit_.forward(b, train, cache ? &cache->unit : nullptr);
}

template <typename T>
std::vector<Tensor<T>> DenseUnit<T>::backward(const Tensor<T>& dy, const Cache& cache) {
  const Tensor<T> db = unit_.backward(dy, cache.unit);
  Tensor<T> dcat = bottleneck_.backward(db, cache.bottleneck);
  if (parts_.size() == 1) return {std::move(dcat)};
  return mdn::split_channels(dcat, parts_);
}

template <typename T>
void DenseUnit<T>::collect(ParamList<T>& out) {
  bottleneck_.collect(out);
  unit_.collect(out);
}

template <typename T>
void DenseUnit<T>::trace(int& h, int& w, CostTrace& sink) const {
  bottleneck_.trace(h, w, sink);
  unit_.trace(h, w, sink);
}

// ---------------------------------------------------------------- helpers

template <typename T>
Act<T> concat_channels(const std::vector<Act<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat of nothing");
  const auto& first = *parts.front();
  int total = 0;
  for (const auto& p : parts) {
    if (p->n() != first.n() || p->h() != first.h() || p->w() != first.w())
      throw std::invalid_argument("concat: spatial mismatch " + p->shape_string() + " vs " +
                                  first.shape_string());
    total += p->c();
  }
  const std::size_t px = first.pixels();
  if (parts.size() == 2) {
    auto out = make_tensor<T>(first.n(), first.h(), first.w(), total);
    MDN_KERNEL(concat_channels, first.data(), first.c(), parts[1]->data(), parts[1]->c(), px,
               out->data());
    return out;
  }
  // Pairwise kernel applied left to right.
  auto acc = std::make_shared<Tensor<T>>(first);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto next = make_tensor<T>(first.n(), first.h(), first.w(), acc->c() + parts[i]->c());
    MDN_KERNEL(concat_channels, acc->data(), acc->c(), parts[i]->data(), parts[i]->c(), px,
               next->data());
    acc = std::move(next);
  }
  return acc;
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& whole, const std::vector<int>& channels) {
  std::vector<Tensor<T>> out;
  const std::size_t px = whole.pixels();
  Tensor<T> rest = whole;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const int ca = channels[i];
    const int cb = rest.c() - ca;
    Tensor<T> head(whole.n(), whole.h(), whole.w(), ca);
    if (i + 1 == channels.size()) {
      out.push_back(std::move(rest));
      break;
    }
    Tensor<T> tail(whole.n(), whole.h(), whole.w(), cb);
    MDN_KERNEL(split_channels, rest.data(), px, ca, cb, head.data(), tail.data());
    out.push_back(std::move(head));
    rest = std::move(tail);
  }
  return out;
}

template <typename T>
Act<T> upsample_nearest(const Act<T>& x, int out_h, int out_w) {
  auto y = make_tensor<T>(x->n(), out_h, out_w, x->c());
  MDN_KERNEL(upsample_nearest_forward, x->data(), dims_of(*x), out_h, out_w, y->data());
  return y;
}

template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& dy, int in_h, int in_w) {
  Tensor<T> dx(dy.n(), in_h, in_w, dy.c());
  MDN_KERNEL(upsample_nearest_backward, dy.data(), dims_of(dx), dy.h(), dy.w(), dx.data());
  return dx;
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  if (!dst.same_shape(src))
    throw std::invalid_argument("add: shape " + src.shape_string() + " vs " +
                                dst.shape_string());
  T* d = dst.data();
  const T* s = src.data();
  const std::size_t n = dst.size();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < n; ++i) d[i] += s[i];
}

#define MDN_LAYERS_INSTANTIATE(T)                                                      \
  template class BatchNormRelu6<T>;                                                    \
  template class DepthwiseConv3x3<T>;                                                  \
  template class PointwiseConv<T>;                                                     \
  template class StemConv<T>;                                                          \
  template class StemBlock<T>;                                                         \
  template class PointwiseBnRelu6<T>;                                                  \
  template class DSConvUnit<T>;                                                        \
  template class DenseUnit<T>;                                                         \
  template Act<T> concat_channels<T>(const std::vector<Act<T>>&);                      \
  template std::vector<Tensor<T>> split_channels<T>(const Tensor<T>&,                  \
                                                    const std::vector<int>&);          \
  template Act<T> upsample_nearest<T>(const Act<T>&, int, int);                        \
  template Tensor<T> upsample_nearest_backward<T>(const Tensor<T>&, int, int);         \
  template void add_into<T>(Tensor<T>&, const Tensor<T>&);

MDN_LAYERS_INSTANTIATE(float)
MDN_LAYERS_INSTANTIATE(double)

}  // namespace mdn
