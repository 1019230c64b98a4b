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
#ifndef MDN_LAYERS_HPP_
#define MDN_LAYERS_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mdn/tensor.hpp"

namespace mdn {

// One row of a cost trace: a named layer and its multiply-adds.
struct CostEntry {
  std::string name;
  std::int64_t madds = 0;
};
using CostTrace = std::vector<CostEntry>;

struct InitContext {
  std::mt19937_64* rng = nullptr;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.99;
};

// Forward calls are const and write what backward needs into a caller-owned
// cache. Passing a null cache runs inference without retaining anything.
// Backward accumulates parameter gradients and returns the input gradient.

template <typename T>
class BatchNormRelu6 {
 public:
  struct Cache {
    Act<T> x;
    Act<T> y;
    std::vector<T> mean, var, invstd;
    bool batch = false;
  };

  BatchNormRelu6() = default;
  BatchNormRelu6(const std::string& name, int channels, const InitContext& ctx);

  Act<T> forward(const Act<T>& x, bool train, Cache* cache) const;
  // Also folds the cached batch statistics into the running estimates.
  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache);
  void collect(ParamList<T>& out);

  int channels() const { return channels_; }
  Param<T> gamma, beta, running_mean, running_var;

 private:
  int channels_ = 0;
  double eps_ = 1e-5;
  double momentum_ = 0.99;
};

template <typename T>
class DepthwiseConv3x3 {
 public:
  DepthwiseConv3x3() = default;
  DepthwiseConv3x3(const std::string& name, int channels, int stride, const InitContext& ctx);

  Act<T> forward(const Act<T>& x) const;
  Tensor<T> backward(const Tensor<T>& dy, const Tensor<T>& x);
  void collect(ParamList<T>& out) { out.push_back(&weight); }
  std::int64_t madds(int h, int w) const;

  int channels() const { return channels_; }
  int stride() const { return stride_; }
  Param<T> weight;

 private:
  int channels_ = 0;
  int stride_ = 1;
};

template <typename T>
class PointwiseConv {
 public:
  PointwiseConv() = default;
  PointwiseConv(const std::string& name, int cin, int cout, bool with_bias,
                const InitContext& ctx);

  Act<T> forward(const Act<T>& x) const;
  // need_dx == false skips the input gradient and returns an empty tensor.
  Tensor<T> backward(const Tensor<T>& dy, const Tensor<T>& x, bool need_dx = true);
  void collect(ParamList<T>& out);
  std::int64_t madds(int h, int w) const;

  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }
  bool has_bias() const { return has_bias_; }
  Param<T> weight, bias;

 private:
  int cin_ = 0, cout_ = 0;
  bool has_bias_ = false;
};

// Dense 3x3 convolution, used only for the stem; no input gradient.
template <typename T>
class StemConv {
 public:
  StemConv() = default;
  StemConv(const std::string& name, int cin, int cout, int stride, const InitContext& ctx);

  Act<T> forward(const Act<T>& x) const;
  void backward(const Tensor<T>& dy, const Tensor<T>& x);
  void collect(ParamList<T>& out) { out.push_back(&weight); }
  std::int64_t madds(int h, int w) const;

  int out_channels() const { return cout_; }
  int stride() const { return stride_; }
  Param<T> weight;

 private:
  int cin_ = 0, cout_ = 0, stride_ = 2;
};

// stem conv -> BN -> ReLU6
template <typename T>
class StemBlock {
 public:
  struct Cache {
    Act<T> x;
    typename BatchNormRelu6<T>::Cache bn;
  };
  StemBlock() = default;
  StemBlock(const std::string& name, int cin, int cout, const InitContext& ctx);

  Act<T> forward(const Act<T>& x, bool train, Cache* cache) const;
  void backward(const Tensor<T>& dy, const Cache& cache);
  void collect(ParamList<T>& out);
  void trace(int& h, int& w, CostTrace& sink) const;
  int out_channels() const { return conv_.out_channels(); }

 private:
  std::string name_;
  StemConv<T> conv_;
  BatchNormRelu6<T> bn_;
};

// 1x1 -> BN -> ReLU6
template <typename T>
class PointwiseBnRelu6 {
 public:
  struct Cache {
    Act<T> x;
    typename BatchNormRelu6<T>::Cache bn;
  };
  PointwiseBnRelu6() = default;
  PointwiseBnRelu6(const std::string& name, int cin, int cout, const InitContext& ctx);

  Act<T> forward(const Act<T>& x, bool train, Cache* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache);
  void collect(ParamList<T>& out);
  void trace(int h, int w, CostTrace& sink) const;

  int in_channels() const { return pw_.in_channels(); }
  int out_channels() const { return pw_.out_channels(); }

 private:
  std::string name_;
  PointwiseConv<T> pw_;
  BatchNormRelu6<T> bn_;
};

// depthwise 3x3 -> BN -> ReLU6 -> 1x1 -> BN -> ReLU6
template <typename T>
class DSConvUnit {
 public:
  struct Cache {
    Act<T> x;
    typename BatchNormRelu6<T>::Cache bn1, bn2;
  };
  DSConvUnit() = default;
  DSConvUnit(const std::string& name, int cin, int cout, int stride, const InitContext& ctx);

  Act<T> forward(const Act<T>& x, bool train, Cache* cache) const;
  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache);
  void collect(ParamList<T>& out);
  // Updates h and w to the output extent.
  void trace(int& h, int& w, CostTrace& sink) const;

  int in_channels() const { return dw_.channels(); }
  int out_channels() const { return pw_.out_channels(); }
  int stride() const { return dw_.stride(); }

 private:
  std::string name_;
  DepthwiseConv3x3<T> dw_;
  BatchNormRelu6<T> bn1_;
  PointwiseConv<T> pw_;
  BatchNormRelu6<T> bn2_;
};

// concat(x, skips...) -> 1x1 bottleneck (BN, ReLU6) -> DSConvUnit.
template <typename T>
class DenseUnit {
 public:
  struct Cache {
    std::vector<int> part_channels;
    Act<T> concat;
    typename PointwiseBnRelu6<T>::Cache bottleneck;
    typename DSConvUnit<T>::Cache unit;
  };
  DenseUnit() = default;
  // part_channels lists the channels of x followed by each skip.
  DenseUnit(const std::string& name, const std::vector<int>& part_channels, double ratio,
            int cout, int stride, const InitContext& ctx);

  Act<T> forward(const Act<T>& x, const std::vector<Act<T>>& skips, bool train,
                 Cache* cache) const;
  // Returns gradients for x followed by each skip.
  std::vector<Tensor<T>> backward(const Tensor<T>& dy, const Cache& cache);
  void collect(ParamList<T>& out);
  void trace(int& h, int& w, CostTrace& sink) const;

  int concat_channels() const { return bottleneck_.in_channels(); }
  int bottleneck_channels() const { return bottleneck_.out_channels(); }
  int out_channels() const { return unit_.out_channels(); }

 private:
  std::vector<int> parts_;
  PointwiseBnRelu6<T> bottleneck_;
  DSConvUnit<T> unit_;
};

// Tensor helpers with gradients.
template <typename T>
Act<T> concat_channels(const std::vector<Act<T>>& parts);
template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& whole, const std::vector<int>& channels);
template <typename T>
Act<T> upsample_nearest(const Act<T>& x, int out_h, int out_w);
template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& dy, int in_h, int in_w);
template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src);

int bottleneck_width(double ratio, int concat_channels);

}  // namespace mdn

#endif  // MDN_LAYERS_HPP_
