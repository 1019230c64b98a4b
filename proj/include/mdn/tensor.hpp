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
#ifndef MDN_TENSOR_HPP_
#define MDN_TENSOR_HPP_

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdn {

// Dense 4-D tensor in NHWC order.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int h, int w, int c) : n_(n), h_(h), w_(w), c_(c) {
    if (n < 0 || h < 0 || w < 0 || c < 0) throw std::invalid_argument("negative tensor dim");
    data_.assign(static_cast<std::size_t>(n) * h * w * c, T(0));
  }

  int n() const { return n_; }
  int h() const { return h_; }
  int w() const { return w_; }
  int c() const { return c_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixels() const { return static_cast<std::size_t>(n_) * h_ * w_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  std::size_t offset(int n, int y, int x, int ch) const {
    return ((static_cast<std::size_t>(n) * h_ + y) * w_ + x) * c_ + ch;
  }
  T& at(int n, int y, int x, int ch) { return data_[offset(n, y, x, ch)]; }
  const T& at(int n, int y, int x, int ch) const { return data_[offset(n, y, x, ch)]; }

  bool same_shape(const Tensor& o) const {
    return n_ == o.n_ && h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
  }
  std::string shape_string() const {
    return std::to_string(n_) + "x" + std::to_string(h_) + "x" + std::to_string(w_) + "x" +
           std::to_string(c_);
  }

  void fill(T v) { data_.assign(data_.size(), v); }

 private:
  int n_ = 0, h_ = 0, w_ = 0, c_ = 0;
  std::vector<T> data_;
};

template <typename T>
using Act = std::shared_ptr<const Tensor<T>>;

template <typename T>
std::shared_ptr<Tensor<T>> make_tensor(int n, int h, int w, int c) {
  return std::make_shared<Tensor<T>>(n, h, w, c);
}

// Trainable weights and non-trainable buffers share one record so that
// checkpoints and the optimizer walk a single list.
template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;
  std::vector<T> velocity;
  bool trainable = true;
  bool decay = false;

  Param() = default;
  Param(std::string n, std::vector<int> s, bool is_trainable, bool use_decay)
      : name(std::move(n)), shape(std::move(s)), trainable(is_trainable), decay(use_decay) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    value.assign(count, T(0));
    if (trainable) {
      grad.assign(count, T(0));
      velocity.assign(count, T(0));
    }
  }
  std::size_t size() const { return value.size(); }
  void zero_grad() { grad.assign(grad.size(), T(0)); }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

}  // namespace mdn

#endif  // MDN_TENSOR_HPP_
