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
#ifndef MDN_KERNELS_PARALLEL_HPP_
#define MDN_KERNELS_PARALLEL_HPP_

#include <cstddef>

#include "mdn/kernels/common.hpp"

// OpenMP kernels with the same contracts as mdn::kernels::reference.
// Reductions use a fixed chunking so results do not depend on thread count.
namespace mdn::kernels::parallel {

// 3x3 depthwise, padding 1. weight is [ky][kx][c].
template <typename T>
void depthwise3x3_forward(const T* x, Dims in, const T* weight, int stride, T* y);
// Overwrites dx.
template <typename T>
void depthwise3x3_backward_input(const T* dy, Dims in, const T* weight, int stride, T* dx);
// Accumulates into dweight.
template <typename T>
void depthwise3x3_backward_weight(const T* x, Dims in, const T* dy, int stride, T* dweight);

// y[rows x cout] = x[rows x cin] * w[cin x cout] (+ bias).
template <typename T>
void pointwise_forward(const T* x, std::size_t rows, int cin, const T* w, const T* bias,
                       int cout, T* y);
// dx is overwritten when non-null; dw and dbias accumulate.
template <typename T>
void pointwise_backward(const T* x, const T* dy, std::size_t rows, int cin, const T* w,
                        int cout, T* dx, T* dw, T* dbias);

// Dense 3x3, padding 1. w is [ky][kx][cin][cout].
template <typename T>
void conv3x3_forward(const T* x, Dims in, const T* w, int cout, int stride, T* y);
// Accumulates into dw.
template <typename T>
void conv3x3_backward_weight(const T* x, Dims in, const T* dy, int cout, int stride, T* dw);

// Per-channel mean and biased variance over rows.
template <typename T>
void batch_stats(const T* x, std::size_t rows, int c, T* mean, T* var);
template <typename T>
void bn_relu6_forward(const T* x, std::size_t rows, int c, const T* mean, const T* invstd,
                      const T* gamma, const T* beta, T* y);
// With batch_mode the statistics are treated as functions of x.
// dx is overwritten; dgamma and dbeta accumulate.
template <typename T>
void bn_relu6_backward(const T* x, const T* y, const T* dy, std::size_t rows, int c,
                       const T* mean, const T* invstd, const T* gamma, bool batch_mode, T* dx,
                       T* dgamma, T* dbeta);

template <typename T>
void upsample_nearest_forward(const T* x, Dims in, int out_h, int out_w, T* y);
// Overwrites dx.
template <typename T>
void upsample_nearest_backward(const T* dy, Dims in, int out_h, int out_w, T* dx);

template <typename T>
void concat_channels(const T* a, int ca, const T* b, int cb, std::size_t pixels, T* y);
template <typename T>
void split_channels(const T* y, std::size_t pixels, int ca, int cb, T* da, T* db);

}  // namespace mdn::kernels::parallel

#endif  // MDN_KERNELS_PARALLEL_HPP_
