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
#include "mdn/kernels/reference.hpp"

#include "kernels/instantiate.hpp"

#include <algorithm>
#include <atomic>
#include <vector>

namespace mdn::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::kParallel};
}  // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

}  // namespace mdn::kernels

namespace mdn::kernels::reference {

template <typename T>
void depthwise3x3_forward(const T* x, Dims in, const T* weight, int stride, T* y) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int c = 0; c < in.c; ++c) {
          T acc = 0;
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = oy * stride - 1 + ky, ix = ox * stride - 1 + kx;
              if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
              acc += x[((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c + c] *
                     weight[(ky * 3 + kx) * in.c + c];
            }
          y[((static_cast<std::size_t>(n) * oh + oy) * ow + ox) * in.c + c] = acc;
        }
}

template <typename T>
void depthwise3x3_backward_input(const T* dy, Dims in, const T* weight, int stride, T* dx) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  std::fill(dx, dx + in.pixels() * in.c, T(0));
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int c = 0; c < in.c; ++c) {
          const T g = dy[((static_cast<std::size_t>(n) * oh + oy) * ow + ox) * in.c + c];
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = oy * stride - 1 + ky, ix = ox * stride - 1 + kx;
              if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
              dx[((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c + c] +=
                  g * weight[(ky * 3 + kx) * in.c + c];
            }
        }
}

template <typename T>
void depthwise3x3_backward_weight(const T* x, Dims in, const T* dy, int stride, T* dweight) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int c = 0; c < in.c; ++c) {
          const T g = dy[((static_cast<std::size_t>(n) * oh + oy) * ow + ox) * in.c + c];
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = oy * stride - 1 + ky, ix = ox * stride - 1 + kx;
              if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
              dweight[(ky * 3 + kx) * in.c + c] +=
                  g * x[((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c + c];
            }
        }
}

template <typename T>
void pointwise_forward(const T* x, std::size_t rows, int cin, const T* w, const T* bias,
                       int cout, T* y) {
  for (std::size_t r = 0; r < rows; ++r)
    for (int o = 0; o < cout; ++o) {
      T acc = bias ? bias[o] : T(0);
      for (int i = 0; i < cin; ++i) acc += x[r * cin + i] * w[static_cast<std::size_t>(i) * cout + o];
      y[r * cout + o] = acc;
    }
}

template <typename T>
void pointwise_backward(const T* x, const T* dy, std::size_t rows, int cin, const T* w,
                        int cout, T* dx, T* dw, T* dbias) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (int i = 0; i < cin; ++i) {
      T acc = 0;
      for (int o = 0; o < cout; ++o) {
        acc += dy[r * cout + o] * w[static_cast<std::size_t>(i) * cout + o];
        dw[static_cast<std::size_t>(i) * cout + o] += x[r * cin + i] * dy[r * cout + o];
      }
      if (dx) dx[r * cin + i] = acc;
    }
    if (dbias)
      for (int o = 0; o < cout; ++o) dbias[o] += dy[r * cout + o];
  }
}

template <typename T>
void conv3x3_forward(const T* x, Dims in, const T* w, int cout, int stride, T* y) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int o = 0; o < cout; ++o) {
          T acc = 0;
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = oy * stride - 1 + ky, ix = ox * stride - 1 + kx;
              if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
              for (int i = 0; i < in.c; ++i)
                acc += x[((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c + i] *
                       w[((ky * 3 + kx) * in.c + i) * cout + o];
            }
          y[((static_cast<std::size_t>(n) * oh + oy) * ow + ox) * cout + o] = acc;
        }
}

template <typename T>
void conv3x3_backward_weight(const T* x, Dims in, const T* dy, int cout, int stride, T* dw) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const int iy = oy * stride - 1 + ky, ix = ox * stride - 1 + kx;
            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
            for (int i = 0; i < in.c; ++i)
              for (int o = 0; o < cout; ++o)
                dw[((ky * 3 + kx) * in.c + i) * cout + o] +=
                    x[((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c + i] *
                    dy[((static_cast<std::size_t>(n) * oh + oy) * ow + ox) * cout + o];
          }
}

template <typename T>
void batch_stats(const T* x, std::size_t rows, int c, T* mean, T* var) {
  for (int ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += x[r * c + ch];
    const double m = rows ? s / rows : 0.0;
    double q = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = x[r * c + ch] - m;
      q += d * d;
    }
    mean[ch] = static_cast<T>(m);
    var[ch] = static_cast<T>(rows ? q / rows : 0.0);
  }
}

template <typename T>
void bn_relu6_forward(const T* x, std::size_t rows, int c, const T* mean, const T* invstd,
                      const T* gamma, const T* beta, T* y) {
  for (std::size_t r = 0; r < rows; ++r)
    for (int ch = 0; ch < c; ++ch) {
      const T z = gamma[ch] * (x[r * c + ch] - mean[ch]) * invstd[ch] + beta[ch];
      y[r * c + ch] = std::clamp(z, T(0), T(kRelu6Cap));
    }
}

template <typename T>
void bn_relu6_backward(const T* x, const T* y, const T* dy, std::size_t rows, int c,
                       const T* mean, const T* invstd, const T* gamma, bool batch_mode, T* dx,
                       T* dgamma, T* dbeta) {
  for (int ch = 0; ch < c; ++ch) {
    double sum_dz = 0.0, sum_dz_xhat = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const T out = y[r * c + ch];
      if (out <= T(0) || out >= T(kRelu6Cap)) continue;
      const double xhat = (x[r * c + ch] - mean[ch]) * invstd[ch];
      sum_dz += dy[r * c + ch];
      sum_dz_xhat += dy[r * c + ch] * xhat;
    }
    dgamma[ch] += static_cast<T>(sum_dz_xhat);
    dbeta[ch] += static_cast<T>(sum_dz);
    const double scale = static_cast<double>(gamma[ch]) * invstd[ch];
    const double mean_dz = rows ? sum_dz / rows : 0.0;
    const double mean_dz_xhat = rows ? sum_dz_xhat / rows : 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const T out = y[r * c + ch];
      const double dz = (out <= T(0) || out >= T(kRelu6Cap)) ? 0.0 : dy[r * c + ch];
      if (batch_mode) {
        const double xhat = (x[r * c + ch] - mean[ch]) * invstd[ch];
        dx[r * c + ch] = static_cast<T>(scale * (dz - mean_dz - xhat * mean_dz_xhat));
      } else {
        dx[r * c + ch] = static_cast<T>(scale * dz);
      }
    }
  }
}

template <typename T>
void upsample_nearest_forward(const T* x, Dims in, int out_h, int out_w, T* y) {
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < out_h; ++oy)
      for (int ox = 0; ox < out_w; ++ox) {
        const int iy = static_cast<int>(static_cast<long>(oy) * in.h / out_h);
        const int ix = static_cast<int>(static_cast<long>(ox) * in.w / out_w);
        for (int ch = 0; ch < in.c; ++ch)
          y[((static_cast<std::size_t>(n) * out_h + oy) * out_w + ox) * in.c + ch] =
              x[((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c + ch];
      }
}

template <typename T>
void upsample_nearest_backward(const T* dy, Dims in, int out_h, int out_w, T* dx) {
  std::fill(dx, dx + in.pixels() * in.c, T(0));
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < out_h; ++oy)
      for (int ox = 0; ox < out_w; ++ox) {
        const int iy = static_cast<int>(static_cast<long>(oy) * in.h / out_h);
        const int ix = static_cast<int>(static_cast<long>(ox) * in.w / out_w);
        for (int ch = 0; ch < in.c; ++ch)
          dx[((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c + ch] +=
              dy[((static_cast<std::size_t>(n) * out_h + oy) * out_w + ox) * in.c + ch];
      }
}

template <typename T>
void concat_channels(const T* a, int ca, const T* b, int cb, std::size_t pixels, T* y) {
  const int c = ca + cb;
  for (std::size_t p = 0; p < pixels; ++p) {
    for (int i = 0; i < ca; ++i) y[p * c + i] = a[p * ca + i];
    for (int i = 0; i < cb; ++i) y[p * c + ca + i] = b[p * cb + i];
  }
}

template <typename T>
void split_channels(const T* y, std::size_t pixels, int ca, int cb, T* da, T* db) {
  const int c = ca + cb;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (da)
      for (int i = 0; i < ca; ++i) da[p * ca + i] = y[p * c + i];
    if (db)
      for (int i = 0; i < cb; ++i) db[p * cb + i] = y[p * c + ca + i];
  }
}

MDN_INSTANTIATE(float)
MDN_INSTANTIATE(double)

}  // namespace mdn::kernels::reference
