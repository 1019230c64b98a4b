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
#include "mdn/kernels/parallel.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include <Eigen/Core>

#include "kernels/instantiate.hpp"

namespace mdn::kernels::parallel {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// Fixed partition count for reductions; keeps summation order independent
// of the number of threads.
constexpr std::size_t kChunks = 64;

struct Chunk {
  std::size_t begin, end;
};

inline Chunk chunk_range(std::size_t total, std::size_t index, std::size_t count) {
  return {total * index / count, total * (index + 1) / count};
}

inline std::size_t chunk_count(std::size_t total) { return std::max<std::size_t>(1, std::min(total, kChunks)); }

}  // namespace

namespace {

// Output columns ox whose input column ox * stride - 1 + kx lies in [0, w).
inline void valid_columns(int w, int ow, int stride, int kx, int& lo, int& hi) {
  lo = kx >= 1 ? 0 : 1;
  hi = w - kx < 0 ? 0 : std::min(ow, (w - kx) / stride + 1);
  if (hi < lo) hi = lo;
}

}  // namespace

template <typename T>
void depthwise3x3_forward(const T* x, Dims in, const T* weight, int stride, T* y) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  const int C = in.c;
  int lo[3], hi[3];
  for (int kx = 0; kx < 3; ++kx) valid_columns(in.w, ow, stride, kx, lo[kx], hi[kx]);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy) {
      T* yrow = y + (static_cast<std::size_t>(n) * oh + oy) * ow * C;
      std::fill(yrow, yrow + static_cast<std::size_t>(ow) * C, T(0));
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = oy * stride - 1 + ky;
        if (iy < 0 || iy >= in.h) continue;
        const T* xrow = x + (static_cast<std::size_t>(n) * in.h + iy) * in.w * C;
        for (int kx = 0; kx < 3; ++kx) {
          const T* k = weight + (ky * 3 + kx) * C;
          for (int ox = lo[kx]; ox < hi[kx]; ++ox) {
            const T* src = xrow + static_cast<std::size_t>(ox * stride - 1 + kx) * C;
            T* out = yrow + static_cast<std::size_t>(ox) * C;
#pragma omp simd
            for (int c = 0; c < C; ++c) out[c] += src[c] * k[c];
          }
        }
      }
    }
}

template <typename T>
void depthwise3x3_backward_input(const T* dy, Dims in, const T* weight, int stride, T* dx) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  const int C = in.c;
  int lo[3], hi[3];
  for (int kx = 0; kx < 3; ++kx) valid_columns(in.w, ow, stride, kx, lo[kx], hi[kx]);
  // Gather per input row: row iy only receives from output rows oy with
  // oy * stride - 1 + ky == iy, so rows can be processed independently.
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < in.n; ++n)
    for (int iy = 0; iy < in.h; ++iy) {
      T* xrow = dx + (static_cast<std::size_t>(n) * in.h + iy) * in.w * C;
      std::fill(xrow, xrow + static_cast<std::size_t>(in.w) * C, T(0));
      for (int ky = 0; ky < 3; ++ky) {
        const int t = iy + 1 - ky;
        if (t < 0 || t % stride) continue;
        const int oy = t / stride;
        if (oy >= oh) continue;
        const T* grow = dy + (static_cast<std::size_t>(n) * oh + oy) * ow * C;
        for (int kx = 0; kx < 3; ++kx) {
          const T* k = weight + (ky * 3 + kx) * C;
          for (int ox = lo[kx]; ox < hi[kx]; ++ox) {
            const T* g = grow + static_cast<std::size_t>(ox) * C;
            T* out = xrow + static_cast<std::size_t>(ox * stride - 1 + kx) * C;
#pragma omp simd
            for (int c = 0; c < C; ++c) out[c] += g[c] * k[c];
          }
        }
      }
    }
}

template <typename T>
void depthwise3x3_backward_weight(const T* x, Dims in, const T* dy, int stride, T* dweight) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  const int C = in.c;
  int lo[3], hi[3];
  for (int kx = 0; kx < 3; ++kx) valid_columns(in.w, ow, stride, kx, lo[kx], hi[kx]);
  const std::size_t rows = static_cast<std::size_t>(in.n) * oh;
  const std::size_t chunks = chunk_count(rows);
  std::vector<T> partial(chunks * 9 * C, T(0));
#pragma omp parallel for schedule(static)
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    T* acc = partial.data() + ci * 9 * C;
    const Chunk r = chunk_range(rows, ci, chunks);
    for (std::size_t row = r.begin; row < r.end; ++row) {
      const int n = static_cast<int>(row / oh), oy = static_cast<int>(row % oh);
      const T* grow = dy + row * ow * C;
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = oy * stride - 1 + ky;
        if (iy < 0 || iy >= in.h) continue;
        const T* xrow = x + (static_cast<std::size_t>(n) * in.h + iy) * in.w * C;
        for (int kx = 0; kx < 3; ++kx) {
          T* a = acc + (ky * 3 + kx) * C;
          for (int ox = lo[kx]; ox < hi[kx]; ++ox) {
            const T* g = grow + static_cast<std::size_t>(ox) * C;
            const T* src = xrow + static_cast<std::size_t>(ox * stride - 1 + kx) * C;
#pragma omp simd
            for (int c = 0; c < C; ++c) a[c] += g[c] * src[c];
          }
        }
      }
    }
  }
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    const T* acc = partial.data() + ci * 9 * C;
    for (int i = 0; i < 9 * C; ++i) dweight[i] += acc[i];
  }
}

template <typename T>
void pointwise_forward(const T* x, std::size_t rows, int cin, const T* w, const T* bias,
                       int cout, T* y) {
  Eigen::Map<const RowMat<T>> X(x, rows, cin);
  Eigen::Map<const RowMat<T>> W(w, cin, cout);
  Eigen::Map<RowMat<T>> Y(y, rows, cout);
  Y.noalias() = X * W;
  if (bias) {
    Eigen::Map<const RowVec<T>> b(bias, cout);
    Y.rowwise() += b;
  }
}

template <typename T>
void pointwise_backward(const T* x, const T* dy, std::size_t rows, int cin, const T* w,
                        int cout, T* dx, T* dw, T* dbias) {
  Eigen::Map<const RowMat<T>> X(x, rows, cin);
  Eigen::Map<const RowMat<T>> DY(dy, rows, cout);
  Eigen::Map<const RowMat<T>> W(w, cin, cout);
  if (dx) {
    Eigen::Map<RowMat<T>> DX(dx, rows, cin);
    DX.noalias() = DY * W.transpose();
  }
  Eigen::Map<RowMat<T>> DW(dw, cin, cout);
  DW.noalias() += X.transpose() * DY;
  if (dbias) {
    const std::size_t chunks = chunk_count(rows);
    std::vector<T> partial(chunks * cout, T(0));
#pragma omp parallel for schedule(static)
    for (std::size_t ci = 0; ci < chunks; ++ci) {
      const Chunk r = chunk_range(rows, ci, chunks);
      T* acc = partial.data() + ci * cout;
      for (std::size_t row = r.begin; row < r.end; ++row) {
        const T* g = dy + row * cout;
#pragma omp simd
        for (int o = 0; o < cout; ++o) acc[o] += g[o];
      }
    }
    for (std::size_t ci = 0; ci < chunks; ++ci)
      for (int o = 0; o < cout; ++o) dbias[o] += partial[ci * cout + o];
  }
}

namespace {

template <typename T>
std::vector<T> im2col3x3(const T* x, Dims in, int stride) {
  const int oh = conv_out(in.h, stride), ow = conv_out(in.w, stride);
  const int K = 9 * in.c;
  std::vector<T> col(static_cast<std::size_t>(in.n) * oh * ow * K, T(0));
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        T* dst = col.data() + ((static_cast<std::size_t>(n) * oh + oy) * ow + ox) * K;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * stride - 1 + ky;
          if (iy < 0 || iy >= in.h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox * stride - 1 + kx;
            if (ix < 0 || ix >= in.w) continue;
            const T* src = x + ((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c;
            std::memcpy(dst + (ky * 3 + kx) * in.c, src, sizeof(T) * in.c);
          }
        }
      }
  return col;
}

}  // namespace

template <typename T>
void conv3x3_forward(const T* x, Dims in, const T* w, int cout, int stride, T* y) {
  const std::size_t rows =
      static_cast<std::size_t>(in.n) * conv_out(in.h, stride) * conv_out(in.w, stride);
  const auto col = im2col3x3(x, in, stride);
  pointwise_forward<T>(col.data(), rows, 9 * in.c, w, nullptr, cout, y);
}

template <typename T>
void conv3x3_backward_weight(const T* x, Dims in, const T* dy, int cout, int stride, T* dw) {
  const std::size_t rows =
      static_cast<std::size_t>(in.n) * conv_out(in.h, stride) * conv_out(in.w, stride);
  const auto col = im2col3x3(x, in, stride);
  Eigen::Map<const RowMat<T>> X(col.data(), rows, 9 * in.c);
  Eigen::Map<const RowMat<T>> DY(dy, rows, cout);
  Eigen::Map<RowMat<T>> DW(dw, 9 * in.c, cout);
  DW.noalias() += X.transpose() * DY;
}

template <typename T>
void batch_stats(const T* x, std::size_t rows, int c, T* mean, T* var) {
  const std::size_t chunks = chunk_count(rows);
  std::vector<double> partial(chunks * c, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    const Chunk r = chunk_range(rows, ci, chunks);
    double* acc = partial.data() + ci * c;
    for (std::size_t row = r.begin; row < r.end; ++row) {
      const T* src = x + row * c;
#pragma omp simd
      for (int ch = 0; ch < c; ++ch) acc[ch] += src[ch];
    }
  }
  std::vector<double> m(c, 0.0);
  for (std::size_t ci = 0; ci < chunks; ++ci)
    for (int ch = 0; ch < c; ++ch) m[ch] += partial[ci * c + ch];
  for (int ch = 0; ch < c; ++ch) m[ch] = rows ? m[ch] / rows : 0.0;

  std::fill(partial.begin(), partial.end(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    const Chunk r = chunk_range(rows, ci, chunks);
    double* acc = partial.data() + ci * c;
    for (std::size_t row = r.begin; row < r.end; ++row) {
      const T* src = x + row * c;
#pragma omp simd
      for (int ch = 0; ch < c; ++ch) {
        const double d = src[ch] - m[ch];
        acc[ch] += d * d;
      }
    }
  }
  for (int ch = 0; ch < c; ++ch) {
    double q = 0.0;
    for (std::size_t ci = 0; ci < chunks; ++ci) q += partial[ci * c + ch];
    mean[ch] = static_cast<T>(m[ch]);
    var[ch] = static_cast<T>(rows ? q / rows : 0.0);
  }
}

template <typename T>
void bn_relu6_forward(const T* x, std::size_t rows, int c, const T* mean, const T* invstd,
                      const T* gamma, const T* beta, T* y) {
  std::vector<T> scale(c), shift(c);
  for (int ch = 0; ch < c; ++ch) {
    scale[ch] = gamma[ch] * invstd[ch];
    shift[ch] = beta[ch] - mean[ch] * scale[ch];
  }
  const T* s = scale.data();
  const T* b = shift.data();
  const T cap = T(kRelu6Cap);
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < rows; ++row) {
    const T* src = x + row * c;
    T* dst = y + row * c;
#pragma omp simd
    for (int ch = 0; ch < c; ++ch) {
      const T z = src[ch] * s[ch] + b[ch];
      dst[ch] = z < T(0) ? T(0) : (z > cap ? cap : z);
    }
  }
}

template <typename T>
void bn_relu6_backward(const T* x, const T* y, const T* dy, std::size_t rows, int c,
                       const T* mean, const T* invstd, const T* gamma, bool batch_mode, T* dx,
                       T* dgamma, T* dbeta) {
  const T cap = T(kRelu6Cap);
  const std::size_t chunks = chunk_count(rows);
  // Rows are summed in T over short blocks, blocks in double.
  constexpr std::size_t kBlock = 256;
  std::vector<double> part_dz(chunks * c, 0.0), part_dzx(chunks * c, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    const Chunk r = chunk_range(rows, ci, chunks);
    std::vector<T> blk(2 * static_cast<std::size_t>(c));
    T* __restrict a = blk.data();
    T* __restrict b = blk.data() + c;
    double* sa = part_dz.data() + ci * c;
    double* sb = part_dzx.data() + ci * c;
    for (std::size_t b0 = r.begin; b0 < r.end; b0 += kBlock) {
      std::fill(blk.begin(), blk.end(), T(0));
      const std::size_t b1 = std::min(r.end, b0 + kBlock);
      for (std::size_t row = b0; row < b1; ++row) {
        const T* xs = x + row * c;
        const T* ys = y + row * c;
        const T* gs = dy + row * c;
#pragma omp simd
        for (int ch = 0; ch < c; ++ch) {
          const T dz = (ys[ch] > T(0) && ys[ch] < cap) ? gs[ch] : T(0);
          a[ch] += dz;
          b[ch] += dz * ((xs[ch] - mean[ch]) * invstd[ch]);
        }
      }
      for (int ch = 0; ch < c; ++ch) {
        sa[ch] += a[ch];
        sb[ch] += b[ch];
      }
    }
  }
  std::vector<T> scale(c), k1(c), k2(c);
  for (int ch = 0; ch < c; ++ch) {
    double sdz = 0.0, sdzx = 0.0;
    for (std::size_t ci = 0; ci < chunks; ++ci) {
      sdz += part_dz[ci * c + ch];
      sdzx += part_dzx[ci * c + ch];
    }
    dgamma[ch] += static_cast<T>(sdzx);
    dbeta[ch] += static_cast<T>(sdz);
    scale[ch] = gamma[ch] * invstd[ch];
    k1[ch] = batch_mode && rows ? static_cast<T>(sdz / rows) : T(0);
    k2[ch] = batch_mode && rows ? static_cast<T>(sdzx / rows) : T(0);
  }
  const T* __restrict sc = scale.data();
  const T* __restrict m1 = k1.data();
  const T* __restrict m2 = k2.data();
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < rows; ++row) {
    const T* xs = x + row * c;
    const T* ys = y + row * c;
    const T* gs = dy + row * c;
    T* out = dx + row * c;
#pragma omp simd
    for (int ch = 0; ch < c; ++ch) {
      const T dz = (ys[ch] > T(0) && ys[ch] < cap) ? gs[ch] : T(0);
      const T xhat = (xs[ch] - mean[ch]) * invstd[ch];
      out[ch] = sc[ch] * (dz - m1[ch] - xhat * m2[ch]);
    }
  }
}

template <typename T>
void upsample_nearest_forward(const T* x, Dims in, int out_h, int out_w, T* y) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < out_h; ++oy) {
      const int iy = static_cast<int>(static_cast<long>(oy) * in.h / out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const int ix = static_cast<int>(static_cast<long>(ox) * in.w / out_w);
        std::memcpy(y + ((static_cast<std::size_t>(n) * out_h + oy) * out_w + ox) * in.c,
                    x + ((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * in.c,
                    sizeof(T) * in.c);
      }
    }
}

template <typename T>
void upsample_nearest_backward(const T* dy, Dims in, int out_h, int out_w, T* dx) {
  // Gather form: each input pixel sums the output pixels that copied it.
  std::vector<int> y_lo(in.h + 1, out_h), x_lo(in.w + 1, out_w);
  for (int oy = out_h - 1; oy >= 0; --oy) y_lo[static_cast<long>(oy) * in.h / out_h] = oy;
  for (int ox = out_w - 1; ox >= 0; --ox) x_lo[static_cast<long>(ox) * in.w / out_w] = ox;
  // Inputs never sampled keep the next sampled row's start so the span is empty.
  for (int i = in.h - 1; i >= 0; --i) y_lo[i] = std::min(y_lo[i], y_lo[i + 1]);
  for (int i = in.w - 1; i >= 0; --i) x_lo[i] = std::min(x_lo[i], x_lo[i + 1]);
  const int C = in.c;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < in.n; ++n)
    for (int iy = 0; iy < in.h; ++iy)
      for (int ix = 0; ix < in.w; ++ix) {
        T* out = dx + ((static_cast<std::size_t>(n) * in.h + iy) * in.w + ix) * C;
        std::fill(out, out + C, T(0));
        for (int oy = y_lo[iy]; oy < y_lo[iy + 1]; ++oy)
          for (int ox = x_lo[ix]; ox < x_lo[ix + 1]; ++ox) {
            const T* g = dy + ((static_cast<std::size_t>(n) * out_h + oy) * out_w + ox) * C;
#pragma omp simd
            for (int c = 0; c < C; ++c) out[c] += g[c];
          }
      }
}

template <typename T>
void concat_channels(const T* a, int ca, const T* b, int cb, std::size_t pixels, T* y) {
  const int c = ca + cb;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < pixels; ++p) {
    std::memcpy(y + p * c, a + p * ca, sizeof(T) * ca);
    std::memcpy(y + p * c + ca, b + p * cb, sizeof(T) * cb);
  }
}

template <typename T>
void split_channels(const T* y, std::size_t pixels, int ca, int cb, T* da, T* db) {
  const int c = ca + cb;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < pixels; ++p) {
    if (da) std::memcpy(da + p * ca, y + p * c, sizeof(T) * ca);
    if (db) std::memcpy(db + p * cb, y + p * c + ca, sizeof(T) * cb);
  }
}

MDN_INSTANTIATE(float)
MDN_INSTANTIATE(double)

}  // namespace mdn::kernels::parallel
