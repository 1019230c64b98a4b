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
#ifndef MDN_KERNELS_COMMON_HPP_
#define MDN_KERNELS_COMMON_HPP_

#include <cstddef>

namespace mdn::kernels {

struct Dims {
  int n = 0, h = 0, w = 0, c = 0;
  std::size_t pixels() const { return static_cast<std::size_t>(n) * h * w; }
};

// Output extent of a 3x3 window with padding 1.
inline int conv_out(int in, int stride) { return (in - 1) / stride + 1; }

inline constexpr double kRelu6Cap = 6.0;

enum class Backend { kParallel, kReference };

// Process-wide kernel selection used by the layers. Defaults to parallel.
void set_backend(Backend b);
Backend backend();

}  // namespace mdn::kernels

#endif  // MDN_KERNELS_COMMON_HPP_
