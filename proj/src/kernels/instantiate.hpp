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
#ifndef MDN_SRC_KERNELS_INSTANTIATE_HPP_
#define MDN_SRC_KERNELS_INSTANTIATE_HPP_

// Explicit instantiations shared by every kernel backend. Expand inside the
// backend namespace.
#define MDN_INSTANTIATE(T)                                                                  \
  template void depthwise3x3_forward<T>(const T*, Dims, const T*, int, T*);                 \
  template void depthwise3x3_backward_input<T>(const T*, Dims, const T*, int, T*);          \
  template void depthwise3x3_backward_weight<T>(const T*, Dims, const T*, int, T*);         \
  template void pointwise_forward<T>(const T*, std::size_t, int, const T*, const T*, int,   \
                                     T*);                                                   \
  template void pointwise_backward<T>(const T*, const T*, std::size_t, int, const T*, int,  \
                                      T*, T*, T*);                                          \
  template void conv3x3_forward<T>(const T*, Dims, const T*, int, int, T*);                 \
  template void conv3x3_backward_weight<T>(const T*, Dims, const T*, int, int, T*);         \
  template void batch_stats<T>(const T*, std::size_t, int, T*, T*);                         \
  template void bn_relu6_forward<T>(const T*, std::size_t, int, const T*, const T*,         \
                                    const T*, const T*, T*);                                \
  template void bn_relu6_backward<T>(const T*, const T*, const T*, std::size_t, int,        \
                                     const T*, const T*, const T*, bool, T*, T*, T*);       \
  template void upsample_nearest_forward<T>(const T*, Dims, int, int, T*);                  \
  template void upsample_nearest_backward<T>(const T*, Dims, int, int, T*);                 \
  template void concat_channels<T>(const T*, int, const T*, int, std::size_t, T*);          \
  template void split_channels<T>(const T*, std::size_t, int, int, T*, T*);

#endif  // MDN_SRC_KERNELS_INSTANTIATE_HPP_
