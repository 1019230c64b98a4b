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
#ifndef MDN_SRC_KERNELS_DISPATCH_HPP_
#define MDN_SRC_KERNELS_DISPATCH_HPP_

#include "mdn/kernels/common.hpp"
#include "mdn/kernels/parallel.hpp"
#include "mdn/kernels/reference.hpp"

// Calls the named kernel on the active backend.
#define MDN_KERNEL(fn, ...)                                               \
  (::mdn::kernels::backend() == ::mdn::kernels::Backend::kReference        \
       ? ::mdn::kernels::reference::fn(__VA_ARGS__)                        \
       : ::mdn::kernels::parallel::fn(__VA_ARGS__))

#endif  // MDN_SRC_KERNELS_DISPATCH_HPP_
