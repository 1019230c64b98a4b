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
#ifndef MDN_ANALYSIS_HPP_
#define MDN_ANALYSIS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdn/model.hpp"

namespace mdn {

inline constexpr const char* kMaddConvention = "1 multiply-add = 1 FLOP unit";

struct CostRow {
  std::string module;
  std::int64_t params = 0;
  std::int64_t madds = 0;
};

struct CostReport {
  int input_size = 0;
  std::vector<CostRow> rows;  // backbone, neck, head
  std::int64_t total_params = 0;
  std::int64_t total_madds = 0;
  int head_modules = 0;
  std::vector<int> head_assignment;
  CostTrace layers;
};

// Trainable scalars, each storage counted once. BN running statistics are
// buffers and do not count.
template <typename T>
std::int64_t count_params(Detector<T>& model);
template <typename T>
std::int64_t count_madds(const Detector<T>& model, int input_size);
template <typename T>
CostReport analyze(Detector<T>& model, int input_size);

// Standard 3x3 conv cost over depthwise separable cost, measured on the
// layer cost functions with cin == cout.
double separable_cost_ratio(int channels);

nlohmann::json to_json(const CostReport& report);
std::string format_table(const CostReport& report);

}  // namespace mdn

#endif  // MDN_ANALYSIS_HPP_
