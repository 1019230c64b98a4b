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
#include "mdn/analysis.hpp"

#include <cstdio>
#include <random>
#include <sstream>

namespace mdn {

namespace {

template <typename T>
std::int64_t trainable_count(const ParamList<T>& params) {
  std::int64_t n = 0;
  for (const auto* p : params)
    if (p->trainable) n += static_cast<std::int64_t>(p->size());
  return n;
}

std::int64_t sum_madds(const CostTrace& trace) {
  std::int64_t n = 0;
  for (const auto& e : trace) n += e.madds;
  return n;
}

std::string with_commas(std::int64_t v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(i, ",");
  return s;
}

}  // namespace

template <typename T>
std::int64_t count_params(Detector<T>& model) {
  return trainable_count(model.params());
}

template <typename T>
std::int64_t count_madds(const Detector<T>& model, int input_size) {
  return sum_madds(model.trace(Section::kBackbone, input_size)) +
         sum_madds(model.trace(Section::kNeck, input_size)) +
         sum_madds(model.trace(Section::kHead, input_size));
}

template <typename T>
CostReport analyze(Detector<T>& model, int input_size) {
  CostReport r;
  r.input_size = input_size;
  const std::pair<const char*, Section> sections[] = {
      {"backbone", Section::kBackbone}, {"neck", Section::kNeck}, {"head", Section::kHead}};
  for (const auto& [name, section] : sections) {
    const CostTrace trace = model.trace(section, input_size);
    CostRow row{name, trainable_count(model.section_params(section)), sum_madds(trace)};
    r.rows.push_back(row);
    r.layers.insert(r.layers.end(), trace.begin(), trace.end());
    r.total_madds += row.madds;
  }
  r.total_params = count_params(model);
  r.head_modules = model.heads().module_count();
  for (int l = 0; l < kNumLevels; ++l) r.head_assignment.push_back(model.heads().module_for_level(l));
  return r;
}

double separable_cost_ratio(int channels) {
  std::mt19937_64 rng(0);
  InitContext ctx;
  ctx.rng = &rng;
  const int h = 8, w = 8;
  StemConv<float> standard("standard", channels, channels, 1, ctx);
  DepthwiseConv3x3<float> dw("dw", channels, 1, ctx);
  PointwiseConv<float> pw("pw", channels, channels, false, ctx);
  return static_cast<double>(standard.madds(h, w)) /
         static_cast<double>(dw.madds(h, w) + pw.madds(h, w));
}

nlohmann::json to_json(const CostReport& report) {
  nlohmann::json j;
  j["convention"] = kMaddConvention;
  j["input_size"] = report.input_size;
  j["total_params"] = report.total_params;
  j["total_madds"] = report.total_madds;
  j["head_modules"] = report.head_modules;
  j["head_assignment"] = report.head_assignment;
  j["modules"] = nlohmann::json::array();
  for (const auto& row : report.rows)
    j["modules"].push_back({{"module", row.module}, {"params", row.params}, {"madds", row.madds}});
  j["layers"] = nlohmann::json::array();
  for (const auto& e : report.layers) j["layers"].push_back({{"name", e.name}, {"madds", e.madds}});
  return j;
}

std::string format_table(const CostReport& report) {
  std::ostringstream os;
  char line[160];
  os << "# cost report, input " << report.input_size << "x" << report.input_size << ", "
     << kMaddConvention << "\n";
  std::snprintf(line, sizeof(line), "%-10s %16s %18s\n", "Module", "Params", "MAdds");
  os << line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line), "%-10s %16s %18s\n", row.module.c_str(),
                  with_commas(row.params).c_str(), with_commas(row.madds).c_str());
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-10s %16s %18s\n", "total",
                with_commas(report.total_params).c_str(), with_commas(report.total_madds).c_str());
  os << line;
  std::snprintf(line, sizeof(line), "params %.3fM, madds %.3fB, head modules %d\n",
                report.total_params / 1e6, report.total_madds / 1e9, report.head_modules);
  os << line;
  return os.str();
}

template std::int64_t count_params<float>(Detector<float>&);
template std::int64_t count_params<double>(Detector<double>&);
template std::int64_t count_madds<float>(const Detector<float>&, int);
template std::int64_t count_madds<double>(const Detector<double>&, int);
template CostReport analyze<float>(Detector<float>&, int);
template CostReport analyze<double>(Detector<double>&, int);

}  // namespace mdn
