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
#ifndef MDN_MODEL_HPP_
#define MDN_MODEL_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdn/backbone.hpp"
#include "mdn/config.hpp"
#include "mdn/heads.hpp"
#include "mdn/necks.hpp"

namespace mdn {

enum class Section { kBackbone, kNeck, kHead };

// Backbone, neck and heads built from one config.
template <typename T>
class Detector {
 public:
  struct Cache {
    typename Backbone<T>::Cache backbone;
    typename Neck<T>::Cache neck;
    typename HeadSet<T>::Cache heads;
  };
  using Output = typename HeadSet<T>::Output;

  // Weights are drawn from a generator seeded with config.seed.
  explicit Detector(const ModelConfig& config);

  Output forward(const Act<T>& images, bool train, Cache* cache) const;
  void backward(const Tensor<T>& dcls, const Tensor<T>& dbox, const Cache& cache);

  // Every parameter and buffer exactly once, in a fixed order.
  ParamList<T> params();
  ParamList<T> section_params(Section section);
  void zero_grad();

  // Per-layer multiply-adds at a square input extent.
  CostTrace trace(Section section, int input_size) const;

  const ModelConfig& config() const { return config_; }
  Backbone<T>& backbone() { return backbone_; }
  const Backbone<T>& backbone() const { return backbone_; }
  Neck<T>& neck() { return neck_; }
  const Neck<T>& neck() const { return neck_; }
  HeadSet<T>& heads() { return heads_; }
  const HeadSet<T>& heads() const { return heads_; }

 private:
  ModelConfig config_;
  std::mt19937_64 init_rng_;
  Backbone<T> backbone_;
  Neck<T> neck_;
  HeadSet<T> heads_;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
  ModelConfig config;
  std::vector<std::string> categories;  // dense class id -> name
  std::int64_t iteration = 0;
  std::vector<std::string> tensor_names;  // storage order
};

// Binary layout: "MDNCKPT1", u64 header length, JSON header, raw tensor data
// (little-endian, dtype recorded in the header). Written to a temporary file
// and renamed into place.
template <typename T>
void save_checkpoint(const std::string& path, Detector<T>& model,
                     const std::vector<std::string>& categories, std::int64_t iteration);

CheckpointMeta read_checkpoint_meta(const std::string& path);

// Builds a model from the stored config and loads every tensor, failing on
// any name or shape disagreement.
template <typename T>
Detector<T> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

// Loads tensors into an existing model whose config must match the stored one.
template <typename T>
void load_checkpoint_into(const std::string& path, Detector<T>& model);

}  // namespace mdn

#endif  // MDN_MODEL_HPP_
