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
#ifndef MDN_TRAINING_HPP_
#define MDN_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdn/anchors.hpp"
#include "mdn/augment.hpp"
#include "mdn/config.hpp"
#include "mdn/datasets.hpp"
#include "mdn/losses.hpp"
#include "mdn/model.hpp"

namespace mdn {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Piecewise-constant rate; boundaries are fractions of total_iterations.
// An optional linear warmup ramps the first rate.
double lr_at(std::int64_t iteration, const ModelConfig& config);
std::int64_t lr_boundary_iteration(std::size_t index, const ModelConfig& config);

int sample_training_scale(std::mt19937_64& rng, const ModelConfig& config);

struct Batch {
  Tensor<float> images;
  std::vector<std::vector<LabeledBox>> boxes;  // in input pixels
  std::vector<std::size_t> indices;            // dataset positions
  int input_size = 0;
};

// Loads, optionally augments, resizes and normalizes the given images. The
// augmentation stream of slot i is derived from (seed, i) alone.
Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& indices, int input_size,
                 const ModelConfig& config, bool augment_images, std::uint64_t seed);

// v = momentum * v + g (+ weight_decay * w for decayed weights); w -= lr * v.
template <typename T>
void sgd_update(const ParamList<T>& params, double lr, double momentum, double weight_decay);

// One optimization step against a model it does not own.
class Trainer {
 public:
  explicit Trainer(Detector<float>& model) : model_(model) {}

  // Throws TrainingError when the loss is not finite; parameters are left
  // untouched in that case.
  LossBreakdown step(const Batch& batch, double lr);
  LossBreakdown loss_only(const Batch& batch, bool train_mode) const;
  const AnchorSet& anchors(int input_size);

 private:
  Detector<float>& model_;
  std::map<int, AnchorSet> anchor_cache_;
};

struct LogRecord {
  std::int64_t iteration = 0;
  double lr = 0.0;
  double cls_loss = 0.0;
  double loc_loss = 0.0;
  double total = 0.0;
};
nlohmann::json to_json(const LogRecord& record);

struct TrainOptions {
  std::string out_dir;                  // checkpoints and loss log
  std::int64_t iterations = -1;         // -1: config.total_iterations
  std::function<void(const LogRecord&)> on_log;
};

struct TrainResult {
  std::string checkpoint;
  std::string log_path;
  std::int64_t iterations = 0;
  double last_loss = 0.0;
};

inline constexpr const char* kFinalCheckpoint = "model.mdn";
inline constexpr const char* kLossLog = "loss_log.ndjson";

// Full loop: epoch-wise seeded permutation, one scale per batch, periodic
// checkpoints "checkpoint-<iter>.mdn" and the final "model.mdn".
TrainResult train(const ModelConfig& config, const Dataset& dataset, const TrainOptions& options);

}  // namespace mdn

#endif  // MDN_TRAINING_HPP_
