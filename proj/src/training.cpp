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
#include "mdn/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mdn/random.hpp"

namespace mdn {

namespace fs = std::filesystem;

std::int64_t lr_boundary_iteration(std::size_t index, const ModelConfig& config) {
  return std::llround(config.lr_boundaries.at(index) * static_cast<double>(config.total_iterations));
}

double lr_at(std::int64_t iteration, const ModelConfig& config) {
  std::size_t stage = 0;
  while (stage < config.lr_boundaries.size() && iteration >= lr_boundary_iteration(stage, config))
    ++stage;
  double lr = config.lr_values[stage];
  if (iteration < config.warmup_iterations)
    lr *= static_cast<double>(iteration + 1) / config.warmup_iterations;
  return lr;
}

int sample_training_scale(std::mt19937_64& rng, const ModelConfig& config) {
  const auto& sizes = config.multi_scale_sizes;
  if (sizes.empty()) throw ConfigError("multi_scale_sizes is empty");
  for (int s : sizes)
    if (s <= 0 || s % 32 != 0)
      throw ConfigError("multi_scale_sizes entry " + std::to_string(s) + " is not a positive multiple of 32");
  std::uniform_int_distribution<std::size_t> pick(0, sizes.size() - 1);
  return sizes[pick(rng)];
}

Batch make_batch(const Dataset& dataset, const std::vector<std::size_t>& indices, int input_size,
                 const ModelConfig& config, bool augment_images, std::uint64_t seed) {
  Batch b;
  const int n = static_cast<int>(indices.size());
  b.images = Tensor<float>(n, input_size, input_size, 3);
  b.boxes.resize(n);
  b.indices = indices;
  b.input_size = input_size;
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      const std::size_t idx = indices[i];
      Sample s = make_sample(dataset.image(idx), training_boxes(dataset.images[idx]));
      if (augment_images) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        s = augment(s, rng, config);
      }
      b.boxes[i] = write_input(s, input_size, b.images, i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DatasetError(e);
  return b;
}

template <typename T>
void sgd_update(const ParamList<T>& params, double lr, double momentum, double weight_decay) {
  for (Param<T>* p : params) {
    if (!p->trainable) continue;
    const T mu = static_cast<T>(momentum), rate = static_cast<T>(lr);
    const T wd = p->decay ? static_cast<T>(weight_decay) : T(0);
    T* w = p->value.data();
    T* v = p->velocity.data();
    const T* g = p->grad.data();
    const std::size_t n = p->size();
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = mu * v[i] + g[i] + wd * w[i];
      w[i] -= rate * v[i];
    }
  }
}

template void sgd_update<float>(const ParamList<float>&, double, double, double);
template void sgd_update<double>(const ParamList<double>&, double, double, double);

const AnchorSet& Trainer::anchors(int input_size) {
  auto it = anchor_cache_.find(input_size);
  if (it == anchor_cache_.end())
    it = anchor_cache_.emplace(input_size, generate_anchors(model_.config(), input_size)).first;
  return it->second;
}

namespace {

std::vector<MatchResult> match_batch(const AnchorSet& anchors, const Batch& batch,
                                     const ModelConfig& config) {
  const int n = static_cast<int>(batch.boxes.size());
  std::vector<MatchResult> out(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i)
    out[i] = match(anchors, batch.boxes[i], config.match_iou_threshold, config.num_classes - 1);
  return out;
}

std::string batch_listing(const Batch& batch) {
  std::ostringstream os;
  for (std::size_t i = 0; i < batch.indices.size(); ++i) os << (i ? ", " : "") << batch.indices[i];
  return os.str();
}

}  // namespace

LossBreakdown Trainer::step(const Batch& batch, double lr) {
  const ModelConfig& config = model_.config();
  const AnchorSet& anc = anchors(batch.input_size);
  const auto matches = match_batch(anc, batch, config);

  typename Detector<float>::Cache cache;
  auto input = std::make_shared<const Tensor<float>>(batch.images);
  const auto out = model_.forward(input, true, &cache);
  Tensor<float> dcls, dbox;
  const LossTargets targets{&anc, &matches, &batch.boxes};
  const LossBreakdown loss = detection_loss(out.cls, out.box, targets, config, &dcls, &dbox);
  if (!std::isfinite(loss.total))
    throw TrainingError("non-finite loss; batch images [" + batch_listing(batch) + "]");
  model_.zero_grad();
  model_.backward(dcls, dbox, cache);
  sgd_update(model_.params(), lr, config.momentum, config.weight_decay);
  return loss;
}

LossBreakdown Trainer::loss_only(const Batch& batch, bool train_mode) const {
  const ModelConfig& config = model_.config();
  const AnchorSet anc = generate_anchors(config, batch.input_size);
  const auto matches = match_batch(anc, batch, config);
  auto input = std::make_shared<const Tensor<float>>(batch.images);
  const auto out = model_.forward(input, train_mode, nullptr);
  const LossTargets targets{&anc, &matches, &batch.boxes};
  return detection_loss<float>(out.cls, out.box, targets, config, nullptr, nullptr);
}

nlohmann::json to_json(const LogRecord& r) {
  return {{"iteration", r.iteration},
          {"lr", r.lr},
          {"cls_loss", r.cls_loss},
          {"loc_loss", r.loc_loss},
          {"total", r.total}};
}

TrainResult train(const ModelConfig& config, const Dataset& dataset, const TrainOptions& options) {
  config.validate();
  if (dataset.size() == 0) throw TrainingError("training dataset is empty");
  if (dataset.num_categories() + 1 != config.num_classes)
    throw TrainingError("dataset has " + std::to_string(dataset.num_categories()) +
                        " categories but num_classes is " + std::to_string(config.num_classes) +
                        " (expected categories + 1)");
  if (options.out_dir.empty()) throw TrainingError("no output directory");
  fs::create_directories(options.out_dir);

  const std::int64_t total = options.iterations >= 0 ? options.iterations : config.total_iterations;
  Detector<float> model(config);
  Trainer trainer(model);

  TrainResult result;
  result.log_path = (fs::path(options.out_dir) / kLossLog).string();
  std::ofstream log(result.log_path, std::ios::trunc);
  if (!log) throw TrainingError("cannot write " + result.log_path);

  const std::size_t n = dataset.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;  // forces a shuffle on first use
  std::uint64_t epoch = 0;

  double cls_acc = 0.0, loc_acc = 0.0, tot_acc = 0.0;
  int acc_count = 0;
  for (std::int64_t it = 0; it < total; ++it) {
    std::vector<std::size_t> idx;
    while (idx.size() < bs) {
      if (cursor == n) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 perm_rng(derive_seed(config.seed, epoch++, 0x5045524Dull));
        std::shuffle(order.begin(), order.end(), perm_rng);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    std::mt19937_64 scale_rng(derive_seed(config.seed, static_cast<std::uint64_t>(it), 0x5343414Cull));
    const int size = sample_training_scale(scale_rng, config);
    const Batch batch = make_batch(dataset, idx, size, config, true,
                                   derive_seed(config.seed, static_cast<std::uint64_t>(it), 0x41554755ull));
    const double lr = lr_at(it, config);
    LossBreakdown loss;
    try {
      loss = trainer.step(batch, lr);
    } catch (const TrainingError& e) {
      throw TrainingError("iteration " + std::to_string(it) + ": " + e.what());
    }
    const double div = std::max(loss.n_pos, 1);
    cls_acc += loss.classification / div;
    loc_acc += loss.localization / div;
    tot_acc += loss.total;
    ++acc_count;
    result.last_loss = loss.total;

    const bool last = it + 1 == total;
    if ((it + 1) % std::max(config.log_every, 1) == 0 || last) {
      const LogRecord rec{it + 1, lr, cls_acc / acc_count, loc_acc / acc_count, tot_acc / acc_count};
      log << to_json(rec).dump() << "\n";
      log.flush();
      if (options.on_log) options.on_log(rec);
      cls_acc = loc_acc = tot_acc = 0.0;
      acc_count = 0;
    }
    if (config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0 && !last)
      save_checkpoint((fs::path(options.out_dir) / ("checkpoint-" + std::to_string(it + 1) + ".mdn")).string(),
                      model, dataset.categories, it + 1);
  }
  result.iterations = total;
  result.checkpoint = (fs::path(options.out_dir) / kFinalCheckpoint).string();
  save_checkpoint(result.checkpoint, model, dataset.categories, total);
  return result;
}

}  // namespace mdn
