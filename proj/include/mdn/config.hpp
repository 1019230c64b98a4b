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
#ifndef MDN_CONFIG_HPP_
#define MDN_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mdn {

// Raised for any invalid configuration, at load or build time.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BackboneVariant { kMobileDenseNet, kMobileNetV1 };
enum class NeckVariant { kSsdLite, kSsdcLite, kFpnLite, kFcpnLite };
enum class HeadShareMode { kFullShare, kShareExcept1, kHalfShare, kNonShare };
// kTrunk: one shared separable trunk feeding 1x1 class/box projections.
// kSsdLite: the original SSDLite predictor, a separable conv per branch.
enum class HeadStyle { kTrunk, kSsdLite };
enum class ClsLossKind { kCeHardNegative, kFocal };
enum class LocLossKind { kDiou, kSmoothL1 };
enum class MiningScope { kPerImage, kPerBatch };

std::string_view to_string(BackboneVariant v);
std::string_view to_string(NeckVariant v);
std::string_view to_string(HeadShareMode v);
std::string_view to_string(HeadStyle v);
std::string_view to_string(ClsLossKind v);
std::string_view to_string(LocLossKind v);
std::string_view to_string(MiningScope v);

// 1-based (block, layer) position of a dense concatenation unit.
struct DenseSite {
  int block = 0;
  int layer = 0;
  friend bool operator==(const DenseSite&, const DenseSite&) = default;
};

inline constexpr int kNumBlocks = 5;
inline constexpr int kNumLevels = 5;

// Every architecture and training knob. The background class occupies the
// last logit column, so num_classes == dataset categories + 1.
struct ModelConfig {
  int input_size = 320;
  int num_classes = 81;

  BackboneVariant backbone_variant = BackboneVariant::kMobileDenseNet;
  double width_multiplier = 1.0;
  int stem_width = 32;
  std::array<int, kNumBlocks> block_layer_counts{1, 3, 3, 4, 4};
  std::array<int, kNumBlocks> block_channel_widths{32, 64, 128, 256, 768};
  std::vector<DenseSite> dense_connection_sites{{2, 3}, {3, 3}, {4, 4}, {5, 3}, {5, 4}};
  double bottleneck_ratio = 0.375;
  std::array<int, 2> extra_level_widths{256, 256};
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.99;

  NeckVariant neck_variant = NeckVariant::kFcpnLite;
  int neck_channels = 256;

  HeadShareMode head_share_mode = HeadShareMode::kHalfShare;
  HeadStyle head_style = HeadStyle::kTrunk;

  int anchors_per_cell = 10;
  std::array<double, kNumLevels> anchor_base_sizes{24.0, 48.0, 96.0, 192.0, 384.0};
  std::vector<double> anchor_scales{1.0, 1.4142135623730951};
  std::vector<double> anchor_ratios{1.0, 0.5, 1.0 / 3.0, 2.0, 3.0};
  // Original SSDLite layout: 3 anchors (scale 1, ratios 1, 2, 1/2) on the
  // finest level.
  bool reduce_lowest_level_anchors = false;
  double match_iou_threshold = 0.5;

  ClsLossKind cls_loss = ClsLossKind::kCeHardNegative;
  LocLossKind loc_loss = LocLossKind::kDiou;
  int pos_neg_ratio = 6;
  double negative_coefficient = 0.5;
  double balance_a = 1.0;
  MiningScope mining_scope = MiningScope::kPerImage;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;

  // Piecewise-constant schedule. Boundaries are fractions of
  // total_iterations so shrinking a run shrinks the schedule with it.
  std::vector<double> lr_values{1e-3, 1e-4, 1e-5};
  std::vector<double> lr_boundaries{0.5, 0.75};
  int warmup_iterations = 0;
  int total_iterations = 80000;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  int batch_size = 32;
  std::vector<int> multi_scale_sizes{256, 288, 320, 352, 384};
  double flip_probability = 0.5;
  double crop_probability = 0.5;
  double min_crop_scale = 0.3;
  double color_jitter = 0.25;
  int checkpoint_every = 5000;
  int log_every = 20;

  double score_threshold = 0.05;
  double nms_iou_threshold = 0.45;
  int top_k = 200;
  int max_detections = 100;

  std::uint64_t seed = 0;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  int scaled(int width) const;
  int anchors_on_level(int level) const;

  // The published MobileNetV1 table with an SSDLite neck and predictor,
  // configured for COCO at 320x320.
  static ModelConfig mobilenet_v1_ssdlite();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& config);
// Rejects unknown keys and mistyped values, then validates.
ModelConfig config_from_json(const nlohmann::json& doc);
ModelConfig load_config(const std::string& path);
void save_config(const ModelConfig& config, const std::string& path);

// Applies "a.b.c=value" to a config document. Array elements are addressed
// by index ("block_layer_counts.1=4"). The value is parsed as JSON when it
// parses, otherwise taken as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);
ModelConfig with_overrides(const ModelConfig& base,
                           const std::vector<std::string>& assignments);

// Keys that only steer decoding and may differ between a checkpoint and the
// config used to run it.
bool is_inference_key(std::string_view key);

// Name of the first top-level key whose values differ, or "" when equal.
std::string config_difference(const ModelConfig& a, const ModelConfig& b,
                              bool ignore_inference_keys);

}  // namespace mdn

#endif  // MDN_CONFIG_HPP_
