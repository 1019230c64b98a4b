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
#include "mdn/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace mdn {

using nlohmann::json;

namespace {

template <typename E>
struct EnumEntry {
  E value;
  const char* name;
};

constexpr EnumEntry<BackboneVariant> kBackboneNames[] = {
    {BackboneVariant::kMobileDenseNet, "mobiledensenet"},
    {BackboneVariant::kMobileNetV1, "mobilenetv1"}};
constexpr EnumEntry<NeckVariant> kNeckNames[] = {
    {NeckVariant::kSsdLite, "ssdlite"},
    {NeckVariant::kSsdcLite, "ssdclite"},
    {NeckVariant::kFpnLite, "fpnlite"},
    {NeckVariant::kFcpnLite, "fcpnlite"}};
constexpr EnumEntry<HeadShareMode> kShareNames[] = {
    {HeadShareMode::kFullShare, "full_share"},
    {HeadShareMode::kShareExcept1, "share_except1"},
    {HeadShareMode::kHalfShare, "half_share"},
    {HeadShareMode::kNonShare, "non_share"}};
constexpr EnumEntry<HeadStyle> kHeadStyleNames[] = {
    {HeadStyle::kTrunk, "trunk"}, {HeadStyle::kSsdLite, "ssdlite"}};
constexpr EnumEntry<ClsLossKind> kClsLossNames[] = {
    {ClsLossKind::kCeHardNegative, "ce_hnm"}, {ClsLossKind::kFocal, "focal"}};
constexpr EnumEntry<LocLossKind> kLocLossNames[] = {
    {LocLossKind::kDiou, "diou"}, {LocLossKind::kSmoothL1, "smooth_l1"}};
constexpr EnumEntry<MiningScope> kMiningNames[] = {
    {MiningScope::kPerImage, "per_image"}, {MiningScope::kPerBatch, "per_batch"}};

template <typename E, std::size_t N>
std::string_view enum_name(const EnumEntry<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <typename E, std::size_t N>
E enum_parse(const EnumEntry<E> (&table)[N], const json& j, const std::string& key) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    for (const auto& e : table)
      if (s == e.name) return e.value;
  }
  std::string allowed;
  for (const auto& e : table) {
    if (!allowed.empty()) allowed += ", ";
    allowed += e.name;
  }
  throw ConfigError("config key '" + key + "' must be one of {" + allowed + "}, got " +
                    j.dump());
}

[[noreturn]] void type_error(const std::string& key, const char* want, const json& j) {
  throw ConfigError("config key '" + key + "' expects " + want + ", got " + j.dump());
}

// Codec overloads: one encode/decode pair per field type.
json encode(int v) { return v; }
json encode(double v) { return v; }
json encode(bool v) { return v; }
json encode(std::uint64_t v) { return v; }
json encode(BackboneVariant v) { return std::string(to_string(v)); }
json encode(NeckVariant v) { return std::string(to_string(v)); }
json encode(HeadShareMode v) { return std::string(to_string(v)); }
json encode(HeadStyle v) { return std::string(to_string(v)); }
json encode(ClsLossKind v) { return std::string(to_string(v)); }
json encode(LocLossKind v) { return std::string(to_string(v)); }
json encode(MiningScope v) { return std::string(to_string(v)); }
json encode(const DenseSite& s) { return json::array({s.block, s.layer}); }
template <typename T, std::size_t N>
json encode(const std::array<T, N>& a) {
  json out = json::array();
  for (const auto& v : a) out.push_back(encode(v));
  return out;
}
template <typename T>
json encode(const std::vector<T>& a) {
  json out = json::array();
  for (const auto& v : a) out.push_back(encode(v));
  return out;
}

void decode(const json& j, const std::string& key, int& out) {
  if (!j.is_number_integer()) type_error(key, "an integer", j);
  const auto v = j.get<std::int64_t>();
  if (v < INT32_MIN || v > INT32_MAX) type_error(key, "a 32-bit integer", j);
  out = static_cast<int>(v);
}
void decode(const json& j, const std::string& key, double& out) {
  if (!j.is_number()) type_error(key, "a number", j);
  out = j.get<double>();
}
void decode(const json& j, const std::string& key, bool& out) {
  if (!j.is_boolean()) type_error(key, "a boolean", j);
  out = j.get<bool>();
}
void decode(const json& j, const std::string& key, std::uint64_t& out) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    type_error(key, "a non-negative integer", j);
  out = j.get<std::uint64_t>();
}
void decode(const json& j, const std::string& key, BackboneVariant& out) {
  out = enum_parse(kBackboneNames, j, key);
}
void decode(const json& j, const std::string& key, NeckVariant& out) {
  out = enum_parse(kNeckNames, j, key);
}
void decode(const json& j, const std::string& key, HeadShareMode& out) {
  out = enum_parse(kShareNames, j, key);
}
void decode(const json& j, const std::string& key, HeadStyle& out) {
  out = enum_parse(kHeadStyleNames, j, key);
}
void decode(const json& j, const std::string& key, ClsLossKind& out) {
  out = enum_parse(kClsLossNames, j, key);
}
void decode(const json& j, const std::string& key, LocLossKind& out) {
  out = enum_parse(kLocLossNames, j, key);
}
void decode(const json& j, const std::string& key, MiningScope& out) {
  out = enum_parse(kMiningNames, j, key);
}
void decode(const json& j, const std::string& key, DenseSite& out) {
  if (!j.is_array() || j.size() != 2) type_error(key, "a [block, layer] pair", j);
  decode(j[0], key + ".0", out.block);
  decode(j[1], key + ".1", out.layer);
}
template <typename T, std::size_t N>
void decode(const json& j, const std::string& key, std::array<T, N>& out) {
  if (!j.is_array() || j.size() != N)
    type_error(key, ("an array of " + std::to_string(N) + " elements").c_str(), j);
  for (std::size_t i = 0; i < N; ++i) decode(j[i], key + "." + std::to_string(i), out[i]);
}
template <typename T>
void decode(const json& j, const std::string& key, std::vector<T>& out) {
  if (!j.is_array()) type_error(key, "an array", j);
  out.assign(j.size(), T{});
  for (std::size_t i = 0; i < j.size(); ++i)
    decode(j[i], key + "." + std::to_string(i), out[i]);
}

template <typename C, typename V>
void visit_fields(C& c, V&& v) {
  v("input_size", c.input_size);
  v("num_classes", c.num_classes);
  v("backbone_variant", c.backbone_variant);
  v("width_multiplier", c.width_multiplier);
  v("stem_width", c.stem_width);
  v("block_layer_counts", c.block_layer_counts);
  v("block_channel_widths", c.block_channel_widths);
  v("dense_connection_sites", c.dense_connection_sites);
  v("bottleneck_ratio", c.bottleneck_ratio);
  v("extra_level_widths", c.extra_level_widths);
  v("bn_epsilon", c.bn_epsilon);
  v("bn_momentum", c.bn_momentum);
  v("neck_variant", c.neck_variant);
  v("neck_channels", c.neck_channels);
  v("head_share_mode", c.head_share_mode);
  v("head_style", c.head_style);
  v("anchors_per_cell", c.anchors_per_cell);
  v("anchor_base_sizes", c.anchor_base_sizes);
  v("anchor_scales", c.anchor_scales);
  v("anchor_ratios", c.anchor_ratios);
  v("reduce_lowest_level_anchors", c.reduce_lowest_level_anchors);
  v("match_iou_threshold", c.match_iou_threshold);
  v("cls_loss", c.cls_loss);
  v("loc_loss", c.loc_loss);
  v("pos_neg_ratio", c.pos_neg_ratio);
  v("negative_coefficient", c.negative_coefficient);
  v("balance_a", c.balance_a);
  v("mining_scope", c.mining_scope);
  v("focal_alpha", c.focal_alpha);
  v("focal_gamma", c.focal_gamma);
  v("lr_values", c.lr_values);
  v("lr_boundaries", c.lr_boundaries);
  v("warmup_iterations", c.warmup_iterations);
  v("total_iterations", c.total_iterations);
  v("weight_decay", c.weight_decay);
  v("momentum", c.momentum);
  v("batch_size", c.batch_size);
  v("multi_scale_sizes", c.multi_scale_sizes);
  v("flip_probability", c.flip_probability);
  v("crop_probability", c.crop_probability);
  v("min_crop_scale", c.min_crop_scale);
  v("color_jitter", c.color_jitter);
  v("checkpoint_every", c.checkpoint_every);
  v("log_every", c.log_every);
  v("score_threshold", c.score_threshold);
  v("nms_iou_threshold", c.nms_iou_threshold);
  v("top_k", c.top_k);
  v("max_detections", c.max_detections);
  v("seed", c.seed);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(BackboneVariant v) { return enum_name(kBackboneNames, v); }
std::string_view to_string(NeckVariant v) { return enum_name(kNeckNames, v); }
std::string_view to_string(HeadShareMode v) { return enum_name(kShareNames, v); }
std::string_view to_string(HeadStyle v) { return enum_name(kHeadStyleNames, v); }
std::string_view to_string(ClsLossKind v) { return enum_name(kClsLossNames, v); }
std::string_view to_string(LocLossKind v) { return enum_name(kLocLossNames, v); }
std::string_view to_string(MiningScope v) { return enum_name(kMiningNames, v); }

int ModelConfig::scaled(int width) const {
  return std::max(1, static_cast<int>(std::lround(width * width_multiplier)));
}

int ModelConfig::anchors_on_level(int level) const {
  if (reduce_lowest_level_anchors && level == 0) return 3;
  return anchors_per_cell;
}

void ModelConfig::validate() const {
  require(input_size > 0 && input_size % 32 == 0,
          "input_size must be a positive multiple of 32, got " + std::to_string(input_size));
  require(num_classes >= 2, "num_classes must be >= 2 (categories plus background)");
  require(width_multiplier > 0.0, "width_multiplier must be positive");
  require(stem_width > 0, "stem_width must be positive");
  for (int b = 0; b < kNumBlocks; ++b) {
    require(block_layer_counts[b] >= 1,
            "block_layer_counts." + std::to_string(b) + " must be >= 1");
    require(block_channel_widths[b] > 0,
            "block_channel_widths." + std::to_string(b) + " must be positive");
  }
  for (int w : extra_level_widths) require(w > 0, "extra_level_widths must be positive");
  require(neck_channels > 0, "neck_channels must be positive");
  require(bottleneck_ratio > 0.0 && bottleneck_ratio <= 4.0,
          "bottleneck_ratio must lie in (0, 4]");
  std::set<std::pair<int, int>> seen;
  for (const auto& site : dense_connection_sites) {
    const std::string where =
        "dense site (" + std::to_string(site.block) + ", " + std::to_string(site.layer) + ")";
    require(site.block >= 1 && site.block <= kNumBlocks, where + ": block out of range 1..5");
    require(site.layer >= 3 && site.layer <= block_layer_counts[site.block - 1],
            where + ": layer must be >= 3 and within its block");
    require(seen.insert({site.block, site.layer}).second, where + ": duplicate");
  }
  if (backbone_variant == BackboneVariant::kMobileNetV1)
    require(dense_connection_sites.empty(), "mobilenetv1 backbone takes no dense_connection_sites");
  require(bn_epsilon > 0.0, "bn_epsilon must be positive");
  require(bn_momentum >= 0.0 && bn_momentum < 1.0, "bn_momentum must lie in [0, 1)");

  require(!anchor_scales.empty() && !anchor_ratios.empty(),
          "anchor_scales and anchor_ratios must be nonempty");
  for (double s : anchor_scales) require(s > 0.0, "anchor_scales must be positive");
  for (double r : anchor_ratios) require(r > 0.0, "anchor_ratios must be positive");
  for (double s : anchor_base_sizes) require(s > 0.0, "anchor_base_sizes must be positive");
  require(anchors_per_cell == static_cast<int>(anchor_scales.size() * anchor_ratios.size()),
          "anchors_per_cell (" + std::to_string(anchors_per_cell) +
              ") must equal |anchor_scales| x |anchor_ratios| (" +
              std::to_string(anchor_scales.size() * anchor_ratios.size()) + ")");
  if (reduce_lowest_level_anchors)
    require(head_share_mode == HeadShareMode::kNonShare,
            "reduce_lowest_level_anchors needs head_share_mode non_share");
  require(match_iou_threshold > 0.0 && match_iou_threshold <= 1.0,
          "match_iou_threshold must lie in (0, 1]");

  require(pos_neg_ratio >= 1, "pos_neg_ratio must be >= 1");
  require(negative_coefficient >= 0.0, "negative_coefficient must be >= 0");
  require(balance_a >= 0.0, "balance_a must be >= 0");
  require(focal_alpha >= 0.0 && focal_gamma >= 0.0, "focal parameters must be >= 0");

  require(!lr_values.empty(), "lr_values must be nonempty");
  require(lr_values.size() == lr_boundaries.size() + 1,
          "lr_values must have exactly one more entry than lr_boundaries");
  for (double v : lr_values) require(v >= 0.0, "lr_values must be >= 0");
  for (std::size_t i = 0; i < lr_boundaries.size(); ++i) {
    require(lr_boundaries[i] > 0.0 && lr_boundaries[i] <= 1.0,
            "lr_boundaries are fractions of total_iterations in (0, 1]");
    if (i > 0)
      require(lr_boundaries[i] > lr_boundaries[i - 1], "lr_boundaries must increase");
  }
  require(warmup_iterations >= 0, "warmup_iterations must be >= 0");
  require(total_iterations >= 0, "total_iterations must be >= 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(!multi_scale_sizes.empty(), "multi_scale_sizes must be nonempty");
  for (int s : multi_scale_sizes)
    require(s > 0 && s % 32 == 0,
            "multi_scale_sizes entries must be positive multiples of 32, got " +
                std::to_string(s));
  require(in_unit_interval(flip_probability), "flip_probability must lie in [0, 1]");
  require(in_unit_interval(crop_probability), "crop_probability must lie in [0, 1]");
  require(min_crop_scale > 0.0 && min_crop_scale <= 1.0, "min_crop_scale must lie in (0, 1]");
  require(color_jitter >= 0.0 && color_jitter < 1.0, "color_jitter must lie in [0, 1)");
  require(checkpoint_every >= 0 && log_every >= 1,
          "checkpoint_every must be >= 0 and log_every >= 1");

  require(in_unit_interval(score_threshold), "score_threshold must lie in [0, 1]");
  require(in_unit_interval(nms_iou_threshold), "nms_iou_threshold must lie in [0, 1]");
  require(top_k >= 1 && max_detections >= 1, "top_k and max_detections must be >= 1");
}

ModelConfig ModelConfig::mobilenet_v1_ssdlite() {
  ModelConfig c;
  c.backbone_variant = BackboneVariant::kMobileNetV1;
  c.stem_width = 32;
  c.block_layer_counts = {1, 2, 2, 6, 2};
  c.block_channel_widths = {64, 128, 256, 512, 1024};
  c.dense_connection_sites.clear();
  c.bottleneck_ratio = 0.5;
  c.neck_variant = NeckVariant::kSsdLite;
  c.head_share_mode = HeadShareMode::kNonShare;
  c.head_style = HeadStyle::kSsdLite;
  c.anchor_scales = {1.0, 1.4142135623730951};
  c.anchor_ratios = {1.0, 2.0, 0.5};
  c.anchors_per_cell = 6;
  c.reduce_lowest_level_anchors = true;
  return c;
}

json to_json(const ModelConfig& config) {
  json out = json::object();
  ModelConfig copy = config;
  visit_fields(copy, [&](const char* name, const auto& field) { out[name] = encode(field); });
  return out;
}

ModelConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  ModelConfig c;
  std::set<std::string> known;
  visit_fields(c, [&](const char* name, auto& field) {
    known.insert(name);
    if (auto it = doc.find(name); it != doc.end()) decode(*it, name, field);
  });
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  c.validate();
  return c;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": JSON parse error at byte " +
                      std::to_string(e.byte));
  }
  return config_from_json(doc);
}

void save_config(const ModelConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path);
  out << to_json(config).dump(2) << "\n";
  if (!out) throw ConfigError("write failed for " + path);
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not KEY=VALUE");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }

  json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& p = path[i];
    if (node->is_object()) {
      auto it = node->find(p);
      if (it == node->end()) throw ConfigError("unknown config key '" + key + "'");
      node = &*it;
    } else if (node->is_array()) {
      std::size_t idx = 0;
      std::size_t used = 0;
      try {
        idx = std::stoul(p, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != p.size() || idx >= node->size())
        throw ConfigError("bad array index '" + p + "' in override key '" + key + "'");
      node = &(*node)[idx];
    } else {
      throw ConfigError("override key '" + key + "' descends into a scalar");
    }
  }
  *node = std::move(value);
}

ModelConfig with_overrides(const ModelConfig& base, const std::vector<std::string>& assignments) {
  json doc = to_json(base);
  for (const auto& a : assignments) apply_override(doc, a);
  return config_from_json(doc);
}

bool is_inference_key(std::string_view key) {
  return key == "score_threshold" || key == "nms_iou_threshold" || key == "top_k" ||
         key == "max_detections";
}

std::string config_difference(const ModelConfig& a, const ModelConfig& b,
                              bool ignore_inference_keys) {
  const json ja = to_json(a), jb = to_json(b);
  for (auto it = ja.begin(); it != ja.end(); ++it) {
    if (ignore_inference_keys && is_inference_key(it.key())) continue;
    if (!jb.contains(it.key()) || jb.at(it.key()) != it.value()) return it.key();
  }
  return "";
}

}  // namespace mdn
