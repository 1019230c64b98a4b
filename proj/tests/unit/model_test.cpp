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
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>

#include "mdn/anchors.hpp"
#include "mdn/losses.hpp"
#include "mdn/model.hpp"
#include "test_util.hpp"

namespace mdn {
namespace {

// ------------------------------------------------------------------ shapes

TEST(Backbone, LevelShapesAndChannels) {
  const ModelConfig c = testing::tiny_config();
  std::mt19937_64 rng(1);
  Detector<float> model(c);
  const auto p = model.backbone().forward(testing::random_act<float>(2, 64, 96, 3, rng), false,
                                          nullptr);
  const int hs[] = {8, 4, 2, 1, 1}, ws[] = {12, 6, 3, 2, 1};
  const auto ch = model.backbone().level_channels();
  for (int l = 0; l < kNumLevels; ++l) {
    EXPECT_EQ(p[l]->n(), 2);
    EXPECT_EQ(p[l]->h(), hs[l]) << l;
    EXPECT_EQ(p[l]->w(), ws[l]) << l;
    EXPECT_EQ(p[l]->c(), ch[l]) << l;
  }
}

TEST(Backbone, DenseSitesFollowConfig) {
  ModelConfig c;
  std::mt19937_64 rng(0);
  Backbone<float> b(c, {&rng, 1e-5, 0.99});
  EXPECT_EQ(b.dense_site_count(), 5);
  std::set<std::pair<int, int>> dense;
  for (const auto& u : b.units())
    if (u.dense) dense.insert({u.block, u.layer});
  EXPECT_EQ(dense, (std::set<std::pair<int, int>>{{2, 3}, {3, 3}, {4, 4}, {5, 3}, {5, 4}}));
  int total = 0;
  for (int n : c.block_layer_counts) total += n;
  EXPECT_EQ(static_cast<int>(b.units().size()), total);
  for (const auto& u : b.units()) {
    if (u.dense) {
      // The skip comes from the first unit of the same block.
      const int skip = c.scaled(c.block_channel_widths[u.block - 1]);
      EXPECT_EQ(u.bottleneck_channels,
                bottleneck_width(c.bottleneck_ratio, u.in_channels + skip));
    }
    EXPECT_EQ(u.out_channels, c.scaled(c.block_channel_widths[u.block - 1]));
  }

  c.dense_connection_sites = {};
  Backbone<float> plain(c, {&rng, 1e-5, 0.99});
  EXPECT_EQ(plain.dense_site_count(), 0);
}

TEST(Backbone, RejectsBadExtent) {
  EXPECT_THROW(check_input_extent(65, 64), ConfigError);
  EXPECT_THROW(check_input_extent(64, 0), ConfigError);
  EXPECT_NO_THROW(check_input_extent(32, 96));
  const ModelConfig c = testing::tiny_config();
  Detector<float> model(c);
  std::mt19937_64 rng(2);
  EXPECT_THROW(model.forward(testing::random_act<float>(1, 48, 64, 3, rng), false, nullptr),
               ConfigError);
}

TEST(Neck, MergeSitesPerVariant) {
  const std::pair<NeckVariant, std::vector<int>> cases[] = {
      {NeckVariant::kSsdLite, {}},
      {NeckVariant::kSsdcLite, {0, 1}},
      {NeckVariant::kFcpnLite, {0, 1, 2, 3}},
      {NeckVariant::kFpnLite, {0, 1, 2, 3}},
  };
  std::mt19937_64 rng(3);
  for (const auto& [variant, merged] : cases) {
    ModelConfig c = testing::tiny_config();
    c.neck_variant = variant;
    Detector<float> model(c);
    EXPECT_EQ(model.neck().merge_sites(), static_cast<int>(merged.size()));
    for (int l = 0; l < kNumLevels; ++l)
      EXPECT_EQ(model.neck().merges(l),
                std::find(merged.begin(), merged.end(), l) != merged.end());
    const auto cmaps = model.backbone().forward(testing::random_act<float>(1, 64, 64, 3, rng),
                                                false, nullptr);
    const auto pmaps = model.neck().forward(cmaps, false, nullptr);
    for (int l = 0; l < kNumLevels; ++l) {
      EXPECT_EQ(pmaps[l]->h(), cmaps[l]->h());
      EXPECT_EQ(pmaps[l]->w(), cmaps[l]->w());
      EXPECT_EQ(pmaps[l]->c(), model.neck().out_channels()[l]);
      // Unmerged levels pass through untouched.
      if (!model.neck().merges(l) && variant != NeckVariant::kFpnLite)
        EXPECT_EQ(pmaps[l].get(), cmaps[l].get());
    }
  }
}

TEST(Heads, AssignmentAndModuleCounts) {
  const std::tuple<HeadShareMode, std::array<int, 5>, int> cases[] = {
      {HeadShareMode::kFullShare, {0, 0, 0, 0, 0}, 1},
      {HeadShareMode::kShareExcept1, {0, 0, 0, 0, 1}, 2},
      {HeadShareMode::kHalfShare, {0, 0, 1, 1, 2}, 3},
      {HeadShareMode::kNonShare, {0, 1, 2, 3, 4}, 5},
  };
  for (const auto& [mode, assignment, count] : cases) {
    EXPECT_EQ(head_assignment(mode), assignment);
    ModelConfig c = testing::tiny_config();
    c.head_share_mode = mode;
    Detector<float> model(c);
    EXPECT_EQ(model.heads().module_count(), count);
    std::set<std::string> prefixes;
    for (auto* p : model.params()) {
      const auto& n = p->name;
      if (n.rfind("head.h", 0) == 0) prefixes.insert(n.substr(0, n.find('.', 5)));
    }
    EXPECT_EQ(static_cast<int>(prefixes.size()), count);
    for (int l = 0; l < kNumLevels; ++l)
      EXPECT_EQ(model.heads().module_for_level(l), assignment[l]);
  }
}

TEST(Heads, SharedModulesSeeEqualChannels) {
  for (auto variant : {NeckVariant::kSsdLite, NeckVariant::kSsdcLite, NeckVariant::kFcpnLite}) {
    ModelConfig c = testing::tiny_config();
    c.neck_variant = variant;
    c.head_share_mode = HeadShareMode::kFullShare;
    Detector<float> model(c);
    const auto& ch = model.neck().out_channels();
    const int cin = model.heads().module(0).in_channels();
    for (int l = 0; l < kNumLevels; ++l)
      EXPECT_EQ(model.heads().has_adapter(l), ch[l] != cin) << to_string(variant) << " " << l;
  }
}

TEST(Heads, OutputMatchesAnchorLayout) {
  for (bool reduced : {false, true}) {
    ModelConfig c = testing::tiny_config();
    c.reduce_lowest_level_anchors = reduced;
    if (reduced) c.head_share_mode = HeadShareMode::kNonShare;
    Detector<float> model(c);
    std::mt19937_64 rng(4);
    const auto out = model.forward(testing::random_act<float>(3, 64, 64, 3, rng), false, nullptr);
    const AnchorSet anchors = generate_anchors(c, 64);
    EXPECT_EQ(out.cls.n(), 3);
    EXPECT_EQ(static_cast<std::size_t>(out.cls.w()), anchors.size());
    EXPECT_EQ(out.cls.c(), c.num_classes);
    EXPECT_EQ(static_cast<std::size_t>(out.box.w()), anchors.size());
    EXPECT_EQ(out.box.c(), 4);
  }
}

TEST(Heads, ForegroundPriorBias) {
  // softmax([b, b, 0])[0] == 0.01
  const double b = foreground_prior_bias(3);
  const double p = std::exp(b) / (2 * std::exp(b) + 1);
  EXPECT_NEAR(p, 0.01, 1e-12);
}

TEST(Detector, ParamNamesUnique) {
  for (auto mode : {HeadShareMode::kFullShare, HeadShareMode::kNonShare}) {
    ModelConfig c = testing::tiny_config();
    c.head_share_mode = mode;
    c.neck_variant = NeckVariant::kFpnLite;
    Detector<float> model(c);
    std::set<std::string> names;
    std::size_t total = 0;
    for (auto* p : model.params()) {
      EXPECT_TRUE(names.insert(p->name).second) << p->name;
      ++total;
    }
    std::size_t sections = 0;
    for (auto s : {Section::kBackbone, Section::kNeck, Section::kHead})
      sections += model.section_params(s).size();
    EXPECT_EQ(sections, total);
  }
}

TEST(Detector, SeedDeterminesWeights) {
  ModelConfig c = testing::tiny_config();
  Detector<float> a(c), b(c);
  c.seed = 9;
  Detector<float> d(c);
  bool differs = false;
  auto pa = a.params(), pb = b.params(), pd = d.params();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value, pb[i]->value);
    differs |= pa[i]->value != pd[i]->value;
  }
  EXPECT_TRUE(differs);
}

TEST(Detector, EvalModeUsesRunningStatistics) {
  const ModelConfig c = testing::tiny_config();
  Detector<double> model(c);
  std::mt19937_64 rng(5);
  const auto x = testing::random_act<double>(2, 64, 64, 3, rng);
  // Per-image eval output does not depend on the rest of the batch.
  auto single = make_tensor<double>(1, 64, 64, 3);
  std::copy(x->values().begin(), x->values().begin() + single->size(), single->values().begin());
  const auto both = model.forward(x, false, nullptr);
  const auto one = model.forward(single, false, nullptr);
  for (std::size_t i = 0; i < one.cls.size(); ++i)
    ASSERT_NEAR(one.cls.values()[i], both.cls.values()[i], 1e-12);
}

// --------------------------------------------------------------- gradients

// Central differences on a random subset of entries of each parameter,
// compared by the relative error of the probe vectors.
void check_param_gradients(const ParamList<double>& params, const std::function<double()>& loss,
                           int probes_per_param, std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  const double h = 1e-6;
  double diff2 = 0, ref2 = 0;
  for (auto* p : params) {
    if (!p->trainable) continue;
    for (int k = 0; k < probes_per_param; ++k) {
      const std::size_t i = rng() % p->size();
      const double keep = p->value[i];
      p->value[i] = keep + h;
      const double up = loss();
      p->value[i] = keep - h;
      const double down = loss();
      p->value[i] = keep;
      const double num = (up - down) / (2 * h);
      diff2 += (num - p->grad[i]) * (num - p->grad[i]);
      ref2 += num * num + p->grad[i] * p->grad[i];
    }
  }
  ASSERT_GT(ref2, 0.0);
  EXPECT_LE(std::sqrt(diff2 / ref2), tolerance);
}

// Random linear readout of a tensor.
double readout(const Tensor<double>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  double s = 0;
  for (double v : y.values()) s += v * d(rng);
  return s;
}

Tensor<double> readout_grad(const Tensor<double>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  Tensor<double> g(y.n(), y.h(), y.w(), y.c());
  for (auto& v : g.values()) v = d(rng);
  return g;
}

template <typename Layer>
void check_layer(Layer& layer, const Act<double>& x, std::uint64_t seed) {
  typename Layer::Cache cache;
  const auto y = layer.forward(x, true, &cache);
  ParamList<double> params;
  layer.collect(params);
  for (auto* p : params) p->zero_grad();
  const Tensor<double> dx = layer.backward(readout_grad(*y, seed), cache);
  auto f = [&] { return readout(*layer.forward(x, true, nullptr), seed); };
  check_param_gradients(params, f, 6, seed, 1e-6);
  // Input gradient.
  auto xm = std::const_pointer_cast<Tensor<double>>(x);
  std::mt19937_64 rng(seed + 1);
  double diff2 = 0, ref2 = 0;
  for (int k = 0; k < 30; ++k) {
    const std::size_t i = rng() % xm->size();
    const double keep = xm->values()[i];
    xm->values()[i] = keep + 1e-6;
    const double up = f();
    xm->values()[i] = keep - 1e-6;
    const double down = f();
    xm->values()[i] = keep;
    const double num = (up - down) / 2e-6;
    diff2 += (num - dx.values()[i]) * (num - dx.values()[i]);
    ref2 += num * num + dx.values()[i] * dx.values()[i];
  }
  EXPECT_LE(std::sqrt(diff2 / std::max(ref2, 1e-300)), 1e-6);
}

TEST(Gradients, Layers) {
  std::mt19937_64 rng(11);
  const InitContext ctx{&rng, 1e-5, 0.99};
  {
    PointwiseBnRelu6<double> l("pw", 5, 7, ctx);
    check_layer(l, testing::random_act<double>(2, 3, 5, 5, rng), 1);
  }
  for (int stride : {1, 2}) {
    DSConvUnit<double> l("ds", 6, 9, stride, ctx);
    check_layer(l, testing::random_act<double>(2, 7, 6, 6, rng), 2 + stride);
  }
  {
    BatchNormRelu6<double> l("bn", 4, ctx);
    check_layer(l, testing::random_act<double>(3, 2, 2, 4, rng), 5);
  }
}

TEST(Gradients, DenseUnitWithSkips) {
  std::mt19937_64 rng(12);
  const InitContext ctx{&rng, 1e-5, 0.99};
  DenseUnit<double> unit("dense", {6, 4, 3}, 0.375, 8, 2, ctx);
  std::vector<Act<double>> in = {testing::random_act<double>(2, 6, 6, 6, rng),
                                 testing::random_act<double>(2, 6, 6, 4, rng),
                                 testing::random_act<double>(2, 6, 6, 3, rng)};
  typename DenseUnit<double>::Cache cache;
  const auto y = unit.forward(in[0], {in[1], in[2]}, true, &cache);
  EXPECT_EQ(y->h(), 3);
  EXPECT_EQ(y->c(), 8);
  EXPECT_EQ(unit.concat_channels(), 13);
  EXPECT_EQ(unit.bottleneck_channels(), bottleneck_width(0.375, 13));
  ParamList<double> params;
  unit.collect(params);
  const auto dins = unit.backward(readout_grad(*y, 3), cache);
  ASSERT_EQ(dins.size(), 3u);
  auto f = [&] { return readout(*unit.forward(in[0], {in[1], in[2]}, true, nullptr), 3); };
  check_param_gradients(params, f, 6, 4, 1e-6);
  for (int part = 0; part < 3; ++part) {
    auto xm = std::const_pointer_cast<Tensor<double>>(in[part]);
    for (std::size_t i = 0; i < xm->size(); i += 17) {
      const double keep = xm->values()[i];
      xm->values()[i] = keep + 1e-6;
      const double up = f();
      xm->values()[i] = keep - 1e-6;
      const double down = f();
      xm->values()[i] = keep;
      EXPECT_NEAR(dins[part].values()[i], (up - down) / 2e-6, 1e-6) << part << " " << i;
    }
  }
}

struct DetectorLossCase {
  ModelConfig config;
  AnchorSet anchors;
  std::vector<std::vector<LabeledBox>> gts;
  std::vector<MatchResult> matches;
  Act<double> images;
};

DetectorLossCase make_detector_case(ModelConfig c) {
  DetectorLossCase d;
  d.config = c;
  d.anchors = generate_anchors(c, 64);
  d.gts = {{{{4, 6, 30, 28}, 0, false}, {{30, 20, 62, 60}, 1, false}},
           {{{10, 10, 50, 40}, 1, false}}};
  for (const auto& g : d.gts)
    d.matches.push_back(match(d.anchors, g, c.match_iou_threshold, c.num_classes - 1));
  std::mt19937_64 rng(21);
  d.images = testing::random_act<double>(2, 64, 64, 3, rng);
  return d;
}

// Moves BN shifts and running statistics off their initial values so that
// dead units do not sit exactly on a ReLU6 corner.
void perturb_bn_state(Detector<double>& model) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto* p : model.params()) {
    const bool shift = p->name.find("beta") != std::string::npos ||
                       p->name.find("running_mean") != std::string::npos;
    const bool var = p->name.find("running_var") != std::string::npos;
    if (shift) for (auto& v : p->value) v = u(rng);
    if (var) for (auto& v : p->value) v = 1.0 + u(rng);
  }
}

// Full network against detection_loss. In training mode the earliest layers
// sit behind many batch-normalized ReLU6 stages and the loss is too rough
// for central differences at this width, so the backbone is checked with
// frozen statistics; the batch-statistics path is covered per layer above.
void check_detector(const ModelConfig& c, std::uint64_t seed) {
  const DetectorLossCase d = make_detector_case(c);
  Detector<double> model(c);
  perturb_bn_state(model);
  const LossTargets targets{&d.anchors, &d.matches, &d.gts};
  for (bool train : {false, true}) {
    SCOPED_TRACE(train ? "train" : "eval");
    typename Detector<double>::Cache cache;
    const auto out = model.forward(d.images, train, &cache);
    Tensor<double> dcls, dbox;
    detection_loss(out.cls, out.box, targets, c, &dcls, &dbox);
    // Backward folds batch statistics into the running estimates; keep the
    // eval-mode function fixed across both passes.
    std::vector<std::vector<double>> saved;
    for (auto* p : model.params()) saved.push_back(p->value);
    model.zero_grad();
    model.backward(dcls, dbox, cache);
    {
      auto ps = model.params();
      for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = saved[i];
    }
    auto f = [&] {
      const auto o = model.forward(d.images, train, nullptr);
      return detection_loss(o.cls, o.box, targets, c, static_cast<Tensor<double>*>(nullptr),
                            static_cast<Tensor<double>*>(nullptr))
          .total;
    };
    for (auto s : {Section::kBackbone, Section::kNeck, Section::kHead}) {
      if (train && s == Section::kBackbone) continue;
      SCOPED_TRACE(static_cast<int>(s));
      const auto params = model.section_params(s);
      if (params.empty()) continue;
      check_param_gradients(params, f, 2, seed + static_cast<int>(s), 1e-5);
    }
  }
}

TEST(Gradients, DetectorDefaultTopology) {
  check_detector(testing::tiny_config(), 31);
}

TEST(Gradients, DetectorOtherTopologies) {
  ModelConfig c = testing::tiny_config();
  c.neck_variant = NeckVariant::kFpnLite;
  c.head_share_mode = HeadShareMode::kFullShare;
  c.loc_loss = LocLossKind::kSmoothL1;
  check_detector(c, 41);
  c.neck_variant = NeckVariant::kSsdcLite;
  c.head_share_mode = HeadShareMode::kNonShare;
  c.head_style = HeadStyle::kSsdLite;
  c.cls_loss = ClsLossKind::kFocal;
  c.loc_loss = LocLossKind::kDiou;
  check_detector(c, 51);
}

TEST(Gradients, BackwardLeavesRunningStatsInRange) {
  const ModelConfig c = testing::tiny_config();
  Detector<double> model(c);
  std::mt19937_64 rng(6);
  typename Detector<double>::Cache cache;
  const auto out = model.forward(testing::random_act<double>(2, 64, 64, 3, rng), true, &cache);
  Tensor<double> dc(out.cls.n(), out.cls.h(), out.cls.w(), out.cls.c());
  Tensor<double> db(out.box.n(), out.box.h(), out.box.w(), out.box.c());
  model.backward(dc, db, cache);
  for (auto* p : model.params()) {
    if (p->name.find("running_var") == std::string::npos) continue;
    for (double v : p->value) EXPECT_GE(v, 0.0) << p->name;
  }
}

// -------------------------------------------------------------- checkpoints

TEST(Checkpoint, RoundTripIsExact) {
  testing::TempDir dir;
  ModelConfig c = testing::tiny_config();
  c.seed = 4;
  Detector<float> model(c);
  std::mt19937_64 rng(7);
  for (auto* p : model.params())
    for (auto& v : p->value) v += static_cast<float>(std::uniform_real_distribution<>(0, 1)(rng));
  save_checkpoint(dir / "m.mdn", model, {"a", "b"}, 123);
  CheckpointMeta meta;
  auto loaded = load_checkpoint<float>(dir / "m.mdn", &meta);
  EXPECT_EQ(meta.config, c);
  EXPECT_EQ(meta.categories, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(meta.iteration, 123);
  auto pa = model.params(), pb = loaded.params();
  ASSERT_EQ(pa.size(), pb.size());
  ASSERT_EQ(meta.tensor_names.size(), pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(meta.tensor_names[i], pa[i]->name);
    EXPECT_EQ(pa[i]->shape, pb[i]->shape);
    EXPECT_EQ(0, std::memcmp(pa[i]->value.data(), pb[i]->value.data(),
                             pa[i]->size() * sizeof(float)))
        << pa[i]->name;
  }
  const auto x = testing::random_act<float>(1, 64, 64, 3, rng);
  EXPECT_EQ(model.forward(x, false, nullptr).cls.values(),
            loaded.forward(x, false, nullptr).cls.values());
}

TEST(Checkpoint, DoubleFileLoadsAsDouble) {
  testing::TempDir dir;
  const ModelConfig c = testing::tiny_config();
  Detector<double> model(c);
  save_checkpoint(dir / "m.mdn", model, {"a", "b"}, 0);
  auto loaded = load_checkpoint<double>(dir / "m.mdn");
  EXPECT_EQ(loaded.params()[0]->value, model.params()[0]->value);
}

TEST(Checkpoint, MismatchedModelIsRejected) {
  testing::TempDir dir;
  const ModelConfig c = testing::tiny_config();
  Detector<float> model(c);
  save_checkpoint(dir / "m.mdn", model, {"a", "b"}, 0);
  ModelConfig other = c;
  other.head_share_mode = HeadShareMode::kFullShare;
  Detector<float> target(other);
  try {
    load_checkpoint_into(dir / "m.mdn", target);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("head_share_mode"), std::string::npos) << e.what();
  }
  // Decoding knobs may differ.
  ModelConfig decode = c;
  decode.score_threshold = 0.3;
  Detector<float> ok(decode);
  EXPECT_NO_THROW(load_checkpoint_into(dir / "m.mdn", ok));
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  testing::TempDir dir;
  Detector<float> model(testing::tiny_config());
  save_checkpoint(dir / "m.mdn", model, {"a", "b"}, 0);
  const auto size = std::filesystem::file_size(dir / "m.mdn");
  std::filesystem::copy_file(dir / "m.mdn", dir / "short.mdn");
  std::filesystem::resize_file(dir / "short.mdn", size - 10);
  EXPECT_THROW(load_checkpoint<float>(dir / "short.mdn"), CheckpointError);
  {
    std::ofstream f(dir / "bad.mdn", std::ios::binary);
    f << "NOTACKPT";
  }
  EXPECT_THROW(read_checkpoint_meta(dir / "bad.mdn"), CheckpointError);
  EXPECT_THROW(read_checkpoint_meta(dir / "missing.mdn"), CheckpointError);
  // No temporary file is left behind.
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 3);
}

}  // namespace
}  // namespace mdn
