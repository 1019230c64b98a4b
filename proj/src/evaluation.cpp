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
#include "mdn/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace mdn {

double iou_threshold_at(int index) { return 0.5 + 0.05 * index; }

namespace {

constexpr int kRanges = 4;

std::pair<double, double> area_bounds(AreaRange r) {
  switch (r) {
    case AreaRange::kSmall: return {0.0, kSmallAreaLimit};
    case AreaRange::kMedium: return {kSmallAreaLimit, kMediumAreaLimit};
    case AreaRange::kLarge: return {kMediumAreaLimit, 1e10};
    case AreaRange::kAll: break;
  }
  return {0.0, 1e10};
}

enum Status : unsigned char { kFalsePositive = 0, kTruePositive = 1, kIgnored = 2 };

// Matching outcome of one image and class under one area range.
struct Evaluated {
  std::vector<double> scores;  // score-descending
  std::array<std::vector<unsigned char>, kIouThresholdCount> status;
  int ground_truths = 0;       // not ignored
};

double overlap(const BoxXYXY& det, const LabeledBox& gt) {
  if (!gt.crowd) return iou(det, gt.box);
  const double a = det.area();
  return a > 0.0 ? intersection_area(det, gt.box) / a : 0.0;
}

Evaluated evaluate_image(const std::vector<Detection>& dets, const std::vector<LabeledBox>& gts_in,
                         AreaRange range) {
  const auto [lo, hi] = area_bounds(range);
  auto outside = [&](double area) { return area < lo || area > hi; };

  // Ignored boxes go last so a regular match is always preferred.
  std::vector<LabeledBox> gts;
  std::vector<unsigned char> gt_ignore;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& g : gts_in) {
      const bool ig = g.crowd || outside(g.box.area());
      if (ig == (pass == 1)) {
        gts.push_back(g);
        gt_ignore.push_back(ig);
      }
    }

  Evaluated out;
  out.ground_truths = static_cast<int>(std::count(gt_ignore.begin(), gt_ignore.end(), 0));
  for (const auto& d : dets) out.scores.push_back(d.score);

  std::vector<std::vector<double>> ious(dets.size(), std::vector<double>(gts.size()));
  for (std::size_t d = 0; d < dets.size(); ++d)
    for (std::size_t g = 0; g < gts.size(); ++g) ious[d][g] = overlap(dets[d].box, gts[g]);

  for (int t = 0; t < kIouThresholdCount; ++t) {
    const double thr = iou_threshold_at(t);
    std::vector<int> gt_match(gts.size(), -1);
    auto& status = out.status[t];
    status.assign(dets.size(), kFalsePositive);
    for (std::size_t d = 0; d < dets.size(); ++d) {
      double best = std::min(thr, 1.0 - 1e-10);
      int m = -1;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gt_match[g] >= 0 && !gts[g].crowd) continue;
        if (m > -1 && !gt_ignore[m] && gt_ignore[g]) break;
        if (ious[d][g] < best) continue;
        best = ious[d][g];
        m = static_cast<int>(g);
      }
      if (m == -1) {
        if (outside(dets[d].box.area())) status[d] = kIgnored;
        continue;
      }
      gt_match[m] = static_cast<int>(d);
      status[d] = gt_ignore[m] ? kIgnored : kTruePositive;
    }
  }
  return out;
}

// Precision at the recall points from the pooled per-image results of one
// class; empty when nothing is to be found.
std::vector<double> accumulate(const std::vector<const Evaluated*>& parts, int t) {
  int n_gt = 0;
  std::vector<std::pair<double, unsigned char>> pooled;
  for (const Evaluated* e : parts) {
    n_gt += e->ground_truths;
    for (std::size_t d = 0; d < e->scores.size(); ++d)
      pooled.emplace_back(e->scores[d], e->status[t][d]);
  }
  if (n_gt == 0) return {};
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> recall, precision;
  double tp = 0.0, fp = 0.0;
  for (const auto& [score, st] : pooled) {
    if (st == kIgnored) continue;
    if (st == kTruePositive) tp += 1.0;
    else fp += 1.0;
    recall.push_back(tp / n_gt);
    precision.push_back(tp / (tp + fp));
  }
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  std::vector<double> q(kRecallPoints, 0.0);
  for (int r = 0; r < kRecallPoints; ++r) {
    const double level = r / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) q[r] = precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return q;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Per image and class: detections of that class, best first, capped.
std::vector<Detection> class_detections(const std::vector<Detection>& all, int c, int cap) {
  std::vector<Detection> out;
  for (const auto& d : all)
    if (d.class_id == c) out.push_back(d);
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  if (static_cast<int>(out.size()) > cap) out.resize(cap);
  return out;
}

std::vector<LabeledBox> class_boxes(const std::vector<LabeledBox>& all, int c) {
  std::vector<LabeledBox> out;
  for (const auto& g : all)
    if (g.class_id == c) out.push_back(g);
  return out;
}

void check_inputs(const std::vector<std::vector<Detection>>& dets,
                  const std::vector<std::vector<LabeledBox>>& gts) {
  if (dets.size() != gts.size())
    throw std::invalid_argument("detections and ground truth cover different image counts");
}

}  // namespace

std::vector<double> precision_curve(const std::vector<std::vector<Detection>>& detections,
                                    const std::vector<std::vector<LabeledBox>>& ground_truth,
                                    int class_id, int threshold_index, AreaRange range,
                                    const EvalOptions& options) {
  check_inputs(detections, ground_truth);
  std::vector<Evaluated> per_image;
  for (std::size_t i = 0; i < detections.size(); ++i)
    per_image.push_back(evaluate_image(
        class_detections(detections[i], class_id, options.max_detections_per_image),
        class_boxes(ground_truth[i], class_id), range));
  std::vector<const Evaluated*> parts;
  for (const auto& e : per_image) parts.push_back(&e);
  return accumulate(parts, threshold_index);
}

EvalReport evaluate_ap(const std::vector<std::vector<Detection>>& detections,
                       const std::vector<std::vector<LabeledBox>>& ground_truth,
                       const std::vector<std::string>& class_names, const EvalOptions& options) {
  check_inputs(detections, ground_truth);
  const int n_images = static_cast<int>(detections.size());
  const int n_classes = static_cast<int>(class_names.size());
  for (const auto& v : detections)
    for (const auto& d : v)
      if (d.class_id < 0 || d.class_id >= n_classes)
        throw std::invalid_argument("detection class id out of range");
  for (const auto& v : ground_truth)
    for (const auto& g : v)
      if (g.class_id < 0 || g.class_id >= n_classes)
        throw std::invalid_argument("ground-truth class id out of range");

  // [image][class][range]
  std::vector<Evaluated> table(static_cast<std::size_t>(n_images) * n_classes * kRanges);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n_images; ++i)
    for (int c = 0; c < n_classes; ++c) {
      const auto dets = class_detections(detections[i], c, options.max_detections_per_image);
      const auto gts = class_boxes(ground_truth[i], c);
      for (int r = 0; r < kRanges; ++r)
        table[(static_cast<std::size_t>(i) * n_classes + c) * kRanges + r] =
            evaluate_image(dets, gts, static_cast<AreaRange>(r));
    }

  EvalReport rep;
  rep.images = n_images;
  for (const auto& v : detections) rep.detections += static_cast<int>(v.size());

  std::array<std::vector<double>, kRanges> range_means;
  std::vector<double> ap_all, ap50_all, ap75_all;
  for (int c = 0; c < n_classes; ++c) {
    ClassAp row;
    row.name = class_names[c];
    for (int r = 0; r < kRanges; ++r) {
      std::vector<const Evaluated*> parts;
      for (int i = 0; i < n_images; ++i)
        parts.push_back(&table[(static_cast<std::size_t>(i) * n_classes + c) * kRanges + r]);
      std::vector<double> per_t;
      for (int t = 0; t < kIouThresholdCount; ++t) {
        const auto q = accumulate(parts, t);
        if (q.empty()) break;
        per_t.push_back(mean(q));
      }
      if (per_t.empty()) {
        if (r == 0) row.ap = row.ap50 = row.ap75 = -1.0;
        continue;
      }
      range_means[r].push_back(mean(per_t));
      if (r == 0) {
        for (const Evaluated* e : parts) row.ground_truths += e->ground_truths;
        row.ap = mean(per_t);
        row.ap50 = per_t[0];
        row.ap75 = per_t[5];
        ap50_all.push_back(row.ap50);
        ap75_all.push_back(row.ap75);
      }
    }
    rep.ground_truths += row.ground_truths;
    rep.per_class.push_back(row);
  }
  rep.classes_evaluated = static_cast<int>(ap50_all.size());
  rep.ap = mean(range_means[0]);
  rep.ap50 = mean(ap50_all);
  rep.ap75 = mean(ap75_all);
  rep.aps = mean(range_means[1]);
  rep.apm = mean(range_means[2]);
  rep.apl = mean(range_means[3]);
  return rep;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{{"AP", r.ap},       {"AP50", r.ap50},
                   {"AP75", r.ap75},   {"APs", r.aps},
                   {"APm", r.apm},     {"APl", r.apl},
                   {"images", r.images}, {"ground_truths", r.ground_truths},
                   {"detections", r.detections}, {"classes_evaluated", r.classes_evaluated}};
  j["per_class"] = nlohmann::json::array();
  for (const auto& c : r.per_class)
    j["per_class"].push_back({{"name", c.name},
                              {"ground_truths", c.ground_truths},
                              {"AP", c.ap},
                              {"AP50", c.ap50},
                              {"AP75", c.ap75}});
  return j;
}

std::string format_table(const EvalReport& r) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-8s %-8s %-8s %-8s %-8s %-8s\n", "AP", "AP50", "AP75", "APs",
                "APm", "APl");
  out += line;
  std::snprintf(line, sizeof line, "%-8.4f %-8.4f %-8.4f %-8.4f %-8.4f %-8.4f\n", r.ap, r.ap50,
                r.ap75, r.aps, r.apm, r.apl);
  out += line;
  out += "\n";
  std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s\n", "class", "gts", "AP", "AP50", "AP75");
  out += line;
  for (const auto& c : r.per_class) {
    if (c.ap < 0.0) {
      std::snprintf(line, sizeof line, "%-24s %8d %8s %8s %8s\n", c.name.c_str(), c.ground_truths,
                    "-", "-", "-");
    } else {
      std::snprintf(line, sizeof line, "%-24s %8d %8.4f %8.4f %8.4f\n", c.name.c_str(),
                    c.ground_truths, c.ap, c.ap50, c.ap75);
    }
    out += line;
  }
  std::snprintf(line, sizeof line, "\nimages %d, ground truths %d, detections %d\n", r.images,
                r.ground_truths, r.detections);
  out += line;
  return out;
}

}  // namespace mdn
