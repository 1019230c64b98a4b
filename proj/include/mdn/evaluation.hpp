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
#ifndef MDN_EVALUATION_HPP_
#define MDN_EVALUATION_HPP_

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdn/geometry.hpp"
#include "mdn/postprocess.hpp"

namespace mdn {

inline constexpr int kIouThresholdCount = 10;     // 0.50, 0.55, ..., 0.95
inline constexpr int kRecallPoints = 101;
inline constexpr double kSmallAreaLimit = 32.0 * 32.0;
inline constexpr double kMediumAreaLimit = 96.0 * 96.0;

double iou_threshold_at(int index);

enum class AreaRange { kAll, kSmall, kMedium, kLarge };

struct ClassAp {
  std::string name;
  int ground_truths = 0;  // non-crowd
  double ap = 0.0;        // -1 when the class has no ground truth
  double ap50 = 0.0;
  double ap75 = 0.0;
};

struct EvalReport {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double aps = 0.0;
  double apm = 0.0;
  double apl = 0.0;
  std::vector<ClassAp> per_class;
  int images = 0;
  int ground_truths = 0;
  int detections = 0;
  int classes_evaluated = 0;
};

struct EvalOptions {
  int max_detections_per_image = 100;
};

// COCO-style average precision. Per image and class, detections are matched
// greedily in score order to the best unmatched box at each IoU threshold;
// crowd boxes and boxes outside the area range are ignore regions. Precision
// is integrated at 101 recall points, averaged over classes that have ground
// truth and, for AP, over the ten thresholds.
EvalReport evaluate_ap(const std::vector<std::vector<Detection>>& detections,
                       const std::vector<std::vector<LabeledBox>>& ground_truth,
                       const std::vector<std::string>& class_names,
                       const EvalOptions& options = {});

// Precision at the 101 recall points for one class, one threshold and one
// area range; empty when the class has no non-ignored ground truth there.
std::vector<double> precision_curve(const std::vector<std::vector<Detection>>& detections,
                                    const std::vector<std::vector<LabeledBox>>& ground_truth,
                                    int class_id, int threshold_index, AreaRange range,
                                    const EvalOptions& options = {});

nlohmann::json to_json(const EvalReport& report);
std::string format_table(const EvalReport& report);

}  // namespace mdn

#endif  // MDN_EVALUATION_HPP_
