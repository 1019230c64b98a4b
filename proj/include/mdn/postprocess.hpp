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
#ifndef MDN_POSTPROCESS_HPP_
#define MDN_POSTPROCESS_HPP_

#include <vector>

#include "mdn/anchors.hpp"
#include "mdn/config.hpp"
#include "mdn/geometry.hpp"

namespace mdn {

struct Detection {
  BoxXYXY box;
  int class_id = 0;
  double score = 0.0;
  int anchor_index = -1;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Score-descending order; ties go to the lower anchor index, then the lower
// class id.
bool detection_before(const Detection& a, const Detection& b);

struct DecodeOptions {
  double score_threshold = 0.05;
  int top_k = 200;
  double clip_width = 0.0;   // 0 disables clipping
  double clip_height = 0.0;
};

// One image. cls holds anchors x K logits with background in the last
// column, box holds anchors x 4 offsets. Every (anchor, foreground class)
// pair scoring above the threshold becomes a candidate; the top_k best are
// decoded and clipped.
template <typename T>
std::vector<Detection> decode_predictions(const T* cls, const T* box, int num_classes,
                                          const AnchorSet& anchors, const DecodeOptions& options);

// Greedy per-class suppression. The result is in detection_before order.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

// decode, nms and the max_detections cut, using the config's settings.
template <typename T>
std::vector<Detection> postprocess(const T* cls, const T* box, const AnchorSet& anchors,
                                   const ModelConfig& config, double clip_width,
                                   double clip_height);

}  // namespace mdn

#endif  // MDN_POSTPROCESS_HPP_
