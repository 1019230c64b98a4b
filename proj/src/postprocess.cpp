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
#include "mdn/postprocess.hpp"

#include <algorithm>
#include <cmath>

namespace mdn {

bool detection_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.anchor_index != b.anchor_index) return a.anchor_index < b.anchor_index;
  return a.class_id < b.class_id;
}

template <typename T>
std::vector<Detection> decode_predictions(const T* cls, const T* box, int num_classes,
                                          const AnchorSet& anchors, const DecodeOptions& options) {
  const int fg = num_classes - 1;
  std::vector<Detection> cand;
  std::vector<double> p(num_classes);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const T* z = cls + a * num_classes;
    double m = z[0];
    for (int c = 1; c < num_classes; ++c) m = std::max(m, static_cast<double>(z[c]));
    double s = 0.0;
    for (int c = 0; c < num_classes; ++c) s += (p[c] = std::exp(z[c] - m));
    for (int c = 0; c < fg; ++c) {
      const double score = p[c] / s;
      if (score > options.score_threshold)
        cand.push_back({BoxXYXY{}, c, score, static_cast<int>(a)});
    }
  }
  const std::size_t keep = std::min<std::size_t>(cand.size(), std::max(options.top_k, 0));
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                    detection_before);
  cand.resize(keep);
  for (auto& d : cand) {
    const T* t = box + static_cast<std::size_t>(d.anchor_index) * 4;
    d.box = decode({t[0], t[1], t[2], t[3]}, anchors.boxes[d.anchor_index]);
    if (options.clip_width > 0.0 && options.clip_height > 0.0)
      d.box = d.box.clipped(options.clip_width, options.clip_height);
  }
  return cand;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  std::sort(dets.begin(), dets.end(), detection_before);
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    bool keep = true;
    for (const auto& k : kept)
      if (k.class_id == d.class_id && iou(k.box, d.box) >= iou_threshold) {
        keep = false;
        break;
      }
    if (keep) kept.push_back(d);
  }
  return kept;
}

template <typename T>
std::vector<Detection> postprocess(const T* cls, const T* box, const AnchorSet& anchors,
                                   const ModelConfig& config, double clip_width,
                                   double clip_height) {
  DecodeOptions opt;
  opt.score_threshold = config.score_threshold;
  opt.top_k = config.top_k;
  opt.clip_width = clip_width;
  opt.clip_height = clip_height;
  auto dets = nms(decode_predictions(cls, box, config.num_classes, anchors, opt),
                  config.nms_iou_threshold);
  if (dets.size() > static_cast<std::size_t>(config.max_detections))
    dets.resize(config.max_detections);
  return dets;
}

template std::vector<Detection> decode_predictions<float>(const float*, const float*, int,
                                                          const AnchorSet&, const DecodeOptions&);
template std::vector<Detection> decode_predictions<double>(const double*, const double*, int,
                                                           const AnchorSet&, const DecodeOptions&);
template std::vector<Detection> postprocess<float>(const float*, const float*, const AnchorSet&,
                                                   const ModelConfig&, double, double);
template std::vector<Detection> postprocess<double>(const double*, const double*,
                                                    const AnchorSet&, const ModelConfig&, double,
                                                    double);

}  // namespace mdn
