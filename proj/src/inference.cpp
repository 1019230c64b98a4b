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
#include "mdn/inference.hpp"

#include <algorithm>
#include <cstdio>

#include <opencv2/imgproc.hpp>

#include "mdn/anchors.hpp"
#include "mdn/augment.hpp"

namespace mdn {

std::vector<std::vector<Detection>> detect_images(const Detector<float>& model,
                                                  const std::vector<Image>& images,
                                                  const ModelConfig* settings) {
  const ModelConfig& config = model.config();
  const ModelConfig& decode_config = settings ? *settings : config;
  const int size = config.input_size;
  const int n = static_cast<int>(images.size());
  if (n == 0) return {};
  auto batch = make_tensor<float>(n, size, size, 3);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) write_input(make_sample(images[i], {}), size, *batch, i);
  const auto out = model.forward(batch, false, nullptr);
  const AnchorSet anchors = generate_anchors(config, size);
  const std::size_t a = anchors.size();
  const int k = config.num_classes;

  std::vector<std::vector<Detection>> result(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    auto dets = postprocess(out.cls.data() + static_cast<std::size_t>(i) * a * k,
                            out.box.data() + static_cast<std::size_t>(i) * a * 4, anchors, decode_config,
                            size, size);
    const double kx = static_cast<double>(images[i].width) / size;
    const double ky = static_cast<double>(images[i].height) / size;
    for (auto& d : dets) d.box = {d.box.x1 * kx, d.box.y1 * ky, d.box.x2 * kx, d.box.y2 * ky};
    result[i] = std::move(dets);
  }
  return result;
}

std::vector<std::vector<Detection>> detect_dataset(const Detector<float>& model,
                                                   const Dataset& dataset, int batch_size,
                                                   const ModelConfig* settings) {
  std::vector<std::vector<Detection>> all;
  all.reserve(dataset.size());
  const std::size_t step = static_cast<std::size_t>(std::max(batch_size, 1));
  for (std::size_t start = 0; start < dataset.size(); start += step) {
    std::vector<Image> imgs;
    for (std::size_t i = start; i < std::min(dataset.size(), start + step); ++i)
      imgs.push_back(dataset.image(i));
    for (auto& d : detect_images(model, imgs, settings)) all.push_back(std::move(d));
  }
  return all;
}

std::vector<std::vector<LabeledBox>> dataset_ground_truth(const Dataset& dataset) {
  std::vector<std::vector<LabeledBox>> out;
  out.reserve(dataset.size());
  for (const auto& e : dataset.images) out.push_back(e.boxes);
  return out;
}

void draw_detections(Image& image, const std::vector<Detection>& dets,
                     const std::vector<std::string>& names) {
  cv::Mat m(image.height, image.width, CV_8UC3, image.rgb.data());
  for (const auto& d : dets) {
    const cv::Scalar color((d.class_id * 97) % 256, (d.class_id * 57 + 128) % 256,
                           (d.class_id * 151 + 64) % 256);
    const cv::Point p1(static_cast<int>(d.box.x1), static_cast<int>(d.box.y1));
    const cv::Point p2(static_cast<int>(d.box.x2), static_cast<int>(d.box.y2));
    cv::rectangle(m, p1, p2, color, 2);
    char label[128];
    const std::string name = d.class_id < static_cast<int>(names.size())
                                 ? names[d.class_id]
                                 : std::to_string(d.class_id);
    std::snprintf(label, sizeof label, "%s %.2f", name.c_str(), d.score);
    cv::putText(m, label, cv::Point(p1.x, std::max(p1.y - 3, 10)), cv::FONT_HERSHEY_SIMPLEX, 0.4,
                color, 1);
  }
}

nlohmann::json detections_to_json(const std::vector<Detection>& dets,
                                  const std::vector<std::string>& names) {
  auto arr = nlohmann::json::array();
  for (const auto& d : dets)
    arr.push_back({{"bbox", {d.box.x1, d.box.y1, d.box.x2 - d.box.x1, d.box.y2 - d.box.y1}},
                   {"class_id", d.class_id},
                   {"class_name", d.class_id < static_cast<int>(names.size()) ? names[d.class_id] : ""},
                   {"score", d.score}});
  return arr;
}

}  // namespace mdn
