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
#ifndef MDN_INFERENCE_HPP_
#define MDN_INFERENCE_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "mdn/datasets.hpp"
#include "mdn/model.hpp"
#include "mdn/postprocess.hpp"

namespace mdn {

// Detections in the pixel frame of each source image. Images are resized to
// the model's input size without letterboxing. Decoding thresholds come from
// settings when given, else from the model's config.
std::vector<std::vector<Detection>> detect_images(const Detector<float>& model,
                                                  const std::vector<Image>& images,
                                                  const ModelConfig* settings = nullptr);

// Runs every image of a dataset through the detector, batch_size at a time.
std::vector<std::vector<Detection>> detect_dataset(const Detector<float>& model,
                                                   const Dataset& dataset, int batch_size = 8,
                                                   const ModelConfig* settings = nullptr);

// Ground truth of every image, crowd regions included.
std::vector<std::vector<LabeledBox>> dataset_ground_truth(const Dataset& dataset);

// Boxes and "name score" labels burned into the image.
void draw_detections(Image& image, const std::vector<Detection>& dets,
                     const std::vector<std::string>& class_names);

nlohmann::json detections_to_json(const std::vector<Detection>& dets,
                                  const std::vector<std::string>& class_names);

}  // namespace mdn

#endif  // MDN_INFERENCE_HPP_
