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
#include "mdn/geometry.hpp"

namespace mdn {

BoxXYXY BoxXYXY::clipped(double width_limit, double height_limit) const {
  return {std::clamp(x1, 0.0, width_limit), std::clamp(y1, 0.0, height_limit),
          std::clamp(x2, 0.0, width_limit), std::clamp(y2, 0.0, height_limit)};
}

double intersection_area(const BoxXYXY& a, const BoxXYXY& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BoxXYXY& a, const BoxXYXY& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double enclosing_diagonal_sq(const BoxXYXY& a, const BoxXYXY& b) {
  const double w = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double h = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  return w * w + h * h;
}

double center_distance_sq(const BoxXYXY& a, const BoxXYXY& b) {
  const double dx = a.center_x() - b.center_x();
  const double dy = a.center_y() - b.center_y();
  return dx * dx + dy * dy;
}

}  // namespace mdn
