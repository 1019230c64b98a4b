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
#ifndef MDN_GEOMETRY_HPP_
#define MDN_GEOMETRY_HPP_

#include <algorithm>

namespace mdn {

// Axis-aligned box in corner form. Coordinates are pixels unless a caller
// says otherwise.
struct BoxXYXY {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }
  bool valid() const { return x1 <= x2 && y1 <= y2; }

  static BoxXYXY from_center(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  }
  static BoxXYXY from_xywh(double x, double y, double w, double h) {
    return {x, y, x + w, y + h};
  }

  BoxXYXY translated(double dx, double dy) const {
    return {x1 + dx, y1 + dy, x2 + dx, y2 + dy};
  }
  BoxXYXY clipped(double width_limit, double height_limit) const;

  friend bool operator==(const BoxXYXY&, const BoxXYXY&) = default;
};

// Ground-truth annotation unit. class_id indexes the dense category table
// of the active dataset.
struct LabeledBox {
  BoxXYXY box;
  int class_id = 0;
  bool crowd = false;

  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

double intersection_area(const BoxXYXY& a, const BoxXYXY& b);

// Intersection over union; 0 when the union is empty.
double iou(const BoxXYXY& a, const BoxXYXY& b);

// Squared diagonal of the smallest axis-aligned box covering both inputs.
double enclosing_diagonal_sq(const BoxXYXY& a, const BoxXYXY& b);

// Squared distance between box centers.
double center_distance_sq(const BoxXYXY& a, const BoxXYXY& b);

}  // namespace mdn

#endif  // MDN_GEOMETRY_HPP_
