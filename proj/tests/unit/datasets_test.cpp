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

#include <filesystem>
#include <fstream>
#include <map>

#include "mdn/datasets.hpp"
#include "test_util.hpp"

namespace mdn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kFixture = MDN_FIXTURE_DIR "/coco_small.json";
const std::string kImages = MDN_FIXTURE_DIR "/images";

TEST(Coco, FixtureLoadsExactly) {
  const Dataset ds = load_coco(kFixture, kImages);
  EXPECT_EQ(ds.categories, (std::vector<std::string>{"person", "cat", "dog"}));
  EXPECT_EQ(ds.category_ids, (std::vector<std::int64_t>{1, 3, 7}));
  ASSERT_EQ(ds.size(), 5u);
  EXPECT_EQ(ds.dropped_zero_area, 1);

  const std::vector<std::vector<LabeledBox>> want = {
      {{{10, 20, 40, 40}, 0, false}, {{0, 0, 8, 8}, 2, false}},
      {{{50, 30, 80, 60}, 1, false}, {{5, 5, 25, 15}, 0, true}},
      {},
      {{{2.5, 3.5, 12.5, 15.5}, 1, false}, {{90, 30, 100, 40}, 2, false}},
      {}};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(ds.images[i].boxes, want[i]) << "image " << i;
  EXPECT_EQ(ds.images[1].width, 80);
  EXPECT_EQ(ds.images[1].id, 11);
  EXPECT_EQ(training_boxes(ds.images[1]).size(), 1u);
}

TEST(Coco, FixtureImagesDecode) {
  const Dataset ds = load_coco(kFixture, kImages);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Image img = ds.image(i);
    EXPECT_EQ(img.width, ds.images[i].width);
    EXPECT_EQ(img.height, ds.images[i].height);
  }
}

json minimal_doc() {
  return {{"images", {{{"id", 1}, {"file_name", "a.png"}, {"width", 100}, {"height", 100}}}},
          {"annotations",
           {{{"id", 1}, {"image_id", 1}, {"category_id", 4}, {"bbox", {10, 20, 30, 40}}}}},
          {"categories", {{{"id", 4}, {"name", "thing"}}}}};
}

TEST(Coco, XywhBecomesCorners) {
  const Dataset ds = coco_from_json(minimal_doc(), ".");
  EXPECT_EQ(ds.images[0].boxes[0].box, (BoxXYXY{10, 20, 40, 60}));
  EXPECT_EQ(ds.images[0].boxes[0].class_id, 0);
}

TEST(Coco, EmptyAnnotationsGiveBackgroundImages) {
  json doc = minimal_doc();
  doc["annotations"] = json::array();
  const Dataset ds = coco_from_json(doc, ".");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_TRUE(ds.images[0].boxes.empty());
}

TEST(Coco, DuplicateCategoryIdIsAnError) {
  json doc = minimal_doc();
  doc["categories"].push_back({{"id", 4}, {"name", "again"}});
  EXPECT_THROW(coco_from_json(doc, "."), DatasetError);
}

TEST(Coco, UnknownCategoryOrImageIsAnError) {
  json doc = minimal_doc();
  doc["annotations"][0]["category_id"] = 99;
  EXPECT_THROW(coco_from_json(doc, "."), DatasetError);
  doc = minimal_doc();
  doc["annotations"][0]["image_id"] = 99;
  EXPECT_THROW(coco_from_json(doc, "."), DatasetError);
}

TEST(Coco, MissingImagesAreAllListed) {
  testing::TempDir dir;
  json doc = minimal_doc();
  doc["images"].push_back({{"id", 2}, {"file_name", "b.png"}, {"width", 10}, {"height", 10}});
  std::ofstream(dir / "ann.json") << doc.dump();
  try {
    load_coco(dir / "ann.json", dir.path().string());
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("a.png"), std::string::npos);
    EXPECT_NE(msg.find("b.png"), std::string::npos);
  }
  EXPECT_NO_THROW(load_coco(dir / "ann.json", dir.path().string(), false));
}

TEST(Coco, MalformedJsonReportsByteOffset) {
  testing::TempDir dir;
  std::ofstream(dir / "bad.json") << "{\"images\": [1, 2,, 3]}";
  try {
    load_coco(dir / "bad.json", ".");
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("byte 18"), std::string::npos) << e.what();
  }
}

TEST(Coco, ExportRoundTrip) {
  testing::TempDir dir;
  const Dataset ds = load_coco(kFixture, kImages);
  save_coco(ds, dir / "out.json");
  const Dataset back = load_coco(dir / "out.json", kImages);
  EXPECT_EQ(back.categories, ds.categories);
  EXPECT_EQ(back.category_ids, ds.category_ids);
  EXPECT_EQ(back.images, ds.images);
  EXPECT_FALSE(fs::exists(dir / "out.json.partial"));
}

TEST(Synth, DeterministicForASeed) {
  const Dataset a = synth_shapes(7, 12, 128), b = synth_shapes(7, 12, 128);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.pixels, b.pixels);
  const Dataset c = synth_shapes(8, 12, 128);
  EXPECT_NE(a.pixels, c.pixels);
}

TEST(Synth, PrefixIsStableAcrossCounts) {
  const Dataset a = synth_shapes(7, 5, 96), b = synth_shapes(7, 9, 96);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a.images[i], b.images[i]);
    EXPECT_EQ(a.pixels[i], b.pixels[i]);
  }
}

TEST(Synth, StructuralInvariants) {
  const Dataset ds = synth_shapes(3, 300, 320);
  EXPECT_EQ(ds.categories, kShapeClasses);
  for (const auto& e : ds.images) {
    EXPECT_GE(e.boxes.size(), 1u);
    EXPECT_LE(e.boxes.size(), 5u);
    for (std::size_t i = 0; i < e.boxes.size(); ++i) {
      const auto& b = e.boxes[i].box;
      EXPECT_TRUE(b.valid());
      EXPECT_GE(b.x1, 0);
      EXPECT_LE(b.x2, 320);
      EXPECT_LT(e.boxes[i].class_id, 3);
      for (std::size_t j = i + 1; j < e.boxes.size(); ++j) EXPECT_LT(iou(b, e.boxes[j].box), 0.3);
    }
  }
}

TEST(Synth, SizeBucketCensus) {
  const Dataset ds = synth_shapes(2024, 1000, 320);
  std::array<int, 3> buckets{};
  int total = 0;
  for (const auto& e : ds.images)
    for (const auto& b : e.boxes) {
      const double a = b.box.area();
      ++buckets[a < 32.0 * 32 ? 0 : a < 96.0 * 96 ? 1 : 2];
      ++total;
    }
  for (int v : buckets) EXPECT_GE(v, total / 10) << v << " of " << total;
}

// Recovers each shape from pixels alone: the most frequent color inside the
// box is the fill, and its extent within a small margin must equal the box.
TEST(Synth, BoxesTightlyContainShapePixels) {
  const Dataset ds = synth_shapes(5, 60, 320);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Image& img = ds.pixels[i];
    for (const auto& lb : ds.images[i].boxes) {
      const auto& b = lb.box;
      std::map<std::array<int, 3>, int> counts;
      for (int y = int(b.y1); y < int(b.y2); ++y)
        for (int x = int(b.x1); x < int(b.x2); ++x) {
          const auto* p = img.pixel(x, y);
          ++counts[{p[0], p[1], p[2]}];
        }
      const auto fill =
          std::max_element(counts.begin(), counts.end(),
                           [](const auto& a, const auto& c) { return a.second < c.second; })
              ->first;
      int x1 = 1 << 20, y1 = 1 << 20, x2 = -1, y2 = -1;
      const int m = 2;
      for (int y = std::max(0, int(b.y1) - m); y < std::min(img.height, int(b.y2) + m); ++y)
        for (int x = std::max(0, int(b.x1) - m); x < std::min(img.width, int(b.x2) + m); ++x) {
          const auto* p = img.pixel(x, y);
          if (p[0] == fill[0] && p[1] == fill[1] && p[2] == fill[2]) {
            x1 = std::min(x1, x);
            y1 = std::min(y1, y);
            x2 = std::max(x2, x + 1);
            y2 = std::max(y2, y + 1);
          }
        }
      EXPECT_NEAR(x1, b.x1, 1) << "image " << i;
      EXPECT_NEAR(y1, b.y1, 1) << "image " << i;
      EXPECT_NEAR(x2, b.x2, 1) << "image " << i;
      EXPECT_NEAR(y2, b.y2, 1) << "image " << i;
    }
  }
}

TEST(Synth, MaskExtentIsTheFrame) {
  for (int cls = 0; cls < 3; ++cls)
    for (int w : {16, 17, 40, 161})
      for (int h : {16, 33, 90}) {
        const BoxXYXY frame{5, 7, 5.0 + w, 7.0 + h};
        const auto mask = render_shape_mask(cls, frame, 200, 120);
        int x1 = 999, y1 = 999, x2 = -1, y2 = -1;
        for (int y = 0; y < 120; ++y)
          for (int x = 0; x < 200; ++x)
            if (mask[y * 200 + x]) {
              x1 = std::min(x1, x), y1 = std::min(y1, y);
              x2 = std::max(x2, x + 1), y2 = std::max(y2, y + 1);
            }
        EXPECT_EQ(x1, 5);
        EXPECT_EQ(y1, 7);
        EXPECT_NEAR(x2, frame.x2, 1);
        EXPECT_NEAR(y2, frame.y2, 1);
      }
}

TEST(Synth, MaterializeWritesReadableImages) {
  testing::TempDir dir;
  Dataset ds = synth_shapes(9, 3, 64);
  const auto pixels = ds.pixels;
  materialize_images(ds, dir.path().string());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(read_image(ds.image_path(i)), pixels[i]);
}

TEST(Image, PngRoundTrip) {
  testing::TempDir dir;
  Image img;
  img.width = 5;
  img.height = 3;
  for (int i = 0; i < 45; ++i) img.rgb.push_back(static_cast<std::uint8_t>(i * 5));
  write_image(dir / "x.png", img);
  EXPECT_EQ(read_image(dir / "x.png"), img);
  EXPECT_THROW(read_image(dir / "missing.png"), DatasetError);
}

}  // namespace
}  // namespace mdn
