// Copyright 2026 The Tilefuse Authors. All Rights Reserved.
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

#include "tilefuse/fusion.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.h"
#include "tilefuse/error.h"

namespace tilefuse {
namespace {

Detection BoxDet(const BBox& b, double score, int category = 1) {
  Detection d;
  d.bbox = b;
  d.score = score;
  d.category = category;
  return d;
}

// A detection whose mask is the filled rectangle r inside a tile of size w x h.
Detection RectDet(const std::string& tile_id, int w, int h, const Rect& r, double score) {
  BitMask m(w, h);
  for (int y = r.y; y < r.bottom(); ++y)
    for (int x = r.x; x < r.right(); ++x) m.set(x, y);
  return Detection{tile_id, TightBox(r), score, 1, RleEncode(m)};
}

TEST(SoftNmsTest, GaussianDuplicateDecay) {
  const auto out = SoftNms({BoxDet({0, 0, 4, 4}, 0.9), BoxDet({0, 0, 4, 4}, 0.8)}, SoftNmsParams{});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[0].score, 0.9);
  EXPECT_NEAR(out[1].score, 0.8 * std::exp(-2.0), 1e-12);
  EXPECT_NEAR(out[1].score, 0.1083, 1e-4);
}

TEST(SoftNmsTest, LinearDecayAboveThreshold) {
  SoftNmsParams p;
  p.method = SoftNmsMethod::kLinear;
  p.iou_threshold = 0.3;
  // Box IoU 1 / 2.
  const auto out = SoftNms({BoxDet({0, 0, 2, 1}, 0.9), BoxDet({0, 0, 1, 1}, 0.8)}, p);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR(out[1].score, 0.4, 1e-12);

  // IoU 1/7 is below the threshold: untouched.
  const auto low = SoftNms({BoxDet({0, 0, 2, 2}, 0.9), BoxDet({1, 1, 2, 2}, 0.8)}, p);
  EXPECT_DOUBLE_EQ(low[1].score, 0.8);
}

TEST(SoftNmsTest, DisjointBoxesUnchangedAndOrdered) {
  for (auto method : {SoftNmsMethod::kGaussian, SoftNmsMethod::kLinear}) {
    SoftNmsParams p;
    p.method = method;
    const auto out = SoftNms({BoxDet({0, 0, 2, 2}, 0.3), BoxDet({5, 5, 2, 2}, 0.7), BoxDet({9, 0, 1, 1}, 0.3)}, p);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_DOUBLE_EQ(out[0].score, 0.7);
    EXPECT_EQ(out[1].bbox, (BBox{0, 0, 2, 2}));  // tie keeps input order
    EXPECT_EQ(out[2].bbox, (BBox{9, 0, 1, 1}));
  }
}

TEST(SoftNmsTest, FloorDropsAndParamsAreValidated) {
  SoftNmsParams p;
  p.score_floor = 0.2;
  const auto out = SoftNms({BoxDet({0, 0, 4, 4}, 0.9), BoxDet({0, 0, 4, 4}, 0.8)}, p);
  EXPECT_EQ(out.size(), 1u);
  p.sigma = 0;
  EXPECT_THROW(SoftNms({}, p), InvalidArgument);
  p = SoftNmsParams{};
  p.score_floor = 2;
  EXPECT_THROW(SoftNms({}, p), InvalidArgument);
}

TEST(SoftNmsTest, HighestScoreAlwaysSurvivesFirst) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(0, 50), ext(1, 30), score(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Detection> dets;
    double best = -1;
    for (int i = 0; i < 12; ++i) {
      dets.push_back(BoxDet({pos(rng), pos(rng), ext(rng), ext(rng)}, score(rng)));
      best = std::max(best, dets.back().score);
    }
    SoftNmsParams p;
    p.score_floor = 0;
    p.method = trial % 2 ? SoftNmsMethod::kLinear : SoftNmsMethod::kGaussian;
    const auto out = SoftNms(dets, p);
    ASSERT_EQ(out.size(), dets.size());
    EXPECT_DOUBLE_EQ(out[0].score, best);
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_GE(out[i - 1].score, out[i].score);
  }
}

TEST(FilterTest, HalfOpenTarget) {
  const Rect target{2, 2, 1280, 1280};
  const auto kept = FilterByTargetArea(
      {BoxDet({1.0, 500.0, 5, 5}, 1), BoxDet({2.0, 2.0, 5, 5}, 1), BoxDet({1281.9, 1282.0, 5, 5}, 1),
       BoxDet({1281.9, 1281.9, 5, 5}, 1)},
      target);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].bbox.x, 2.0);
  EXPECT_EQ(kept[1].bbox.y, 1281.9);
}

TEST(TranslateTest, MovesBoxAndMask) {
  Tile tile;
  tile.tile_id = "t";
  tile.origin_x = 1280;
  tile.origin_y = 0;
  tile.width = 100;
  tile.height = 80;
  BitMask m(100, 80);
  m.set(5, 7);
  for (int y = 10; y < 50; ++y)
    for (int x = 2; x < 52; ++x) m.set(x, y);
  const Detection det{"t", BBox{2, 10, 50, 40}, 0.6, 4, RleEncode(m)};
  const GlobalInstance g = TranslateToGlobal(det, tile);
  EXPECT_EQ(g.bbox, (BBox{1282, 10, 50, 40}));
  EXPECT_EQ(g.score, 0.6);
  EXPECT_EQ(g.category, 4);
  EXPECT_EQ(g.mask.Area(), m.Count());
  const RunList runs = g.Runs();
  EXPECT_EQ(runs.front(), (ColumnRun{1282, 10, 50}));
  EXPECT_NE(std::find(runs.begin(), runs.end(), ColumnRun{1285, 7, 8}), runs.end());
  EXPECT_EQ(g.FrameRect(), (Rect{1282, 7, 50, 43}));
}

class FuseTest : public ::testing::Test {
 protected:
  // Two 30x20 tiles with a 10 px overlap and margin 2.
  TileGrid grid_ = ComputeTileGrid(50, 20, GridParams{30, 20, 2}, "img");
};

TEST_F(FuseTest, ObjectInOverlapSurvivesOnce) {
  ASSERT_EQ(grid_.tiles.size(), 2u);
  ASSERT_EQ(grid_.tiles[0].GlobalTarget(), (Rect{0, 0, 22, 20}));
  // Global object at x 23..27, inside both tiles.
  DetectionMap dets;
  dets["img_r000_c000"].push_back(RectDet("img_r000_c000", 30, 20, Rect{23, 4, 5, 5}, 0.9));
  dets["img_r000_c001"].push_back(RectDet("img_r000_c001", 30, 20, Rect{3, 4, 5, 5}, 0.8));
  const InstanceSet fused = Fuse(dets, grid_);
  ASSERT_EQ(fused.instances.size(), 1u);
  EXPECT_EQ(fused.instances[0].instance_id, 1);
  EXPECT_DOUBLE_EQ(fused.instances[0].score, 0.8);
  EXPECT_EQ(fused.instances[0].bbox, (BBox{23, 4, 5, 5}));

  FuseOptions naive;
  naive.apply_target_filter = false;
  EXPECT_EQ(Fuse(dets, grid_, naive).instances.size(), 2u);
}

TEST_F(FuseTest, EmptyAndUnknown) {
  const InstanceSet empty = Fuse({}, grid_);
  EXPECT_TRUE(empty.instances.empty());
  EXPECT_EQ(empty.width, 50);
  EXPECT_EQ(empty.image_id, "img");
  DetectionMap bad;
  bad["nope"] = {};
  EXPECT_THROW(Fuse(bad, grid_), InvalidArgument);
}

TEST_F(FuseTest, IdsFollowTileOrderAndThreadsAgree) {
  DetectionMap dets;
  dets["img_r000_c001"].push_back(RectDet("img_r000_c001", 30, 20, Rect{10, 1, 3, 3}, 0.5));
  dets["img_r000_c000"].push_back(RectDet("img_r000_c000", 30, 20, Rect{1, 1, 3, 3}, 0.4));
  dets["img_r000_c000"].push_back(RectDet("img_r000_c000", 30, 20, Rect{1, 10, 3, 3}, 0.7));
  FuseOptions opts;
  opts.nms = SoftNmsParams{};
  const InstanceSet one = Fuse(dets, grid_, opts);
  ASSERT_EQ(one.instances.size(), 3u);
  EXPECT_DOUBLE_EQ(one.instances[0].score, 0.7);
  EXPECT_DOUBLE_EQ(one.instances[1].score, 0.4);
  EXPECT_EQ(one.instances[2].bbox.x, 30);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(one.instances[i].instance_id, i + 1);
  opts.threads = 4;
  const InstanceSet four = Fuse(dets, grid_, opts);
  ASSERT_EQ(four.instances.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(four.instances[i].bbox, one.instances[i].bbox);
    EXPECT_EQ(four.instances[i].mask, one.instances[i].mask);
  }
}

TEST(FuseProperty, RetainedCornersAreUnique) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    GridParams p;
    p.window = std::uniform_int_distribution<int>(8, 64)(rng);
    p.stride = std::uniform_int_distribution<int>(1, p.window)(rng);
    p.margin = std::uniform_int_distribution<int>(0, p.window - p.stride)(rng);
    const int w = std::uniform_int_distribution<int>(1, 150)(rng);
    const int h = std::uniform_int_distribution<int>(1, 150)(rng);
    const TileGrid grid = ComputeTileGrid(w, h, p, "g");
    // Every tile reports a 1x1 detection at every pixel it sees.
    DetectionMap dets;
    for (const Tile& t : grid.tiles) {
      auto& v = dets[t.tile_id];
      for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x) v.push_back(RectDet(t.tile_id, t.width, t.height, Rect{x, y, 1, 1}, 1));
    }
    const InstanceSet fused = Fuse(dets, grid);
    ASSERT_EQ(fused.instances.size(), static_cast<std::size_t>(w) * h);
    std::set<std::pair<double, double>> corners;
    for (const auto& inst : fused.instances) corners.insert({inst.bbox.x, inst.bbox.y});
    EXPECT_EQ(corners.size(), fused.instances.size());
  }
}

TEST(LabelMapTest, SingleDisjointAndOverlap) {
  InstanceSet set{"img", 20, 10, {testing::RectInstance(1, 0.5, Rect{1, 1, 4, 3})}};
  LabelMap map = RenderLabelMap(set);
  int ones = 0;
  for (auto v : map.labels) ones += v == 1;
  EXPECT_EQ(ones, 12);
  EXPECT_EQ(map.at(1, 1), 1u);
  EXPECT_EQ(map.at(0, 0), 0u);

  set.instances.push_back(testing::RectInstance(2, 0.9, Rect{10, 2, 5, 5}));
  map = RenderLabelMap(set, 3);
  std::uint64_t counts[3] = {0, 0, 0};
  for (auto v : map.labels) counts[v]++;
  EXPECT_EQ(counts[1], 12u);
  EXPECT_EQ(counts[2], 25u);

  // Overlap: the 0.9 instance wins regardless of id or order.
  InstanceSet overlap{"img", 20, 10,
                      {testing::RectInstance(1, 0.9, Rect{0, 0, 6, 6}), testing::RectInstance(2, 0.5, Rect{3, 3, 6, 6})}};
  map = RenderLabelMap(overlap, 2);
  EXPECT_EQ(map.at(4, 4), 1u);
  EXPECT_EQ(map.at(7, 7), 2u);
  std::uint64_t fg = 0;
  for (auto v : map.labels) fg += v != 0;
  EXPECT_LT(fg, 72u);
  EXPECT_EQ(fg, 36u + 36u - 9u);

  const RasterImage raster = LabelMapToRaster(map);
  EXPECT_EQ(raster.bit_depth(), 16);
  EXPECT_EQ(raster.at(7, 7, 0), 2);
}

TEST(LabelMapTest, ThreadCountDoesNotMatter) {
  std::mt19937_64 rng(2);
  InstanceSet set{"img", 97, 61, {}};
  std::uniform_int_distribution<int> px(0, 80), py(0, 45), ext(1, 16);
  std::uniform_real_distribution<double> sc(0, 1);
  for (int i = 1; i <= 40; ++i) set.instances.push_back(testing::RectInstance(i, sc(rng), Rect{px(rng), py(rng), ext(rng), ext(rng)}));
  EXPECT_EQ(RenderLabelMap(set, 1).labels, RenderLabelMap(set, 5).labels);
}

}  // namespace
}  // namespace tilefuse
