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

#include "tilefuse/tiling.h"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <random>
#include <set>

#include "oracles.h"
#include "tilefuse/annotation_io.h"
#include "tilefuse/error.h"

namespace tilefuse {
namespace {

namespace fs = std::filesystem;

// Brute-force owner count per coordinate: every position must be claimed by
// exactly one tile's global target interval.
void ExpectAxisPartition(int length, const GridParams& p) {
  const int n = AxisTileCount(length, p);
  std::vector<int> owners(length, 0);
  for (int k = 0; k < n; ++k) {
    const int origin = k * p.stride;
    const int size = std::min(p.window, length - origin);
    ASSERT_GE(size, 1);
    const Interval t = ComputeTargetArea(k, n, size, p);
    ASSERT_LE(0, t.begin);
    ASSERT_LE(t.end, size);
    for (int i = origin + t.begin; i < origin + t.end; ++i) owners[i]++;
  }
  for (int i = 0; i < length; ++i) ASSERT_EQ(owners[i], 1) << "L=" << length << " pos " << i;
}

TEST(GridTest, DefaultGridOnFiveThousandPixels) {
  const GridParams p{1536, 1280, 2};
  EXPECT_EQ(AxisTileCount(5000, p), 4);
  const TileGrid g = ComputeTileGrid(5000, 5000, p, "img");
  ASSERT_EQ(g.tiles.size(), 16u);
  const int origins[] = {0, 1280, 2560, 3840};
  for (int c = 0; c < 4; ++c) EXPECT_EQ(g.tiles[c].origin_x, origins[c]);
  EXPECT_EQ(g.tiles[3].width, 1160);
  EXPECT_EQ(g.tiles[0].width, 1536);
  EXPECT_EQ(g.tiles[15].height, 1160);
  EXPECT_EQ(g.tiles[1].tile_id, "img_r000_c001");
  EXPECT_EQ(g.tiles[4].row, 1);
  EXPECT_EQ(g.tiles[4].col, 0);
}

TEST(GridTest, ExactAndUndersizedTiling) {
  const GridParams exact{512, 512, 0};
  EXPECT_EQ(AxisTileCount(1024, exact), 2);
  const TileGrid g = ComputeTileGrid(1024, 400, exact);
  ASSERT_EQ(g.tiles.size(), 2u);
  EXPECT_EQ(g.tiles[1].origin_x, 512);
  EXPECT_EQ(g.tiles[1].width, 512);
  EXPECT_EQ(g.tiles[0].height, 400);
  EXPECT_EQ(g.tiles[0].target, (Rect{0, 0, 512, 400}));
}

TEST(GridTest, InvalidParams) {
  EXPECT_THROW(ComputeTileGrid(100, 100, GridParams{10, 11, 0}), InvalidArgument);
  EXPECT_THROW(ComputeTileGrid(100, 100, GridParams{10, 8, 3}), InvalidArgument);
  EXPECT_THROW(ComputeTileGrid(100, 100, GridParams{10, 0, 0}), InvalidArgument);
  EXPECT_THROW(ComputeTileGrid(0, 100, GridParams{10, 8, 2}), InvalidArgument);
}

TEST(TargetAreaTest, DefaultMarginIntervals) {
  const GridParams p{1536, 1280, 2};
  EXPECT_EQ(ComputeTargetArea(1, 4, 1536, p), (Interval{2, 1282}));
  EXPECT_EQ(ComputeTargetArea(0, 4, 1536, p), (Interval{0, 1282}));
  EXPECT_EQ(ComputeTargetArea(3, 4, 1160, p), (Interval{2, 1160}));
  EXPECT_EQ(ComputeTargetArea(0, 1, 700, p), (Interval{0, 700}));

  const TileGrid g = ComputeTileGrid(5000, 10, p);
  const Interval expected[] = {{0, 1282}, {1282, 2562}, {2562, 3842}, {3842, 5000}};
  for (int k = 0; k < 4; ++k) {
    const Rect t = g.tiles[k].GlobalTarget();
    EXPECT_EQ(t.x, expected[k].begin);
    EXPECT_EQ(t.right(), expected[k].end);
  }
  ExpectAxisPartition(5000, p);
}

TEST(TargetAreaTest, RandomizedPartitionAndCoverage) {
  std::mt19937_64 rng(2021);
  for (int trial = 0; trial < 300; ++trial) {
    GridParams p;
    p.window = std::uniform_int_distribution<int>(1, 300)(rng);
    p.stride = std::uniform_int_distribution<int>(1, p.window)(rng);
    p.margin = std::uniform_int_distribution<int>(0, p.window - p.stride)(rng);
    const int length = std::uniform_int_distribution<int>(1, 3000)(rng);
    ExpectAxisPartition(length, p);

    const int n = AxisTileCount(length, p);
    std::vector<char> covered(length, 0);
    for (int k = 0; k < n; ++k) {
      const int origin = k * p.stride;
      const int size = std::min(p.window, length - origin);
      for (int i = origin; i < origin + size; ++i) covered[i] = 1;
      if (n > 1 && k == n - 1) EXPECT_GT(size, p.window - p.stride);
    }
    EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](char c) { return c; }));
  }
}

TEST(TargetAreaTest, TwoDimensionalTargetsPartitionTheImage) {
  const GridParams p{20, 13, 3};
  const TileGrid g = ComputeTileGrid(57, 44, p);
  std::vector<int> owners(57 * 44, 0);
  for (const Tile& t : g.tiles) {
    const Rect r = t.GlobalTarget();
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x) owners[y * 57 + x]++;
  }
  EXPECT_TRUE(std::all_of(owners.begin(), owners.end(), [](int c) { return c == 1; }));
}

RasterImage Gradient(int w, int h, int bands) {
  RasterImage img(w, h, bands, 16);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int b = 0; b < bands; ++b) img.set(x, y, b, static_cast<std::uint16_t>(x * 7 + y * 131 + b * 10000));
  return img;
}

TEST(ExtractTileTest, CropsAreExact) {
  const RasterImage img = Gradient(90, 70, 3);
  const TileGrid single = ComputeTileGrid(90, 70, GridParams{100, 100, 0});
  EXPECT_EQ(ExtractTile(img, single.tiles[0]), img);

  const TileGrid g = ComputeTileGrid(90, 70, GridParams{32, 24, 2});
  for (const Tile& t : g.tiles) {
    const RasterImage crop = ExtractTile(img, t);
    ASSERT_EQ(crop.width(), t.width);
    ASSERT_EQ(crop.height(), t.height);
    for (int y = 0; y < t.height; ++y)
      for (int x = 0; x < t.width; ++x)
        for (int b = 0; b < 3; ++b) ASSERT_EQ(crop.at(x, y, b), img.at(t.origin_x + x, t.origin_y + y, b));
  }
  // Crop of crop equals crop of the composed rectangle.
  const RasterImage outer = CropRaster(img, Rect{10, 5, 40, 30});
  EXPECT_EQ(CropRaster(outer, Rect{3, 5, 20, 11}), CropRaster(img, Rect{13, 10, 20, 11}));
}

TEST(ExtractTileTest, RightBorderTileOnFiveThousandWideImage) {
  const RasterImage img(5000, 3, 1, 8);
  const TileGrid g = ComputeTileGrid(5000, 3, GridParams{1536, 1280, 2});
  EXPECT_EQ(ExtractTile(img, g.tiles.back()).width(), 1160);
  Tile bad = g.tiles.back();
  bad.width = 1200;
  EXPECT_THROW(ExtractTile(img, bad), InvalidArgument);
}

TEST(ManifestTest, JsonRoundTrip) {
  const TileGrid g = ComputeTileGrid(5000, 3000, GridParams{1536, 1280, 2}, "scene_a");
  const TileGrid back = ManifestFromJson(nlohmann::json::parse(ManifestToJson(g).dump()));
  EXPECT_EQ(back, g);
  auto j = ManifestToJson(g);
  j["tiles"][0]["w"] = 99999;
  EXPECT_THROW(ManifestFromJson(nlohmann::json::parse(j.dump())), FormatError);
}

class ExportTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tilefuse_export_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ExportTest, EmptyTilesAreSkippedUnlessKept) {
  RasterImage img(40, 20, 3, 8);
  InstanceSet gt{"img", 40, 20, {testing::RectInstance(1, 1.0, Rect{2, 3, 5, 4})}};
  const TileGrid grid = ComputeTileGrid(40, 20, GridParams{20, 20, 0}, "img");
  ASSERT_EQ(grid.tiles.size(), 2u);

  ExportOptions opts;
  opts.keep_empty = false;
  const TileGrid kept = ExportDataset(img, grid, &gt, dir_ / "a", opts);
  ASSERT_EQ(kept.tiles.size(), 1u);
  EXPECT_EQ(kept.tiles[0].tile_id, "img_r000_c000");
  EXPECT_TRUE(fs::exists(dir_ / "a" / "img_r000_c000.png"));
  EXPECT_FALSE(fs::exists(dir_ / "a" / "img_r000_c001.png"));
  EXPECT_EQ(ReadManifest(dir_ / "a" / "tiles.json"), kept);

  opts.keep_empty = true;
  const TileGrid all = ExportDataset(img, grid, &gt, dir_ / "b", opts);
  EXPECT_EQ(all.tiles.size(), grid.tiles.size());
}

TEST_F(ExportTest, GroundTruthIsClippedIntoTileFrames) {
  RasterImage img(40, 20, 1, 16);
  img.set(25, 7, 0, 4242);
  // Straddles the two 20x20 tiles.
  InstanceSet gt{"img", 40, 20, {testing::RectInstance(1, 1.0, Rect{15, 5, 10, 6})}};
  const TileGrid grid = ComputeTileGrid(40, 20, GridParams{20, 20, 0}, "img");
  ExportOptions opts;
  opts.threads = 2;
  ExportDataset(img, grid, &gt, dir_, opts);

  const RasterImage right = LoadRaster(dir_ / "img_r000_c001.bsq");
  EXPECT_EQ(right.at(5, 7, 0), 4242);
  const auto left = ReadInstanceSets(dir_ / "img_r000_c000.gt.jsonl");
  const auto rgt = ReadInstanceSets(dir_ / "img_r000_c001.gt.jsonl");
  ASSERT_EQ(left.at(0).instances.size(), 1u);
  ASSERT_EQ(rgt.at(0).instances.size(), 1u);
  EXPECT_EQ(left[0].instances[0].bbox, (BBox{15, 5, 5, 6}));
  EXPECT_EQ(rgt[0].instances[0].bbox, (BBox{0, 5, 5, 6}));
  EXPECT_EQ(rgt[0].instances[0].mask.Area(), 30u);
}

TEST(SplitTest, FiveToOne) {
  std::vector<std::string> ids;
  for (int i = 0; i < 3744; ++i) ids.push_back("t" + std::to_string(i));
  const auto [train, val] = SplitDataset(ids, 5, 1, 42);
  EXPECT_EQ(train.size(), 3120u);
  EXPECT_EQ(val.size(), 624u);
  std::set<std::string> all(train.begin(), train.end());
  all.insert(val.begin(), val.end());
  EXPECT_EQ(all.size(), 3744u);

  const auto [t6, v6] = SplitDataset({"a", "b", "c", "d", "e", "f"}, 5, 1, 1);
  EXPECT_EQ(t6.size(), 5u);
  EXPECT_EQ(v6.size(), 1u);
}

TEST(SplitTest, DeterministicPerSeed) {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back(std::to_string(i));
  EXPECT_EQ(SplitDataset(ids, 5, 1, 9), SplitDataset(ids, 5, 1, 9));
  EXPECT_NE(SplitDataset(ids, 5, 1, 9).first, SplitDataset(ids, 5, 1, 10).first);
  EXPECT_THROW(SplitDataset({}, 5, 1, 0), InvalidArgument);
  EXPECT_THROW(SplitDataset(ids, 0, 1, 0), InvalidArgument);
}

}  // namespace
}  // namespace tilefuse
