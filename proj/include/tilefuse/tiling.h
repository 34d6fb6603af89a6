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

#ifndef TILEFUSE_TILING_H_
#define TILEFUSE_TILING_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tilefuse/geometry.h"
#include "tilefuse/instances.h"
#include "tilefuse/raster.h"

namespace tilefuse {

// Sliding-window parameters: window W, stride S and target margin m with
// 1 <= S <= W and 0 <= m <= W - S.
struct GridParams {
  int window = 1536;
  int stride = 1280;
  int margin = 2;

  void Validate() const;
  bool operator==(const GridParams&) const = default;
};

// Half-open interval along one axis.
struct Interval {
  int begin = 0;
  int end = 0;

  bool operator==(const Interval&) const = default;
};

// Number of windows along an axis of `length` pixels:
// 1 if length <= W, else ceil((length - W) / S) + 1.
int AxisTileCount(int length, const GridParams& params);

// Target interval, in tile-local pixels, for the k-th of n tiles along an
// axis when that tile is `tile_size` pixels long. Interior tiles own
// [m, m + S); the first tile also owns the leading strip [0, m), the last
// tile everything from m to its end.
Interval ComputeTargetArea(int k, int n, int tile_size, const GridParams& params);

struct Tile {
  std::string tile_id;
  int row = 0;
  int col = 0;
  int origin_x = 0;
  int origin_y = 0;
  int width = 0;
  int height = 0;
  Rect target;  // tile-local

  Rect Extent() const { return Rect{origin_x, origin_y, width, height}; }
  Rect GlobalTarget() const {
    return Rect{origin_x + target.x, origin_y + target.y, target.w, target.h};
  }
  bool operator==(const Tile&) const = default;
};

struct TileGrid {
  std::string image_id;
  int image_width = 0;
  int image_height = 0;
  GridParams params;
  std::vector<Tile> tiles;  // row-major

  // Position of each tile_id in `tiles`.
  std::map<std::string, std::size_t> Index() const;
  bool operator==(const TileGrid&) const = default;
};

std::string MakeTileId(const std::string& image_id, int row, int col);

// Throws InvalidArgument for bad parameters or non-positive dimensions.
TileGrid ComputeTileGrid(int image_width, int image_height, const GridParams& params,
                         const std::string& image_id = "image");

RasterImage CropRaster(const RasterImage& image, const Rect& rect);
// Throws InvalidArgument when the tile leaves the image.
RasterImage ExtractTile(const RasterImage& image, const Tile& tile);

nlohmann::ordered_json ManifestToJson(const TileGrid& grid);
TileGrid ManifestFromJson(const nlohmann::json& j);
void WriteManifest(const TileGrid& grid, const std::filesystem::path& path);
TileGrid ReadManifest(const std::filesystem::path& path);

struct ExportOptions {
  bool keep_empty = true;
  // ".png" or ".bsq"; empty picks PNG for 8-bit rasters and the planar
  // container otherwise.
  std::string raster_extension;
  int threads = 1;
};

// Writes one raster per emitted tile, a tile-local ground-truth file
// "<tile_id>.gt.jsonl" per tile when `gt` is given, and `tiles.json`.
// Tiles without any ground-truth foreground are skipped when keep_empty is
// false and gt is present. Returns the manifest that was written.
TileGrid ExportDataset(const RasterImage& image, const TileGrid& grid, const InstanceSet* gt,
                       const std::filesystem::path& out_dir, const ExportOptions& options = {});

// Ground truth clipped to a tile, in tile-local coordinates, with boxes
// re-tightened around the clipped foreground. Empty clips are dropped.
InstanceSet ClipInstancesToTile(const InstanceSet& gt, const Tile& tile);

// Seeded shuffle followed by a split with |train| = round(N * rt / (rt + rv)).
std::pair<std::vector<std::string>, std::vector<std::string>> SplitDataset(
    std::vector<std::string> ids, int ratio_train, int ratio_val, std::uint64_t seed);

}  // namespace tilefuse

#endif  // TILEFUSE_TILING_H_
