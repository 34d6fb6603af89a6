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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "tilefuse/annotation_io.h"
#include "tilefuse/error.h"
#include "tilefuse/parallel.h"

namespace tilefuse {

void GridParams::Validate() const {
  if (window < 1) throw InvalidArgument("window must be >= 1");
  if (stride < 1 || stride > window) {
    throw InvalidArgument("stride must satisfy 1 <= stride <= window (stride " +
                          std::to_string(stride) + ", window " + std::to_string(window) + ")");
  }
  if (margin < 0 || margin > window - stride) {
    throw InvalidArgument("margin must satisfy 0 <= margin <= window - stride (margin " +
                          std::to_string(margin) + ")");
  }
}

int AxisTileCount(int length, const GridParams& params) {
  if (length < 1) throw InvalidArgument("axis length must be >= 1");
  if (length <= params.window) return 1;
  const std::int64_t excess = static_cast<std::int64_t>(length) - params.window;
  return static_cast<int>((excess + params.stride - 1) / params.stride) + 1;
}

Interval ComputeTargetArea(int k, int n, int tile_size, const GridParams& params) {
  if (n < 1 || k < 0 || k >= n || tile_size < 1) {
    throw InvalidArgument("target area: tile index out of range");
  }
  if (n == 1) return Interval{0, tile_size};
  const int begin = (k == 0) ? 0 : params.margin;
  const int end = (k == n - 1) ? tile_size : params.margin + params.stride;
  return Interval{begin, end};
}

std::map<std::string, std::size_t> TileGrid::Index() const {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tiles.size(); ++i) index.emplace(tiles[i].tile_id, i);
  return index;
}

std::string MakeTileId(const std::string& image_id, int row, int col) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_r%03d_c%03d", row, col);
  return image_id + buf;
}

TileGrid ComputeTileGrid(int image_width, int image_height, const GridParams& params,
                         const std::string& image_id) {
  params.Validate();
  if (image_width < 1 || image_height < 1) throw InvalidArgument("image dimensions must be >= 1");
  TileGrid grid;
  grid.image_id = image_id;
  grid.image_width = image_width;
  grid.image_height = image_height;
  grid.params = params;
  const int cols = AxisTileCount(image_width, params);
  const int rows = AxisTileCount(image_height, params);
  grid.tiles.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    const int oy = r * params.stride;
    const int th = std::min(params.window, image_height - oy);
    const Interval ty = ComputeTargetArea(r, rows, th, params);
    for (int c = 0; c < cols; ++c) {
      const int ox = c * params.stride;
      const int tw = std::min(params.window, image_width - ox);
      const Interval tx = ComputeTargetArea(c, cols, tw, params);
      Tile t;
      t.tile_id = MakeTileId(image_id, r, c);
      t.row = r;
      t.col = c;
      t.origin_x = ox;
      t.origin_y = oy;
      t.width = tw;
      t.height = th;
      t.target = Rect{tx.begin, ty.begin, tx.end - tx.begin, ty.end - ty.begin};
      grid.tiles.push_back(std::move(t));
    }
  }
  return grid;
}

RasterImage CropRaster(const RasterImage& image, const Rect& rect) {
  if (rect.empty() || rect.x < 0 || rect.y < 0 || rect.right() > image.width() ||
      rect.bottom() > image.height()) {
    throw InvalidArgument("crop rectangle outside image bounds");
  }
  const int bands = image.bands();
  const std::size_t row_len = static_cast<std::size_t>(rect.w) * bands;
  auto copy_rows = [&](const auto& src, auto& dst) {
    for (int y = 0; y < rect.h; ++y) {
      const std::size_t from = (static_cast<std::size_t>(rect.y + y) * image.width() + rect.x) * bands;
      std::copy_n(src.begin() + from, row_len, dst.begin() + y * row_len);
    }
  };
  RasterImage out(rect.w, rect.h, bands, image.bit_depth());
  if (image.bit_depth() == 8) {
    copy_rows(image.samples8(), out.mutable_samples8());
  } else {
    copy_rows(image.samples16(), out.mutable_samples16());
  }
  out.set_band_names(image.band_names());
  return out;
}

RasterImage ExtractTile(const RasterImage& image, const Tile& tile) {
  if (tile.origin_x < 0 || tile.origin_y < 0 || tile.origin_x + tile.width > image.width() ||
      tile.origin_y + tile.height > image.height()) {
    throw InvalidArgument("tile " + tile.tile_id + " is out of image bounds");
  }
  return CropRaster(image, tile.Extent());
}

nlohmann::ordered_json ManifestToJson(const TileGrid& grid) {
  nlohmann::ordered_json j;
  j["image_id"] = grid.image_id;
  j["image_width"] = grid.image_width;
  j["image_height"] = grid.image_height;
  j["window"] = grid.params.window;
  j["stride"] = grid.params.stride;
  j["margin"] = grid.params.margin;
  auto tiles = nlohmann::ordered_json::array();
  for (const Tile& t : grid.tiles) {
    nlohmann::ordered_json tj;
    tj["tile_id"] = t.tile_id;
    tj["row"] = t.row;
    tj["col"] = t.col;
    tj["x"] = t.origin_x;
    tj["y"] = t.origin_y;
    tj["w"] = t.width;
    tj["h"] = t.height;
    tj["target"] = {{"x", t.target.x}, {"y", t.target.y}, {"w", t.target.w}, {"h", t.target.h}};
    tiles.push_back(std::move(tj));
  }
  j["tiles"] = std::move(tiles);
  return j;
}

TileGrid ManifestFromJson(const nlohmann::json& j) {
  TileGrid grid;
  try {
    grid.image_id = j.at("image_id").get<std::string>();
    grid.image_width = j.at("image_width").get<int>();
    grid.image_height = j.at("image_height").get<int>();
    grid.params.window = j.at("window").get<int>();
    grid.params.stride = j.at("stride").get<int>();
    grid.params.margin = j.at("margin").get<int>();
    for (const auto& tj : j.at("tiles")) {
      Tile t;
      t.tile_id = tj.at("tile_id").get<std::string>();
      t.row = tj.at("row").get<int>();
      t.col = tj.at("col").get<int>();
      t.origin_x = tj.at("x").get<int>();
      t.origin_y = tj.at("y").get<int>();
      t.width = tj.at("w").get<int>();
      t.height = tj.at("h").get<int>();
      const auto& tg = tj.at("target");
      t.target = Rect{tg.at("x").get<int>(), tg.at("y").get<int>(), tg.at("w").get<int>(),
                      tg.at("h").get<int>()};
      grid.tiles.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  grid.params.Validate();
  for (const Tile& t : grid.tiles) {
    if (t.width < 1 || t.height < 1 || t.origin_x < 0 || t.origin_y < 0 ||
        t.origin_x + t.width > grid.image_width || t.origin_y + t.height > grid.image_height) {
      throw FormatError("manifest tile " + t.tile_id + " lies outside the image");
    }
    if (t.target.x < 0 || t.target.y < 0 || t.target.right() > t.width ||
        t.target.bottom() > t.height) {
      throw FormatError("manifest tile " + t.tile_id + " has a target outside the tile");
    }
  }
  return grid;
}

void WriteManifest(const TileGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << ManifestToJson(grid).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

TileGrid ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }
  return ManifestFromJson(j);
}

InstanceSet ClipInstancesToTile(const InstanceSet& gt, const Tile& tile) {
  InstanceSet out;
  out.image_id = tile.tile_id;
  out.width = tile.width;
  out.height = tile.height;
  const Rect extent = tile.Extent();
  for (const GlobalInstance& inst : gt.instances) {
    if (inst.FrameRect().Intersect(extent).empty()) continue;
    RunList clipped = ClipRuns(inst.Runs(), extent);
    if (clipped.empty()) continue;
    RunList local = TranslateRuns(clipped, -tile.origin_x, -tile.origin_y);
    const Rect bounds = *RunsBounds(local);
    out.instances.push_back(
        MakeInstance(inst.instance_id, TightBox(bounds), inst.score, inst.category, local, 0, 0));
  }
  return out;
}

TileGrid ExportDataset(const RasterImage& image, const TileGrid& grid, const InstanceSet* gt,
                       const std::filesystem::path& out_dir, const ExportOptions& options) {
  if (image.width() != grid.image_width || image.height() != grid.image_height) {
    throw InvalidArgument("grid was computed for a different image size");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::string ext = options.raster_extension;
  if (ext.empty()) ext = image.bit_depth() == 8 ? ".png" : ".bsq";

  std::vector<char> emitted(grid.tiles.size(), 0);
  ParallelFor(grid.tiles.size(), options.threads, [&](std::size_t i) {
    const Tile& tile = grid.tiles[i];
    InstanceSet clipped;
    if (gt != nullptr) {
      clipped = ClipInstancesToTile(*gt, tile);
      if (!options.keep_empty && clipped.instances.empty()) return;
    }
    SaveRaster(ExtractTile(image, tile), out_dir / (tile.tile_id + ext));
    if (gt != nullptr) {
      const InstanceSet sets[] = {std::move(clipped)};
      WriteInstanceSets(sets, out_dir / (tile.tile_id + ".gt.jsonl"));
    }
    emitted[i] = 1;
  });

  TileGrid manifest = grid;
  manifest.tiles.clear();
  for (std::size_t i = 0; i < grid.tiles.size(); ++i) {
    if (emitted[i]) manifest.tiles.push_back(grid.tiles[i]);
  }
  WriteManifest(manifest, out_dir / "tiles.json");
  return manifest;
}

std::pair<std::vector<std::string>, std::vector<std::string>> SplitDataset(
    std::vector<std::string> ids, int ratio_train, int ratio_val, std::uint64_t seed) {
  if (ids.empty()) throw InvalidArgument("split_dataset: empty input");
  if (ratio_train < 1 || ratio_val < 1) throw InvalidArgument("split ratios must be >= 1");
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t total = ids.size();
  const auto sum = static_cast<std::uint64_t>(ratio_train) + static_cast<std::uint64_t>(ratio_val);
  // Round half up: floor((2 * N * rt + sum) / (2 * sum)).
  const std::size_t n_train = static_cast<std::size_t>(
      (2 * static_cast<std::uint64_t>(total) * ratio_train + sum) / (2 * sum));
  std::vector<std::string> train(ids.begin(), ids.begin() + n_train);
  std::vector<std::string> val(ids.begin() + n_train, ids.end());
  return {std::move(train), std::move(val)};
}

}  // namespace tilefuse
