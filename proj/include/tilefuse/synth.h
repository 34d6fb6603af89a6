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

#ifndef TILEFUSE_SYNTH_H_
#define TILEFUSE_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tilefuse/instances.h"
#include "tilefuse/raster.h"
#include "tilefuse/tiling.h"

namespace tilefuse {

enum class ShapeKind { kRectangle, kConvexPolygon };

struct SceneConfig {
  int width = 5000;
  int height = 5000;
  int n_objects = 300;
  int size_min = 40;
  int size_max = 220;
  ShapeKind shape = ShapeKind::kRectangle;
  int min_gap = 2;
  std::uint64_t seed = 7;
  // Placement attempts per object before giving up.
  int max_attempts = 2000;
  std::string image_id = "scene";

  void Validate() const;
};

struct Scene {
  RasterImage raster;
  InstanceSet gt;
};

// Non-overlapping filled shapes at least min_gap apart, rendered into a
// 3-band 8-bit raster with a distinct colour per object. Ground truth has
// ids 1..n, score 1 and tight boxes. Throws InvalidArgument if placement
// fails.
Scene GenerateScene(const SceneConfig& cfg);

// Alpha/beta of a Beta law for detector confidences; alpha <= 0 means every
// score is exactly 1.
struct ScoreLaw {
  double alpha = 0;
  double beta = 0;
};

struct NoiseConfig {
  double p_drop = 0;            // per visible object per tile
  int bbox_jitter = 0;          // max |shift| in pixels of the detected corner
  ScoreLaw score_law;           // true detections
  double p_spurious = 0;        // Poisson mean of false detections per tile
  ScoreLaw spurious_score_law{1.0, 3.0};
  int spurious_size_min = 20;
  int spurious_size_max = 120;
  std::uint64_t seed = 0;

  void Validate() const;
  static NoiseConfig Perfect() { return NoiseConfig{}; }
  static NoiseConfig FromJson(const nlohmann::json& j);
  nlohmann::ordered_json ToJson() const;
};

// Per-tile view of the ground truth as a detector that only sees the tile
// would report it: masks and boxes clipped to the tile, then noise. The RNG
// stream is derived from (noise.seed, tile_index) so tiles may be simulated
// in any order.
std::vector<Detection> SimulateDetector(const InstanceSet& gt, const Tile& tile, std::size_t tile_index,
                                        const NoiseConfig& noise);

// Runs SimulateDetector over every tile, concatenated in tile order.
std::vector<Detection> SimulateAllTiles(const InstanceSet& gt, const TileGrid& grid,
                                        const NoiseConfig& noise, int threads = 1);

}  // namespace tilefuse

#endif  // TILEFUSE_SYNTH_H_
