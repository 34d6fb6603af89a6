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

#ifndef TILEFUSE_FUSION_H_
#define TILEFUSE_FUSION_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "tilefuse/annotation_io.h"
#include "tilefuse/geometry.h"
#include "tilefuse/instances.h"
#include "tilefuse/raster.h"
#include "tilefuse/tiling.h"

namespace tilefuse {

enum class SoftNmsMethod { kLinear, kGaussian };

struct SoftNmsParams {
  SoftNmsMethod method = SoftNmsMethod::kGaussian;
  double iou_threshold = 0.3;  // linear only
  double sigma = 0.5;          // gaussian only
  double score_floor = 0.001;

  void Validate() const;
};

// Soft-NMS over one tile's detections of a single category, using box IoU.
// Repeatedly keeps the highest remaining score and decays the rest:
//   linear:   s <- s * (1 - iou)        when iou > Nt
//   gaussian: s <- s * exp(-iou^2 / sigma)
// Detections whose final score falls below score_floor are dropped. Output
// is sorted by final score, ties by input position.
std::vector<Detection> SoftNms(const std::vector<Detection>& dets, const SoftNmsParams& params);

// Keeps detections whose box top-left corner lies in the half-open target
// rectangle. Order is preserved.
std::vector<Detection> FilterByTargetArea(const std::vector<Detection>& dets, const Rect& target);

// Moves a tile detection into image coordinates with a tight mask frame.
// The instance id is left at 0 for the caller to assign.
GlobalInstance TranslateToGlobal(const Detection& det, const Tile& tile);

struct FuseOptions {
  std::optional<SoftNmsParams> nms;
  // When false every detection is kept: the naive "direct output" baseline
  // that stacks tile results without resolving overlaps.
  bool apply_target_filter = true;
  int threads = 1;
};

// Per tile: optional Soft-NMS (per category), target-area filtering and
// translation. Results are concatenated in row-major tile order and
// numbered 1..N. Throws InvalidArgument for detections on unknown tiles.
InstanceSet Fuse(const DetectionMap& per_tile, const TileGrid& grid, const FuseOptions& options = {});

struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> labels;  // row-major, 0 = background

  std::uint32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// Paints instances in ascending score order (ties by id) so higher scores
// win contested pixels.
LabelMap RenderLabelMap(const InstanceSet& set, int threads = 1);

// 16-bit single-band raster for the planar container. Throws
// InvalidArgument if a label exceeds 65535.
RasterImage LabelMapToRaster(const LabelMap& map);

}  // namespace tilefuse

#endif  // TILEFUSE_FUSION_H_
