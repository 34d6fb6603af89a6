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

#ifndef TILEFUSE_INSTANCES_H_
#define TILEFUSE_INSTANCES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tilefuse/geometry.h"
#include "tilefuse/mask.h"

namespace tilefuse {

// One detector output for one tile. bbox and mask are in tile-local
// pixels; the mask frame is the full tile.
struct Detection {
  std::string tile_id;
  BBox bbox;
  double score = 0;
  int category = 1;
  RleMask mask;
};

// An instance in whole-image coordinates. The mask is stored in a tight
// local frame whose top-left corner sits at `frame` in global pixels, so
// memory scales with the instance rather than with the image.
struct GlobalInstance {
  std::int64_t instance_id = 0;
  BBox bbox;
  double score = 0;
  int category = 1;
  RleMask mask;
  int frame_x = 0;
  int frame_y = 0;

  Rect FrameRect() const { return Rect{frame_x, frame_y, mask.width, mask.height}; }
  RunList Runs() const { return RunsFromRle(mask, frame_x, frame_y); }
};

struct InstanceSet {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<GlobalInstance> instances;

  // Throws InvalidArgument when an instance leaves the image extent or
  // ids collide.
  void Validate() const;
};

// Builds an instance from global foreground runs, framing the mask
// tightly. An empty run list yields a 1x1 background frame at `anchor`.
GlobalInstance MakeInstance(std::int64_t id, const BBox& bbox, double score, int category,
                            const RunList& runs, int anchor_x, int anchor_y);

// Tight bounding box of the instance foreground as a BBox.
BBox TightBox(const Rect& r);

// Mask IoU between two instances that may live in different local frames.
double InstanceIou(const GlobalInstance& a, const GlobalInstance& b);

}  // namespace tilefuse

#endif  // TILEFUSE_INSTANCES_H_
