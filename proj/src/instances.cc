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

#include "tilefuse/instances.h"

#include <set>
#include <string>

#include "tilefuse/error.h"

namespace tilefuse {

void InstanceSet::Validate() const {
  if (width < 1 || height < 1) throw InvalidArgument("instance set '" + image_id + "' has no extent");
  const Rect image{0, 0, width, height};
  std::set<std::int64_t> ids;
  for (const GlobalInstance& inst : instances) {
    const std::string tag = "instance " + std::to_string(inst.instance_id) + " of '" + image_id + "'";
    if (inst.instance_id < 1) throw InvalidArgument(tag + ": id must be >= 1");
    if (!ids.insert(inst.instance_id).second) throw InvalidArgument(tag + ": duplicate id");
    if (inst.bbox.x < 0 || inst.bbox.y < 0 || inst.bbox.right() > width ||
        inst.bbox.bottom() > height) {
      throw InvalidArgument(tag + ": bbox outside image extent");
    }
    inst.mask.Validate();
    if (image.Intersect(inst.FrameRect()) != inst.FrameRect()) {
      throw InvalidArgument(tag + ": mask frame outside image extent");
    }
  }
}

GlobalInstance MakeInstance(std::int64_t id, const BBox& bbox, double score, int category,
                            const RunList& runs, int anchor_x, int anchor_y) {
  GlobalInstance inst;
  inst.instance_id = id;
  inst.bbox = bbox;
  inst.score = score;
  inst.category = category;
  if (const auto bounds = RunsBounds(runs)) {
    inst.frame_x = bounds->x;
    inst.frame_y = bounds->y;
    inst.mask = RleFromRuns(runs, *bounds);
  } else {
    inst.frame_x = anchor_x;
    inst.frame_y = anchor_y;
    inst.mask = RleMask{1, 1, {1}};
  }
  return inst;
}

BBox TightBox(const Rect& r) {
  return BBox{static_cast<double>(r.x), static_cast<double>(r.y), static_cast<double>(r.w),
              static_cast<double>(r.h)};
}

double InstanceIou(const GlobalInstance& a, const GlobalInstance& b) {
  const std::uint64_t area_a = a.mask.Area();
  const std::uint64_t area_b = b.mask.Area();
  if (area_a == 0 && area_b == 0) return 0.0;
  std::uint64_t inter = 0;
  if (!a.FrameRect().Intersect(b.FrameRect()).empty()) {
    inter = RunsIntersectionArea(a.Runs(), b.Runs());
  }
  return static_cast<double>(inter) / static_cast<double>(area_a + area_b - inter);
}

}  // namespace tilefuse
