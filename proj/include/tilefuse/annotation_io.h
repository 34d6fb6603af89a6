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

#ifndef TILEFUSE_ANNOTATION_IO_H_
#define TILEFUSE_ANNOTATION_IO_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tilefuse/instances.h"
#include "tilefuse/tiling.h"

namespace tilefuse {

// Newline-delimited JSON, one record per line.
//
// Detection record (tile level):
//   {"tile_id": s, "bbox": [x,y,w,h], "score": f, "category_id": i,
//    "segmentation": {"size": [h,w], "counts": [...]}}
//
// Annotation record (image level): "image_id" instead of "tile_id", plus
// "ann_id"; the segmentation frame is the whole image. Writers precede each
// image's annotations with a header record {"image_id", "width", "height"}
// so that images without instances keep their extent. Readers accept files
// without header records and take the extent from the segmentation size.

using DetectionMap = std::map<std::string, std::vector<Detection>>;

nlohmann::ordered_json DetectionToJson(const Detection& det);
void WriteDetections(std::span<const Detection> dets, std::ostream& out);
void WriteDetections(std::span<const Detection> dets, const std::filesystem::path& path);

// Groups records by tile_id, preserving input order within a tile. Every
// record is checked against the manifest: known tile, mask frame equal to
// the tile size, box inside the tile and within one pixel of the mask's
// foreground extent, score in [0, 1]. Errors name the 0-based record index.
DetectionMap ParseDetections(std::istream& in, const TileGrid& manifest);
DetectionMap ParseDetections(const std::filesystem::path& path, const TileGrid& manifest);

void WriteInstanceSets(std::span<const InstanceSet> sets, std::ostream& out);
void WriteInstanceSets(std::span<const InstanceSet> sets, const std::filesystem::path& path);
std::string SerializeInstanceSets(std::span<const InstanceSet> sets);

// Images appear in order of first mention.
std::vector<InstanceSet> ReadInstanceSets(std::istream& in);
std::vector<InstanceSet> ReadInstanceSets(const std::filesystem::path& path);

}  // namespace tilefuse

#endif  // TILEFUSE_ANNOTATION_IO_H_
