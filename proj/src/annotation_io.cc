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

#include "tilefuse/annotation_io.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tilefuse/error.h"

namespace tilefuse {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kBoxSlack = 1e-6;

ordered_json SegmentationJson(const RleMask& mask) {
  ordered_json seg;
  seg["size"] = {mask.height, mask.width};
  seg["counts"] = mask.counts;
  return seg;
}

RleMask SegmentationFromJson(const nlohmann::json& seg) {
  const auto& size = seg.at("size");
  if (!size.is_array() || size.size() != 2) throw FormatError("segmentation.size must be [h, w]");
  RleMask mask;
  mask.height = size[0].get<int>();
  mask.width = size[1].get<int>();
  const auto& counts = seg.at("counts");
  if (!counts.is_array()) throw FormatError("segmentation.counts must be an integer array");
  mask.counts.reserve(counts.size());
  for (const auto& c : counts) {
    const std::int64_t v = c.get<std::int64_t>();
    if (v < 0 || v > static_cast<std::int64_t>(UINT32_MAX)) throw FormatError("run count out of range");
    mask.counts.push_back(static_cast<std::uint32_t>(v));
  }
  return mask;
}

BBox BoxFromJson(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw FormatError("bbox must be [x, y, w, h]");
  return BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

// Calls fn(record_index, json) for every non-blank line.
template <typename Fn>
void ForEachRecord(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("record " + std::to_string(index) + ": invalid JSON: " + e.what());
    }
    fn(index, j);
    ++index;
  }
}

void CheckDetection(const Detection& det, const Tile& tile) {
  if (det.mask.width != tile.width || det.mask.height != tile.height) {
    throw InvalidArgument("mask size " + std::to_string(det.mask.width) + "x" +
                          std::to_string(det.mask.height) + " does not match tile " + tile.tile_id +
                          " (" + std::to_string(tile.width) + "x" + std::to_string(tile.height) + ")");
  }
  det.mask.Validate();
  const BBox& b = det.bbox;
  if (!(b.w > 0) || !(b.h > 0)) throw InvalidArgument("bbox extents must be positive");
  if (b.x < -kBoxSlack || b.y < -kBoxSlack || b.right() > tile.width + kBoxSlack ||
      b.bottom() > tile.height + kBoxSlack) {
    throw InvalidArgument("bbox outside tile " + tile.tile_id);
  }
  if (!(det.score >= 0.0 && det.score <= 1.0)) throw InvalidArgument("score outside [0, 1]");
  const RunList runs = RunsFromRle(det.mask);
  if (const auto fg = RunsBounds(runs)) {
    const bool tight = std::abs(b.x - fg->x) <= 1.0 + kBoxSlack &&
                       std::abs(b.y - fg->y) <= 1.0 + kBoxSlack &&
                       std::abs(b.right() - fg->right()) <= 1.0 + kBoxSlack &&
                       std::abs(b.bottom() - fg->bottom()) <= 1.0 + kBoxSlack;
    if (!tight) throw InvalidArgument("bbox is not within one pixel of the mask extent");
  }
}

}  // namespace

ordered_json DetectionToJson(const Detection& det) {
  ordered_json j;
  j["tile_id"] = det.tile_id;
  j["bbox"] = {det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h};
  j["score"] = det.score;
  j["category_id"] = det.category;
  j["segmentation"] = SegmentationJson(det.mask);
  return j;
}

void WriteDetections(std::span<const Detection> dets, std::ostream& out) {
  for (const Detection& d : dets) out << DetectionToJson(d).dump() << '\n';
}

void WriteDetections(std::span<const Detection> dets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  WriteDetections(dets, out);
  if (!out) throw IoError("write failed for " + path.string());
}

DetectionMap ParseDetections(std::istream& in, const TileGrid& manifest) {
  const auto index = manifest.Index();
  DetectionMap out;
  ForEachRecord(in, [&](std::size_t i, const nlohmann::json& j) {
    const std::string where = "record " + std::to_string(i);
    Detection det;
    try {
      det.tile_id = j.at("tile_id").get<std::string>();
      det.bbox = BoxFromJson(j.at("bbox"));
      det.score = j.at("score").get<double>();
      det.category = j.contains("category_id") ? j.at("category_id").get<int>() : 1;
      det.mask = SegmentationFromJson(j.at("segmentation"));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    const auto it = index.find(det.tile_id);
    if (it == index.end()) throw InvalidArgument(where + ": unknown tile_id '" + det.tile_id + "'");
    try {
      CheckDetection(det, manifest.tiles[it->second]);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + ": " + e.what());
    }
    out[det.tile_id].push_back(std::move(det));
  });
  return out;
}

DetectionMap ParseDetections(const std::filesystem::path& path, const TileGrid& manifest) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open detections " + path.string());
  return ParseDetections(in, manifest);
}

void WriteInstanceSets(std::span<const InstanceSet> sets, std::ostream& out) {
  for (const InstanceSet& set : sets) {
    ordered_json header;
    header["image_id"] = set.image_id;
    header["width"] = set.width;
    header["height"] = set.height;
    out << header.dump() << '\n';
    const Rect frame{0, 0, set.width, set.height};
    for (const GlobalInstance& inst : set.instances) {
      ordered_json j;
      j["image_id"] = set.image_id;
      j["ann_id"] = inst.instance_id;
      j["bbox"] = {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h};
      j["score"] = inst.score;
      j["category_id"] = inst.category;
      j["segmentation"] = SegmentationJson(RleFromRuns(inst.Runs(), frame));
      out << j.dump() << '\n';
    }
  }
}

void WriteInstanceSets(std::span<const InstanceSet> sets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  WriteInstanceSets(sets, out);
  if (!out) throw IoError("write failed for " + path.string());
}

std::string SerializeInstanceSets(std::span<const InstanceSet> sets) {
  std::ostringstream out;
  WriteInstanceSets(sets, out);
  return out.str();
}

std::vector<InstanceSet> ReadInstanceSets(std::istream& in) {
  std::vector<InstanceSet> sets;
  std::map<std::string, std::size_t> by_id;
  auto set_for = [&](const std::string& id) -> InstanceSet& {
    auto [it, inserted] = by_id.emplace(id, sets.size());
    if (inserted) {
      sets.emplace_back();
      sets.back().image_id = id;
    }
    return sets[it->second];
  };
  auto set_extent = [](InstanceSet& set, int w, int h, const std::string& where) {
    if (set.width == 0 && set.height == 0) {
      set.width = w;
      set.height = h;
    } else if (set.width != w || set.height != h) {
      throw FormatError(where + ": image extent disagrees with earlier records for '" +
                        set.image_id + "'");
    }
  };

  ForEachRecord(in, [&](std::size_t i, const nlohmann::json& j) {
    const std::string where = "record " + std::to_string(i);
    try {
      InstanceSet& set = set_for(j.at("image_id").get<std::string>());
      if (!j.contains("segmentation")) {
        set_extent(set, j.at("width").get<int>(), j.at("height").get<int>(), where);
        return;
      }
      const RleMask full = SegmentationFromJson(j.at("segmentation"));
      set_extent(set, full.width, full.height, where);
      try {
        full.Validate();
      } catch (const InvalidArgument& e) {
        throw FormatError(e.what());
      }
      const BBox bbox = BoxFromJson(j.at("bbox"));
      const double score = j.contains("score") ? j.at("score").get<double>() : 1.0;
      const int category = j.contains("category_id") ? j.at("category_id").get<int>() : 1;
      const std::int64_t id = j.at("ann_id").get<std::int64_t>();
      const int ax = std::clamp(static_cast<int>(std::floor(bbox.x)), 0, std::max(0, full.width - 1));
      const int ay = std::clamp(static_cast<int>(std::floor(bbox.y)), 0, std::max(0, full.height - 1));
      set.instances.push_back(MakeInstance(id, bbox, score, category, RunsFromRle(full), ax, ay));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      if (msg.rfind("record ", 0) == 0) throw;
      throw FormatError(where + ": " + msg);
    }
  });
  for (const InstanceSet& set : sets) set.Validate();
  return sets;
}

std::vector<InstanceSet> ReadInstanceSets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations " + path.string());
  return ReadInstanceSets(in);
}

}  // namespace tilefuse
