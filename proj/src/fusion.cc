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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "tilefuse/error.h"
#include "tilefuse/parallel.h"

namespace tilefuse {

namespace {

struct Scored {
  std::size_t index;
  double score;
};

// Soft-NMS returning surviving input positions with their decayed scores,
// ordered by score descending then input position.
std::vector<Scored> SoftNmsOrder(const std::vector<Detection>& dets,
                                 const std::vector<std::size_t>& subset,
                                 const SoftNmsParams& params) {
  std::vector<Scored> pending;
  pending.reserve(subset.size());
  for (std::size_t i : subset) pending.push_back({i, dets[i].score});

  std::vector<Scored> kept;
  kept.reserve(pending.size());
  while (!pending.empty()) {
    auto best = std::max_element(pending.begin(), pending.end(), [](const Scored& a, const Scored& b) {
      return a.score != b.score ? a.score < b.score : a.index > b.index;
    });
    const Scored top = *best;
    pending.erase(best);
    kept.push_back(top);
    const BBox& top_box = dets[top.index].bbox;
    for (Scored& s : pending) {
      const double iou = BoxIou(top_box, dets[s.index].bbox);
      if (params.method == SoftNmsMethod::kLinear) {
        if (iou > params.iou_threshold) s.score *= (1.0 - iou);
      } else {
        s.score *= std::exp(-(iou * iou) / params.sigma);
      }
    }
  }
  std::erase_if(kept, [&](const Scored& s) { return s.score < params.score_floor; });
  std::stable_sort(kept.begin(), kept.end(), [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  });
  return kept;
}

std::vector<Detection> ApplySoftNmsPerCategory(const std::vector<Detection>& dets,
                                               const SoftNmsParams& params) {
  std::map<int, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < dets.size(); ++i) by_category[dets[i].category].push_back(i);
  std::vector<Scored> merged;
  for (const auto& [category, subset] : by_category) {
    auto part = SoftNmsOrder(dets, subset, params);
    merged.insert(merged.end(), part.begin(), part.end());
  }
  std::stable_sort(merged.begin(), merged.end(), [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  });
  std::vector<Detection> out;
  out.reserve(merged.size());
  for (const Scored& s : merged) {
    out.push_back(dets[s.index]);
    out.back().score = s.score;
  }
  return out;
}

}  // namespace

void SoftNmsParams::Validate() const {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw InvalidArgument("soft-nms iou threshold must lie in [0, 1]");
  }
  if (!(sigma > 0.0)) throw InvalidArgument("soft-nms sigma must be > 0");
  if (!(score_floor >= 0.0 && score_floor <= 1.0)) {
    throw InvalidArgument("soft-nms score floor must lie in [0, 1]");
  }
}

std::vector<Detection> SoftNms(const std::vector<Detection>& dets, const SoftNmsParams& params) {
  params.Validate();
  std::vector<std::size_t> all(dets.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<Detection> out;
  for (const Scored& s : SoftNmsOrder(dets, all, params)) {
    out.push_back(dets[s.index]);
    out.back().score = s.score;
  }
  return out;
}

std::vector<Detection> FilterByTargetArea(const std::vector<Detection>& dets, const Rect& target) {
  std::vector<Detection> out;
  for (const Detection& d : dets) {
    if (target.Contains(d.bbox.x, d.bbox.y)) out.push_back(d);
  }
  return out;
}

GlobalInstance TranslateToGlobal(const Detection& det, const Tile& tile) {
  const BBox bbox{det.bbox.x + tile.origin_x, det.bbox.y + tile.origin_y, det.bbox.w, det.bbox.h};
  const RunList runs = RunsFromRle(det.mask, tile.origin_x, tile.origin_y);
  const int ax = tile.origin_x + std::clamp(static_cast<int>(std::floor(det.bbox.x)), 0, tile.width - 1);
  const int ay = tile.origin_y + std::clamp(static_cast<int>(std::floor(det.bbox.y)), 0, tile.height - 1);
  return MakeInstance(0, bbox, det.score, det.category, runs, ax, ay);
}

InstanceSet Fuse(const DetectionMap& per_tile, const TileGrid& grid, const FuseOptions& options) {
  if (options.nms) options.nms->Validate();
  const auto index = grid.Index();
  for (const auto& [tile_id, dets] : per_tile) {
    if (!index.contains(tile_id)) throw InvalidArgument("detections reference unknown tile '" + tile_id + "'");
  }

  std::vector<std::vector<GlobalInstance>> per_tile_out(grid.tiles.size());
  ParallelFor(grid.tiles.size(), options.threads, [&](std::size_t i) {
    const Tile& tile = grid.tiles[i];
    const auto it = per_tile.find(tile.tile_id);
    if (it == per_tile.end()) return;
    std::vector<Detection> dets = options.nms ? ApplySoftNmsPerCategory(it->second, *options.nms)
                                              : it->second;
    if (options.apply_target_filter) dets = FilterByTargetArea(dets, tile.target);
    auto& out = per_tile_out[i];
    out.reserve(dets.size());
    for (const Detection& d : dets) out.push_back(TranslateToGlobal(d, tile));
  });

  InstanceSet set;
  set.image_id = grid.image_id;
  set.width = grid.image_width;
  set.height = grid.image_height;
  std::int64_t next_id = 1;
  for (auto& chunk : per_tile_out) {
    for (GlobalInstance& inst : chunk) {
      inst.instance_id = next_id++;
      set.instances.push_back(std::move(inst));
    }
  }
  return set;
}

LabelMap RenderLabelMap(const InstanceSet& set, int threads) {
  LabelMap map;
  map.width = set.width;
  map.height = set.height;
  map.labels.assign(static_cast<std::size_t>(set.width) * set.height, 0);

  std::vector<std::size_t> order(set.instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ia = set.instances[a];
    const auto& ib = set.instances[b];
    return ia.score != ib.score ? ia.score < ib.score : ia.instance_id < ib.instance_id;
  });
  std::vector<RunList> runs(set.instances.size());
  ParallelFor(runs.size(), threads, [&](std::size_t i) { runs[i] = set.instances[i].Runs(); });

  // Horizontal bands are painted independently; each band replays the same
  // paint order, so the result equals sequential painting.
  const int bands = std::max(1, std::min(ResolveThreads(threads) * 4, set.height));
  const int band_h = (set.height + bands - 1) / bands;
  ParallelFor(static_cast<std::size_t>(bands), threads, [&](std::size_t b) {
    const int y_begin = static_cast<int>(b) * band_h;
    const int y_end = std::min(set.height, y_begin + band_h);
    for (std::size_t k : order) {
      const GlobalInstance& inst = set.instances[k];
      if (inst.frame_y >= y_end || inst.frame_y + inst.mask.height <= y_begin) continue;
      const auto label = static_cast<std::uint32_t>(inst.instance_id);
      for (const ColumnRun& r : runs[k]) {
        const int y0 = std::max(r.y0, y_begin);
        const int y1 = std::min(r.y1, y_end);
        for (int y = y0; y < y1; ++y) map.labels[static_cast<std::size_t>(y) * map.width + r.x] = label;
      }
    }
  });
  return map;
}

RasterImage LabelMapToRaster(const LabelMap& map) {
  std::vector<std::uint16_t> samples(map.labels.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (map.labels[i] > 0xFFFF) throw InvalidArgument("label id exceeds 16-bit range");
    samples[i] = static_cast<std::uint16_t>(map.labels[i]);
  }
  RasterImage raster(map.width, map.height, 1, std::move(samples));
  raster.set_band_names({"instance_id"});
  return raster;
}

}  // namespace tilefuse
