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

#ifndef TILEFUSE_PIPELINE_H_
#define TILEFUSE_PIPELINE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tilefuse/error.h"
#include "tilefuse/fusion.h"
#include "tilefuse/metrics.h"
#include "tilefuse/synth.h"
#include "tilefuse/tiling.h"

namespace tilefuse {

// Error raised inside one pipeline stage; what() is prefixed "[stage] ".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  GridParams grid;
  // "rgb"/"nirgb" apply to 4-band B,G,R,NIR sources only; explicit index
  // lists always apply.
  std::string bands = "rgb";
  std::optional<SoftNmsParams> nms;
  ApInterpolation interpolation = ApInterpolation::kAllPoints;

  // Image source, first match wins: an inline synthetic scene, a directory
  // written by `tilefuse synth`, or a raster file.
  std::optional<SceneConfig> synth;
  std::filesystem::path scene_dir;
  std::filesystem::path input_raster;
  std::string image_id;  // defaults to the ground truth's id or the raster stem

  // Detections are read from this file when set, otherwise simulated from
  // the ground truth with `noise` (perfect detector by default).
  std::filesystem::path detections;
  NoiseConfig noise;

  std::filesystem::path gt;  // optional when the source carries ground truth
  std::optional<Subscores> subscores;

  std::filesystem::path out_dir;
  bool export_tiles = false;
  bool keep_empty = true;
  bool write_label_map = false;
  // Keep every detection instead of applying target areas (naive baseline).
  bool naive_merge = false;
  int threads = 0;

  // Fields present in `j` override the current values.
  void MergeJson(const nlohmann::json& j);
};

struct StageTiming {
  std::string stage;
  double ms = 0;
};

struct PipelineResult {
  TileGrid grid;
  InstanceSet fused;
  std::optional<EvalReport> report;
  std::vector<StageTiming> timings;
  double total_ms = 0;

  // Evaluation report plus "timing_ms".
  nlohmann::ordered_json ReportJson() const;
};

// tile -> detect (ingest or simulate) -> fuse -> eval, writing tiles.json,
// dets.jsonl (when simulated), fused.json, report.json and optionally
// labelmap.bsq and exported tiles into out_dir. Throws StageError.
PipelineResult RunPipeline(const PipelineConfig& cfg);

}  // namespace tilefuse

#endif  // TILEFUSE_PIPELINE_H_
