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

#include "tilefuse/pipeline.h"

#include <chrono>
#include <fstream>

#include "tilefuse/annotation_io.h"

namespace tilefuse {

namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Runs `fn` as a named stage, recording its duration and tagging errors.
template <typename Fn>
auto Stage(const char* name, std::vector<StageTiming>& timings, Fn&& fn) {
  const auto start = Clock::now();
  struct Recorder {
    const char* name;
    std::vector<StageTiming>& timings;
    Clock::time_point start;
    ~Recorder() { timings.push_back({name, ElapsedMs(start)}); }
  } recorder{name, timings, start};
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

SceneConfig SceneFromJson(const nlohmann::json& j, SceneConfig base) {
  base.width = j.value("width", base.width);
  base.height = j.value("height", base.height);
  base.n_objects = j.value("objects", base.n_objects);
  base.size_min = j.value("size_min", base.size_min);
  base.size_max = j.value("size_max", base.size_max);
  base.min_gap = j.value("min_gap", base.min_gap);
  base.seed = j.value("seed", base.seed);
  if (j.contains("shape")) {
    base.shape = j.at("shape").get<std::string>() == "polygon" ? ShapeKind::kConvexPolygon : ShapeKind::kRectangle;
  }
  return base;
}

std::filesystem::path FindSceneRaster(const std::filesystem::path& dir) {
  for (const char* name : {"scene.png", "scene.bsq"}) {
    if (std::filesystem::exists(dir / name)) return dir / name;
  }
  throw IoError("no scene.png or scene.bsq in " + dir.string());
}

RasterImage ApplyBands(const RasterImage& image, const std::string& bands) {
  const std::string lower = [&] {
    std::string s = bands;
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }();
  if (lower.empty() || lower == "keep") return image;
  const bool named = lower == "rgb" || lower == "nirgb" || lower == "nir_g_b";
  if (named && image.bands() != 4) return image;
  return SelectBands(image, BandCombo::Parse(bands));
}

}  // namespace

void PipelineConfig::MergeJson(const nlohmann::json& j) {
  try {
    grid.window = j.value("window", grid.window);
    grid.stride = j.value("stride", grid.stride);
    grid.margin = j.value("margin", grid.margin);
    bands = j.value("bands", bands);
    if (j.contains("soft_nms")) {
      const auto& n = j.at("soft_nms");
      SoftNmsParams p = nms.value_or(SoftNmsParams{});
      if (n.contains("method")) {
        p.method = n.at("method").get<std::string>() == "linear" ? SoftNmsMethod::kLinear : SoftNmsMethod::kGaussian;
      }
      p.iou_threshold = n.value("iou_threshold", p.iou_threshold);
      p.sigma = n.value("sigma", p.sigma);
      p.score_floor = n.value("score_floor", p.score_floor);
      nms = p;
    }
    if (j.contains("ap_interp")) {
      interpolation = j.at("ap_interp").get<std::string>() == "coco101" ? ApInterpolation::kCoco101
                                                                        : ApInterpolation::kAllPoints;
    }
    if (j.contains("synth")) synth = SceneFromJson(j.at("synth"), synth.value_or(SceneConfig{}));
    if (j.contains("scene")) scene_dir = j.at("scene").get<std::string>();
    if (j.contains("input")) input_raster = j.at("input").get<std::string>();
    image_id = j.value("image_id", image_id);
    if (j.contains("dets")) detections = j.at("dets").get<std::string>();
    if (j.contains("noise")) noise = NoiseConfig::FromJson(j.at("noise"));
    if (j.contains("gt")) gt = j.at("gt").get<std::string>();
    if (j.contains("out")) out_dir = j.at("out").get<std::string>();
    export_tiles = j.value("export_tiles", export_tiles);
    keep_empty = j.value("keep_empty", keep_empty);
    write_label_map = j.value("label_map", write_label_map);
    naive_merge = j.value("naive_merge", naive_merge);
    threads = j.value("threads", threads);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad pipeline config: ") + e.what());
  }
}

nlohmann::ordered_json PipelineResult::ReportJson() const {
  nlohmann::ordered_json j = report ? report->ToJson() : nlohmann::ordered_json::object();
  nlohmann::ordered_json timing;
  for (const StageTiming& t : timings) timing[t.stage] = t.ms;
  timing["total"] = total_ms;
  j["timing_ms"] = std::move(timing);
  return j;
}

PipelineResult RunPipeline(const PipelineConfig& cfg) {
  PipelineResult result;
  const auto start = Clock::now();
  const int threads = cfg.threads;
  if (cfg.out_dir.empty()) throw StageError("config", "an output directory is required");

  struct Source {
    RasterImage raster{1, 1, 1, 8};
    std::optional<InstanceSet> gt;
  };
  Source src = Stage("load", result.timings, [&] {
    cfg.grid.Validate();
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
    if (!cfg.detections.empty() && !std::filesystem::exists(cfg.detections)) {
      throw IoError("detections file not found: " + cfg.detections.string());
    }
    Source s;
    std::filesystem::path gt_path = cfg.gt;
    if (cfg.synth) {
      Scene scene = GenerateScene(*cfg.synth);
      s.raster = std::move(scene.raster);
      s.gt = std::move(scene.gt);
    } else if (!cfg.scene_dir.empty()) {
      s.raster = LoadRaster(FindSceneRaster(cfg.scene_dir));
      if (gt_path.empty()) gt_path = cfg.scene_dir / "gt.json";
    } else if (!cfg.input_raster.empty()) {
      s.raster = LoadRaster(cfg.input_raster);
    } else {
      throw InvalidArgument("no input: give a raster, a scene directory or a synthetic scene");
    }
    if (!gt_path.empty()) {
      auto sets = ReadInstanceSets(gt_path);
      if (sets.size() != 1) throw FormatError("ground truth must describe exactly one image");
      s.gt = std::move(sets.front());
    }
    return s;
  });

  std::string image_id = cfg.image_id;
  if (image_id.empty()) {
    if (src.gt) image_id = src.gt->image_id;
    else image_id = cfg.input_raster.stem().string();
  }
  if (src.gt) {
    src.gt->image_id = image_id;
    if (src.gt->width != src.raster.width() || src.gt->height != src.raster.height()) {
      throw StageError("load", "ground truth extent does not match the raster");
    }
  }

  result.grid = Stage("tile", result.timings, [&] {
    TileGrid grid = ComputeTileGrid(src.raster.width(), src.raster.height(), cfg.grid, image_id);
    if (cfg.export_tiles) {
      const RasterImage selected = ApplyBands(src.raster, cfg.bands);
      ExportOptions opts;
      opts.keep_empty = cfg.keep_empty;
      opts.threads = threads;
      grid = ExportDataset(selected, grid, src.gt ? &*src.gt : nullptr, cfg.out_dir / "tiles", opts);
    }
    WriteManifest(grid, cfg.out_dir / "tiles.json");
    return grid;
  });
  // Free the pixels early; nothing downstream reads them.
  src.raster = RasterImage(1, 1, 1, 8);

  const DetectionMap dets = Stage("detect", result.timings, [&] {
    if (!cfg.detections.empty()) return ParseDetections(cfg.detections, result.grid);
    if (!src.gt) throw InvalidArgument("simulated detection needs ground truth");
    const std::vector<Detection> all = SimulateAllTiles(*src.gt, result.grid, cfg.noise, threads);
    WriteDetections(all, cfg.out_dir / "dets.jsonl");
    DetectionMap map;
    for (const Detection& d : all) map[d.tile_id].push_back(d);
    return map;
  });

  result.fused = Stage("fuse", result.timings, [&] {
    FuseOptions opts;
    opts.nms = cfg.nms;
    opts.apply_target_filter = !cfg.naive_merge;
    opts.threads = threads;
    return Fuse(dets, result.grid, opts);
  });

  if (src.gt) {
    result.report = Stage("eval", result.timings, [&] {
      const InstanceSet gts[] = {*src.gt};
      const InstanceSet preds[] = {result.fused};
      return Evaluate(gts, preds, cfg.interpolation, cfg.subscores, threads);
    });
  }

  Stage("write", result.timings, [&] {
    const InstanceSet sets[] = {result.fused};
    WriteInstanceSets(sets, cfg.out_dir / "fused.json");
    if (cfg.write_label_map) {
      SaveRaster(LabelMapToRaster(RenderLabelMap(result.fused, threads)), cfg.out_dir / "labelmap.bsq");
    }
    return 0;
  });

  result.total_ms = ElapsedMs(start);
  std::ofstream report(cfg.out_dir / "report.json", std::ios::trunc);
  report << result.ReportJson().dump(2) << '\n';
  if (!report) throw StageError("write", "cannot write report.json");
  return result;
}

}  // namespace tilefuse
