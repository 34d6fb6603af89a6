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

// Command-line front end: tile, detect-sim, fuse, eval, synth, split and
// pipeline subcommands.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tilefuse/annotation_io.h"
#include "tilefuse/fusion.h"
#include "tilefuse/metrics.h"
#include "tilefuse/pipeline.h"
#include "tilefuse/raster.h"
#include "tilefuse/synth.h"
#include "tilefuse/tiling.h"

namespace {

using tilefuse::ApInterpolation;

struct NmsFlags {
  std::string method;
  double sigma = 0.5;
  double iou_threshold = 0.3;
  double score_floor = 0.001;

  void Add(CLI::App* app) {
    app->add_option("--soft-nms", method, "Soft-NMS variant applied per tile")
        ->check(CLI::IsMember({"gaussian", "linear"}));
    app->add_option("--sigma", sigma, "Gaussian Soft-NMS sigma");
    app->add_option("--nms-iou", iou_threshold, "Linear Soft-NMS IoU threshold");
    app->add_option("--score-floor", score_floor, "Drop detections scoring below this after decay");
  }

  std::optional<tilefuse::SoftNmsParams> Params() const {
    if (method.empty()) return std::nullopt;
    tilefuse::SoftNmsParams p;
    p.method = method == "linear" ? tilefuse::SoftNmsMethod::kLinear : tilefuse::SoftNmsMethod::kGaussian;
    p.sigma = sigma;
    p.iou_threshold = iou_threshold;
    p.score_floor = score_floor;
    return p;
  }
};

ApInterpolation ParseInterp(const std::string& s) {
  return s == "coco101" ? ApInterpolation::kCoco101 : ApInterpolation::kAllPoints;
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tilefuse::IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw tilefuse::FormatError(path + ": " + e.what());
  }
}

void WriteJsonFile(const nlohmann::ordered_json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw tilefuse::IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::pair<int, int> ParseRange(const std::string& text, char sep) {
  const auto pos = text.find(sep);
  if (pos == std::string::npos) throw tilefuse::InvalidArgument("expected A" + std::string(1, sep) + "B, got " + text);
  return {std::stoi(text.substr(0, pos)), std::stoi(text.substr(pos + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlap-tile fusion of per-tile instance segmentation over large rasters"};
  app.require_subcommand(1);
  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  // tile
  auto* tile = app.add_subcommand("tile", "Cut a raster into sliding-window tiles and write tiles.json");
  std::string tile_input, tile_out, tile_bands = "rgb", tile_gt, tile_image_id, tile_format;
  tilefuse::GridParams tile_grid;
  bool keep_empty = false;
  tile->add_option("--input", tile_input, "Source raster (.png or .bsq)")->required();
  tile->add_option("--window", tile_grid.window, "Window size in pixels");
  tile->add_option("--stride", tile_grid.stride, "Stride in pixels");
  tile->add_option("--margin", tile_grid.margin, "Target-area margin in pixels");
  tile->add_option("--bands", tile_bands, "rgb, nirgb, keep, or an index list such as 3,1,0");
  tile->add_option("--gt", tile_gt, "Image-level ground truth to clip into each tile");
  tile->add_option("--image-id", tile_image_id, "Image id (defaults to the raster stem)");
  tile->add_option("--format", tile_format, "Tile raster format")->check(CLI::IsMember({"png", "bsq"}));
  tile->add_flag("--keep-empty", keep_empty, "Keep tiles without ground-truth foreground");
  tile->add_option("--out", tile_out, "Output directory")->required();

  // detect-sim
  auto* sim = app.add_subcommand("detect-sim", "Simulate per-tile detections from scene ground truth");
  std::string sim_scene, sim_manifest, sim_noise, sim_out;
  sim->add_option("--scene", sim_scene, "Scene directory written by `synth`")->required();
  sim->add_option("--manifest", sim_manifest, "tiles.json")->required();
  sim->add_option("--noise", sim_noise, "Noise config JSON (perfect detector when omitted)");
  sim->add_option("--seed", seed, "Overrides the noise seed");
  sim->add_option("--out", sim_out, "Output detections (.jsonl)")->required();

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Fuse per-tile detections into one image-level instance set");
  std::string fuse_manifest, fuse_dets, fuse_out, fuse_labelmap;
  bool fuse_naive = false;
  NmsFlags fuse_nms;
  fuse->add_option("--manifest", fuse_manifest, "tiles.json")->required();
  fuse->add_option("--dets", fuse_dets, "Detections (.jsonl)")->required();
  fuse_nms.Add(fuse);
  fuse->add_flag("--naive", fuse_naive, "Keep every detection (no target-area filtering)");
  fuse->add_option("--out", fuse_out, "Fused annotations")->required();
  fuse->add_option("--labelmap", fuse_labelmap, "Also write a 16-bit label map (.bsq)");

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions: AP50, mIoU, Score1 (and Score2)");
  std::string eval_gt, eval_pred, eval_report, eval_interp = "allpoints";
  double eff = -1, cod = -1, doc = -1;
  eval->add_option("--gt", eval_gt, "Ground-truth annotations")->required();
  eval->add_option("--pred", eval_pred, "Predicted annotations")->required();
  eval->add_option("--ap-interp", eval_interp, "AP interpolation")->check(CLI::IsMember({"allpoints", "coco101"}));
  eval->add_option("--eff", eff, "Efficiency subscore for Score2");
  eval->add_option("--cod", cod, "Code subscore for Score2");
  eval->add_option("--doc", doc, "Documentation subscore for Score2");
  eval->add_option("--report", eval_report, "Report output (.json)")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  tilefuse::SceneConfig scene_cfg;
  std::string synth_sizes = "40:220", synth_out, synth_shape = "rectangle", synth_format = "png";
  synth->add_option("--width", scene_cfg.width, "Scene width");
  synth->add_option("--height", scene_cfg.height, "Scene height");
  synth->add_option("--objects", scene_cfg.n_objects, "Number of objects");
  synth->add_option("--sizes", synth_sizes, "Side length range MIN:MAX");
  synth->add_option("--shape", synth_shape, "Object shape")->check(CLI::IsMember({"rectangle", "polygon"}));
  synth->add_option("--min-gap", scene_cfg.min_gap, "Minimum gap between objects");
  synth->add_option("--seed", scene_cfg.seed, "Scene seed");
  synth->add_option("--format", synth_format, "Raster format")->check(CLI::IsMember({"png", "bsq"}));
  synth->add_option("--out", synth_out, "Output directory")->required();

  // split
  auto* split = app.add_subcommand("split", "Seeded train/val split of the tiles in a manifest");
  std::string split_manifest, split_ratio = "5:1", split_out;
  std::uint64_t split_seed = 0;
  split->add_option("--manifest", split_manifest, "tiles.json")->required();
  split->add_option("--ratio", split_ratio, "TRAIN:VAL");
  split->add_option("--seed", split_seed, "Shuffle seed");
  split->add_option("--out", split_out, "Output split (.json)")->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "tile -> detect -> fuse -> eval with stage timings");
  tilefuse::PipelineConfig pcfg;
  std::string pipe_config, pipe_noise, pipe_synth_sizes, pipe_interp, pipe_scene, pipe_input, pipe_dets, pipe_gt,
      pipe_out;
  int pipe_synth_width = 0, pipe_synth_height = 0, pipe_synth_objects = -1;
  NmsFlags pipe_nms;
  pipe->add_option("--config", pipe_config, "JSON config; flags override its values");
  auto* o_window = pipe->add_option("--window", pcfg.grid.window, "Window size");
  auto* o_stride = pipe->add_option("--stride", pcfg.grid.stride, "Stride");
  auto* o_margin = pipe->add_option("--margin", pcfg.grid.margin, "Target-area margin");
  auto* o_bands = pipe->add_option("--bands", pcfg.bands, "Band selection for exported tiles");
  pipe->add_option("--scene", pipe_scene, "Scene directory written by `synth`");
  pipe->add_option("--input", pipe_input, "Source raster");
  pipe->add_option("--dets", pipe_dets, "Detections to ingest instead of simulating");
  pipe->add_option("--gt", pipe_gt, "Ground truth for evaluation");
  pipe->add_option("--noise", pipe_noise, "Noise config for the simulated detector");
  pipe->add_option("--synth-width", pipe_synth_width, "Generate a scene of this width");
  pipe->add_option("--synth-height", pipe_synth_height, "Generated scene height (defaults to width)");
  pipe->add_option("--synth-objects", pipe_synth_objects, "Generated object count");
  pipe->add_option("--synth-sizes", pipe_synth_sizes, "Generated side length range MIN:MAX");
  auto* o_seed = pipe->add_option("--seed", seed, "Scene seed for generated scenes");
  pipe_nms.Add(pipe);
  pipe->add_option("--ap-interp", pipe_interp, "AP interpolation")->check(CLI::IsMember({"allpoints", "coco101"}));
  auto* o_export = pipe->add_flag("--export-tiles", pcfg.export_tiles, "Write tile rasters under OUT/tiles");
  auto* o_label = pipe->add_flag("--labelmap", pcfg.write_label_map, "Write OUT/labelmap.bsq");
  auto* o_naive = pipe->add_flag("--naive", pcfg.naive_merge, "Keep every detection (baseline)");
  pipe->add_option("--out", pipe_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  const char* stage = "cli";
  try {
    if (tile->parsed()) {
      stage = "tile";
      tilefuse::RasterImage image = tilefuse::LoadRaster(tile_input);
      std::optional<tilefuse::InstanceSet> gt;
      if (!tile_gt.empty()) {
        auto sets = tilefuse::ReadInstanceSets(tile_gt);
        if (sets.size() != 1) throw tilefuse::FormatError("ground truth must describe exactly one image");
        gt = std::move(sets.front());
      }
      std::string image_id = tile_image_id;
      if (image_id.empty()) image_id = gt ? gt->image_id : std::filesystem::path(tile_input).stem().string();
      if (gt) gt->image_id = image_id;
      if (tile_bands != "keep" && !(image.bands() != 4 && (tile_bands == "rgb" || tile_bands == "nirgb"))) {
        image = tilefuse::SelectBands(image, tilefuse::BandCombo::Parse(tile_bands));
      }
      const auto grid = tilefuse::ComputeTileGrid(image.width(), image.height(), tile_grid, image_id);
      tilefuse::ExportOptions opts;
      opts.keep_empty = keep_empty || !gt;
      opts.threads = threads;
      if (!tile_format.empty()) opts.raster_extension = "." + tile_format;
      const auto manifest = tilefuse::ExportDataset(image, grid, gt ? &*gt : nullptr, tile_out, opts);
      std::printf("wrote %zu of %zu tiles to %s\n", manifest.tiles.size(), grid.tiles.size(), tile_out.c_str());
    } else if (sim->parsed()) {
      stage = "detect-sim";
      const auto sets = tilefuse::ReadInstanceSets(std::filesystem::path(sim_scene) / "gt.json");
      if (sets.size() != 1) throw tilefuse::FormatError("scene ground truth must describe exactly one image");
      const auto grid = tilefuse::ReadManifest(sim_manifest);
      tilefuse::NoiseConfig noise =
          sim_noise.empty() ? tilefuse::NoiseConfig::Perfect() : tilefuse::NoiseConfig::FromJson(ReadJsonFile(sim_noise));
      if (sim->count("--seed") > 0) noise.seed = seed;
      const auto dets = tilefuse::SimulateAllTiles(sets.front(), grid, noise, threads);
      tilefuse::WriteDetections(dets, std::filesystem::path(sim_out));
      std::printf("wrote %zu detections over %zu tiles\n", dets.size(), grid.tiles.size());
    } else if (fuse->parsed()) {
      stage = "fuse";
      const auto grid = tilefuse::ReadManifest(fuse_manifest);
      const auto dets = tilefuse::ParseDetections(std::filesystem::path(fuse_dets), grid);
      tilefuse::FuseOptions opts;
      opts.nms = fuse_nms.Params();
      opts.apply_target_filter = !fuse_naive;
      opts.threads = threads;
      const tilefuse::InstanceSet fused[] = {tilefuse::Fuse(dets, grid, opts)};
      tilefuse::WriteInstanceSets(fused, std::filesystem::path(fuse_out));
      if (!fuse_labelmap.empty()) {
        tilefuse::SaveRaster(tilefuse::LabelMapToRaster(tilefuse::RenderLabelMap(fused[0], threads)), fuse_labelmap);
      }
      std::printf("fused %zu instances\n", fused[0].instances.size());
    } else if (eval->parsed()) {
      stage = "eval";
      const auto gt = tilefuse::ReadInstanceSets(std::filesystem::path(eval_gt));
      const auto pred = tilefuse::ReadInstanceSets(std::filesystem::path(eval_pred));
      std::optional<tilefuse::Subscores> sub;
      if (eff >= 0 || cod >= 0 || doc >= 0) {
        if (eff < 0 || cod < 0 || doc < 0) throw tilefuse::InvalidArgument("Score2 needs --eff, --cod and --doc");
        sub = tilefuse::Subscores{eff, cod, doc};
      }
      const auto report = tilefuse::Evaluate(gt, pred, ParseInterp(eval_interp), sub, threads);
      WriteJsonFile(report.ToJson(), eval_report);
      std::printf("AP50 %.4f  mIoU %.4f  Score1 %.4f\n", report.ap.ap, report.miou.miou, report.score1);
    } else if (synth->parsed()) {
      stage = "synth";
      std::tie(scene_cfg.size_min, scene_cfg.size_max) = ParseRange(synth_sizes, ':');
      scene_cfg.shape = synth_shape == "polygon" ? tilefuse::ShapeKind::kConvexPolygon : tilefuse::ShapeKind::kRectangle;
      const auto scene = tilefuse::GenerateScene(scene_cfg);
      const std::filesystem::path out(synth_out);
      std::filesystem::create_directories(out);
      tilefuse::SaveRaster(scene.raster, out / ("scene." + synth_format));
      const tilefuse::InstanceSet sets[] = {scene.gt};
      tilefuse::WriteInstanceSets(sets, out / "gt.json");
      std::printf("scene %dx%d with %zu objects written to %s\n", scene_cfg.width, scene_cfg.height,
                  scene.gt.instances.size(), synth_out.c_str());
    } else if (split->parsed()) {
      stage = "split";
      const auto grid = tilefuse::ReadManifest(split_manifest);
      std::vector<std::string> ids;
      for (const auto& t : grid.tiles) ids.push_back(t.tile_id);
      const auto [rt, rv] = ParseRange(split_ratio, ':');
      const auto [train, val] = tilefuse::SplitDataset(ids, rt, rv, split_seed);
      nlohmann::ordered_json j;
      j["seed"] = split_seed;
      j["train"] = train;
      j["val"] = val;
      WriteJsonFile(j, split_out);
      std::printf("train %zu / val %zu\n", train.size(), val.size());
    } else if (pipe->parsed()) {
      stage = "config";
      if (!pipe_config.empty()) {
        tilefuse::PipelineConfig from_file;
        from_file.MergeJson(ReadJsonFile(pipe_config));
        // Flags win over the file: copy file values for everything the
        // command line left unset.
        if (o_window->count() == 0) pcfg.grid.window = from_file.grid.window;
        if (o_stride->count() == 0) pcfg.grid.stride = from_file.grid.stride;
        if (o_margin->count() == 0) pcfg.grid.margin = from_file.grid.margin;
        if (o_bands->count() == 0) pcfg.bands = from_file.bands;
        if (o_export->count() == 0) pcfg.export_tiles = from_file.export_tiles;
        if (o_label->count() == 0) pcfg.write_label_map = from_file.write_label_map;
        if (o_naive->count() == 0) pcfg.naive_merge = from_file.naive_merge;
        pcfg.nms = from_file.nms;
        pcfg.interpolation = from_file.interpolation;
        pcfg.synth = from_file.synth;
        pcfg.scene_dir = from_file.scene_dir;
        pcfg.input_raster = from_file.input_raster;
        pcfg.image_id = from_file.image_id;
        pcfg.detections = from_file.detections;
        pcfg.noise = from_file.noise;
        pcfg.gt = from_file.gt;
        pcfg.out_dir = from_file.out_dir;
        pcfg.keep_empty = from_file.keep_empty;
        if (app.count("--threads") == 0) threads = from_file.threads;
      }
      if (!pipe_scene.empty()) pcfg.scene_dir = pipe_scene;
      if (!pipe_input.empty()) pcfg.input_raster = pipe_input;
      if (!pipe_dets.empty()) pcfg.detections = pipe_dets;
      if (!pipe_gt.empty()) pcfg.gt = pipe_gt;
      if (!pipe_out.empty()) pcfg.out_dir = pipe_out;
      if (!pipe_noise.empty()) pcfg.noise = tilefuse::NoiseConfig::FromJson(ReadJsonFile(pipe_noise));
      if (!pipe_interp.empty()) pcfg.interpolation = ParseInterp(pipe_interp);
      if (auto nms = pipe_nms.Params()) pcfg.nms = nms;
      if (pipe_synth_width > 0 || pipe_synth_objects >= 0 || !pipe_synth_sizes.empty()) {
        tilefuse::SceneConfig sc = pcfg.synth.value_or(tilefuse::SceneConfig{});
        if (pipe_synth_width > 0) sc.width = pipe_synth_width;
        sc.height = pipe_synth_height > 0 ? pipe_synth_height : (pipe_synth_width > 0 ? sc.width : sc.height);
        if (pipe_synth_objects >= 0) sc.n_objects = pipe_synth_objects;
        if (!pipe_synth_sizes.empty()) std::tie(sc.size_min, sc.size_max) = ParseRange(pipe_synth_sizes, ':');
        if (o_seed->count() > 0) sc.seed = seed;
        pcfg.synth = sc;
      }
      pcfg.threads = threads;
      const auto result = tilefuse::RunPipeline(pcfg);
      std::printf("tiles %zu  instances %zu", result.grid.tiles.size(), result.fused.instances.size());
      if (result.report) {
        std::printf("  AP50 %.4f  mIoU %.4f  Score1 %.4f", result.report->ap.ap, result.report->miou.miou,
                    result.report->score1);
      }
      std::printf("\n");
      for (const auto& t : result.timings) std::printf("  %-7s %10.1f ms\n", t.stage.c_str(), t.ms);
      std::printf("  %-7s %10.1f ms\n", "total", result.total_ms);
    }
  } catch (const tilefuse::StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: [%s] %s\n", stage, e.what());
    return 1;
  }
  return 0;
}
