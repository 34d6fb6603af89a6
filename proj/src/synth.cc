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

#include "tilefuse/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tilefuse/error.h"
#include "tilefuse/parallel.h"

namespace tilefuse {

namespace {

using Rng = std::mt19937_64;

int UniformInt(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double Uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double SampleScore(Rng& rng, const ScoreLaw& law) {
  if (law.alpha <= 0 || law.beta <= 0) return 1.0;
  const double x = std::gamma_distribution<double>(law.alpha, 1.0)(rng);
  const double y = std::gamma_distribution<double>(law.beta, 1.0)(rng);
  if (x + y <= 0) return 0.5;
  return std::clamp(x / (x + y), 0.0, 1.0);
}

RunList RectangleRuns(const Rect& r) {
  RunList runs;
  runs.reserve(r.w);
  for (int x = r.x; x < r.right(); ++x) runs.push_back(ColumnRun{x, r.y, r.bottom()});
  return runs;
}

// Random convex polygon inscribed in the ellipse of `box`, rasterized by
// pixel-centre containment. Convexity makes each column a single segment.
RunList ConvexPolygonRuns(Rng& rng, const Rect& box) {
  const int n_vertices = UniformInt(rng, 5, 9);
  std::vector<double> angles(n_vertices);
  for (double& a : angles) a = Uniform01(rng) * 2.0 * std::numbers::pi;
  std::sort(angles.begin(), angles.end());
  const double cx = box.x + box.w / 2.0, cy = box.y + box.h / 2.0;
  const double rx = box.w / 2.0, ry = box.h / 2.0;
  std::vector<std::pair<double, double>> v;
  for (double a : angles) v.emplace_back(cx + rx * std::cos(a), cy + ry * std::sin(a));

  auto inside = [&](double px, double py) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto [x0, y0] = v[i];
      const auto [x1, y1] = v[(i + 1) % v.size()];
      if ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0) < 0) return false;
    }
    return true;
  };
  RunList runs;
  for (int x = box.x; x < box.right(); ++x) {
    int y0 = -1, y1 = -1;
    for (int y = box.y; y < box.bottom(); ++y) {
      if (inside(x + 0.5, y + 0.5)) {
        if (y0 < 0) y0 = y;
        y1 = y + 1;
      }
    }
    if (y0 >= 0) runs.push_back(ColumnRun{x, y0, y1});
  }
  if (runs.empty()) {
    // Degenerate polygon (all vertices nearly collinear): fall back to the box centre pixel.
    runs.push_back(ColumnRun{box.x + box.w / 2, box.y + box.h / 2, box.y + box.h / 2 + 1});
  }
  return runs;
}

std::array<std::uint8_t, 3> ObjectColour(std::size_t i) {
  return {static_cast<std::uint8_t>(60 + (i * 37) % 190), static_cast<std::uint8_t>(60 + (i * 71) % 190),
          static_cast<std::uint8_t>(60 + (i * 113) % 190)};
}

constexpr std::array<std::uint8_t, 3> kBackground = {34, 52, 28};

}  // namespace

void SceneConfig::Validate() const {
  if (width < 1 || height < 1) throw InvalidArgument("scene dimensions must be >= 1");
  if (n_objects < 0) throw InvalidArgument("object count must be >= 0");
  if (size_min < 1 || size_max < size_min) throw InvalidArgument("bad object size range");
  if (size_max > std::min(width, height)) throw InvalidArgument("object size exceeds scene extent");
  if (min_gap < 0) throw InvalidArgument("min_gap must be >= 0");
  if (max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
}

Scene GenerateScene(const SceneConfig& cfg) {
  cfg.Validate();
  Rng rng(cfg.seed);
  std::vector<Rect> boxes;
  std::vector<RunList> shapes;
  boxes.reserve(cfg.n_objects);
  for (int i = 0; i < cfg.n_objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const int w = UniformInt(rng, cfg.size_min, cfg.size_max);
      const int h = UniformInt(rng, cfg.size_min, cfg.size_max);
      const Rect r{UniformInt(rng, 0, cfg.width - w), UniformInt(rng, 0, cfg.height - h), w, h};
      const Rect grown{r.x - cfg.min_gap, r.y - cfg.min_gap, r.w + 2 * cfg.min_gap, r.h + 2 * cfg.min_gap};
      const bool clash = std::any_of(boxes.begin(), boxes.end(),
                                     [&](const Rect& b) { return !grown.Intersect(b).empty(); });
      if (clash) continue;
      boxes.push_back(r);
      shapes.push_back(cfg.shape == ShapeKind::kRectangle ? RectangleRuns(r) : ConvexPolygonRuns(rng, r));
      placed = true;
    }
    if (!placed) {
      throw InvalidArgument("could not place object " + std::to_string(i + 1) + " of " +
                            std::to_string(cfg.n_objects) + " after " + std::to_string(cfg.max_attempts) +
                            " attempts; scene too dense");
    }
  }

  const std::size_t pixels = static_cast<std::size_t>(cfg.width) * cfg.height;
  std::vector<std::uint8_t> samples(pixels * 3);
  for (std::size_t p = 0; p < pixels; ++p) std::copy(kBackground.begin(), kBackground.end(), &samples[p * 3]);

  Scene scene{RasterImage(1, 1, 3, 8), InstanceSet{cfg.image_id, cfg.width, cfg.height, {}}};
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto colour = ObjectColour(i);
    for (const ColumnRun& r : shapes[i]) {
      for (int y = r.y0; y < r.y1; ++y) {
        std::copy(colour.begin(), colour.end(), &samples[(static_cast<std::size_t>(y) * cfg.width + r.x) * 3]);
      }
    }
    const Rect tight = *RunsBounds(shapes[i]);
    scene.gt.instances.push_back(
        MakeInstance(static_cast<std::int64_t>(i + 1), TightBox(tight), 1.0, 1, shapes[i], tight.x, tight.y));
  }
  scene.raster = RasterImage(cfg.width, cfg.height, 3, std::move(samples));
  scene.raster.set_band_names({"red", "green", "blue"});
  return scene;
}

void NoiseConfig::Validate() const {
  if (!(p_drop >= 0 && p_drop <= 1)) throw InvalidArgument("p_drop must lie in [0, 1]");
  if (bbox_jitter < 0) throw InvalidArgument("bbox_jitter must be >= 0");
  if (!(p_spurious >= 0)) throw InvalidArgument("p_spurious must be >= 0");
  if (spurious_size_min < 1 || spurious_size_max < spurious_size_min) {
    throw InvalidArgument("bad spurious size range");
  }
}

NoiseConfig NoiseConfig::FromJson(const nlohmann::json& j) {
  NoiseConfig n;
  try {
    n.p_drop = j.value("p_drop", n.p_drop);
    n.bbox_jitter = j.value("bbox_jitter", n.bbox_jitter);
    n.score_law.alpha = j.value("score_alpha", n.score_law.alpha);
    n.score_law.beta = j.value("score_beta", n.score_law.beta);
    n.p_spurious = j.value("p_spurious", n.p_spurious);
    n.spurious_score_law.alpha = j.value("spurious_alpha", n.spurious_score_law.alpha);
    n.spurious_score_law.beta = j.value("spurious_beta", n.spurious_score_law.beta);
    if (j.contains("spurious_size")) {
      n.spurious_size_min = j.at("spurious_size").at(0).get<int>();
      n.spurious_size_max = j.at("spurious_size").at(1).get<int>();
    }
    n.seed = j.value("seed", n.seed);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad noise config: ") + e.what());
  }
  n.Validate();
  return n;
}

nlohmann::ordered_json NoiseConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["p_drop"] = p_drop;
  j["bbox_jitter"] = bbox_jitter;
  j["score_alpha"] = score_law.alpha;
  j["score_beta"] = score_law.beta;
  j["p_spurious"] = p_spurious;
  j["spurious_alpha"] = spurious_score_law.alpha;
  j["spurious_beta"] = spurious_score_law.beta;
  j["spurious_size"] = {spurious_size_min, spurious_size_max};
  j["seed"] = seed;
  return j;
}

std::vector<Detection> SimulateDetector(const InstanceSet& gt, const Tile& tile, std::size_t tile_index,
                                        const NoiseConfig& noise) {
  noise.Validate();
  Rng rng(MixSeed(noise.seed, tile_index));
  const Rect extent = tile.Extent();
  const Rect frame{0, 0, tile.width, tile.height};
  std::vector<Detection> out;

  auto emit = [&](const RunList& local, double score) {
    const Rect tight = *RunsBounds(local);
    Detection d;
    d.tile_id = tile.tile_id;
    d.bbox = TightBox(tight);
    d.score = score;
    d.category = 1;
    d.mask = RleFromRuns(local, frame);
    out.push_back(std::move(d));
  };

  for (const GlobalInstance& inst : gt.instances) {
    if (inst.FrameRect().Intersect(extent).empty()) continue;
    if (noise.p_drop > 0 && Uniform01(rng) < noise.p_drop) continue;
    int dx = 0, dy = 0;
    if (noise.bbox_jitter > 0) {
      dx = UniformInt(rng, -noise.bbox_jitter, noise.bbox_jitter);
      dy = UniformInt(rng, -noise.bbox_jitter, noise.bbox_jitter);
    }
    const double score = SampleScore(rng, noise.score_law);
    RunList runs = ClipRuns(TranslateRuns(inst.Runs(), dx, dy), extent);
    if (runs.empty()) continue;
    emit(TranslateRuns(runs, -tile.origin_x, -tile.origin_y), score);
  }

  if (noise.p_spurious > 0) {
    const int count = std::poisson_distribution<int>(noise.p_spurious)(rng);
    for (int k = 0; k < count; ++k) {
      const int w = std::min(tile.width, UniformInt(rng, noise.spurious_size_min, noise.spurious_size_max));
      const int h = std::min(tile.height, UniformInt(rng, noise.spurious_size_min, noise.spurious_size_max));
      const Rect r{UniformInt(rng, 0, tile.width - w), UniformInt(rng, 0, tile.height - h), w, h};
      emit(RectangleRuns(r), SampleScore(rng, noise.spurious_score_law));
    }
  }
  return out;
}

std::vector<Detection> SimulateAllTiles(const InstanceSet& gt, const TileGrid& grid, const NoiseConfig& noise,
                                        int threads) {
  std::vector<std::vector<Detection>> per_tile(grid.tiles.size());
  ParallelFor(grid.tiles.size(), threads,
              [&](std::size_t i) { per_tile[i] = SimulateDetector(gt, grid.tiles[i], i, noise); });
  std::vector<Detection> all;
  for (auto& dets : per_tile) {
    for (Detection& d : dets) all.push_back(std::move(d));
  }
  return all;
}

}  // namespace tilefuse
