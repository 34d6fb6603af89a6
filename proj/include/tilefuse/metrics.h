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

#ifndef TILEFUSE_METRICS_H_
#define TILEFUSE_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tilefuse/instances.h"

namespace tilefuse {

enum class ApInterpolation {
  kAllPoints,  // exact area under the precision envelope
  kCoco101,    // mean envelope precision at recall 0, 0.01, ..., 1
};

struct ApResult {
  double ap = 0;  // percent
  std::int64_t num_gt = 0;
  std::int64_t num_pred = 0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::vector<double> precision;  // per ranked prediction
  std::vector<double> recall;
};

inline constexpr double kApIouThreshold = 0.5;

// Mask AP at IoU >= 0.5 over all images pooled. Predictions are ranked by
// score (ties by image id, then instance id); each is matched greedily to the
// unmatched ground truth of highest IoU in its image (ties to the lower id).
// Throws InvalidArgument if the image id sets differ or there is no ground
// truth at all.
ApResult ComputeAp50(std::span<const InstanceSet> gt, std::span<const InstanceSet> pred,
                     ApInterpolation interp = ApInterpolation::kAllPoints, int threads = 1);

// Area under the precision envelope for a ranked precision/recall sequence.
double AveragePrecision(std::span<const double> precision, std::span<const double> recall,
                        ApInterpolation interp);

// Binary pixel confusion counts (foreground is the positive class).
struct PixelConfusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  PixelConfusion& operator+=(const PixelConfusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

// Foreground = union of instance masks on both sides.
PixelConfusion ImageConfusion(const InstanceSet& gt, const InstanceSet& pred);

struct MiouResult {
  double miou = 0;  // percent
  double iou_fg = 0;
  double iou_bg = 0;
  PixelConfusion pooled;
  std::vector<std::pair<std::string, PixelConfusion>> per_image;
};

// Pooled binary mIoU: one confusion accumulated over every pixel of every
// image, then (IoU_fg + IoU_bg) / 2. A class absent from both sides scores 1.
MiouResult ComputeMiou(std::span<const InstanceSet> gt, std::span<const InstanceSet> pred, int threads = 1);

// MiouResult from an already pooled confusion.
double MiouFromConfusion(const PixelConfusion& c, double* iou_fg = nullptr, double* iou_bg = nullptr);

// 0.6 * ap50 + 0.4 * miou; inputs must lie in [0, 100].
double Score1(double ap50, double miou);
// 0.5 * score1 + 0.3 * eff + 0.1 * cod + 0.1 * doc.
double Score2(double score1, double eff, double cod, double doc);

struct Subscores {
  double eff = 0;
  double cod = 0;
  double doc = 0;
};

struct EvalReport {
  ApResult ap;
  MiouResult miou;
  double score1 = 0;
  std::optional<double> score2;
  ApInterpolation interpolation = ApInterpolation::kAllPoints;

  nlohmann::ordered_json ToJson() const;
};

EvalReport Evaluate(std::span<const InstanceSet> gt, std::span<const InstanceSet> pred,
                    ApInterpolation interp = ApInterpolation::kAllPoints,
                    std::optional<Subscores> subscores = std::nullopt, int threads = 1);

}  // namespace tilefuse

#endif  // TILEFUSE_METRICS_H_
