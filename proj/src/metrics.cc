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

#include "tilefuse/metrics.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "tilefuse/error.h"
#include "tilefuse/parallel.h"

namespace tilefuse {

namespace {

// Maps every prediction image onto its ground-truth counterpart.
std::vector<std::size_t> PairImages(std::span<const InstanceSet> gt, std::span<const InstanceSet> pred) {
  std::map<std::string, std::size_t> gt_index;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt_index.emplace(gt[i].image_id, i).second) {
      throw InvalidArgument("duplicate ground-truth image id '" + gt[i].image_id + "'");
    }
  }
  std::set<std::string> seen;
  std::vector<std::size_t> pairing(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto it = gt_index.find(pred[i].image_id);
    if (it == gt_index.end()) {
      throw InvalidArgument("prediction image '" + pred[i].image_id + "' has no ground truth");
    }
    if (!seen.insert(pred[i].image_id).second) {
      throw InvalidArgument("duplicate prediction image id '" + pred[i].image_id + "'");
    }
    pairing[i] = it->second;
  }
  if (seen.size() != gt.size()) throw InvalidArgument("ground truth and predictions cover different images");
  return pairing;
}

// True-positive flag per prediction of one image, in the image's own
// instance order.
std::vector<char> MatchImage(const InstanceSet& gt, const InstanceSet& pred) {
  std::vector<RunList> gt_runs(gt.instances.size());
  for (std::size_t g = 0; g < gt.instances.size(); ++g) gt_runs[g] = gt.instances[g].Runs();

  std::vector<std::size_t> order(pred.instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = pred.instances[a];
    const auto& pb = pred.instances[b];
    return pa.score != pb.score ? pa.score > pb.score : pa.instance_id < pb.instance_id;
  });

  std::vector<char> matched(gt.instances.size(), 0);
  std::vector<char> is_tp(pred.instances.size(), 0);
  for (std::size_t p : order) {
    const GlobalInstance& pi = pred.instances[p];
    const Rect frame = pi.FrameRect();
    const RunList runs = pi.Runs();
    const std::uint64_t area_p = RunsArea(runs);
    double best_iou = 0.0;
    std::size_t best = gt.instances.size();
    for (std::size_t g = 0; g < gt.instances.size(); ++g) {
      if (matched[g]) continue;
      const GlobalInstance& gi = gt.instances[g];
      if (frame.Intersect(gi.FrameRect()).empty()) continue;
      const std::uint64_t inter = RunsIntersectionArea(runs, gt_runs[g]);
      if (inter == 0) continue;
      const double iou = static_cast<double>(inter) /
                         static_cast<double>(area_p + RunsArea(gt_runs[g]) - inter);
      const bool better = iou > best_iou ||
                          (iou == best_iou && best < gt.instances.size() &&
                           gi.instance_id < gt.instances[best].instance_id);
      if (better) {
        best_iou = iou;
        best = g;
      }
    }
    if (best < gt.instances.size() && best_iou >= kApIouThreshold) {
      matched[best] = 1;
      is_tp[p] = 1;
    }
  }
  return is_tp;
}

}  // namespace

double AveragePrecision(std::span<const double> precision, std::span<const double> recall,
                        ApInterpolation interp) {
  const std::size_t n = precision.size();
  if (n == 0) return 0.0;
  std::vector<double> envelope(precision.begin(), precision.end());
  for (std::size_t i = n - 1; i > 0; --i) envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);

  if (interp == ApInterpolation::kAllPoints) {
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ap += (recall[i] - prev_recall) * envelope[i];
      prev_recall = recall[i];
    }
    return 100.0 * ap;
  }
  double sum = 0.0;
  std::size_t i = 0;
  for (int k = 0; k <= 100; ++k) {
    const double threshold = k / 100.0;
    while (i < n && recall[i] < threshold - 1e-12) ++i;
    if (i < n) sum += envelope[i];
  }
  return 100.0 * sum / 101.0;
}

ApResult ComputeAp50(std::span<const InstanceSet> gt, std::span<const InstanceSet> pred,
                     ApInterpolation interp, int threads) {
  const std::vector<std::size_t> pairing = PairImages(gt, pred);
  ApResult result;
  for (const InstanceSet& g : gt) result.num_gt += static_cast<std::int64_t>(g.instances.size());
  if (result.num_gt == 0) throw InvalidArgument("ap50 is undefined without ground-truth instances");

  std::vector<std::vector<char>> tp_flags(pred.size());
  ParallelFor(pred.size(), threads, [&](std::size_t i) { tp_flags[i] = MatchImage(gt[pairing[i]], pred[i]); });

  struct Ranked {
    double score;
    const std::string* image_id;
    std::int64_t instance_id;
    bool tp;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t k = 0; k < pred[i].instances.size(); ++k) {
      const auto& inst = pred[i].instances[k];
      ranked.push_back({inst.score, &pred[i].image_id, inst.instance_id, tp_flags[i][k] != 0});
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (*a.image_id != *b.image_id) return *a.image_id < *b.image_id;
    return a.instance_id < b.instance_id;
  });

  result.num_pred = static_cast<std::int64_t>(ranked.size());
  result.precision.reserve(ranked.size());
  result.recall.reserve(ranked.size());
  for (const Ranked& r : ranked) {
    (r.tp ? result.tp : result.fp)++;
    result.precision.push_back(static_cast<double>(result.tp) / static_cast<double>(result.tp + result.fp));
    result.recall.push_back(static_cast<double>(result.tp) / static_cast<double>(result.num_gt));
  }
  result.fn = result.num_gt - result.tp;
  result.ap = AveragePrecision(result.precision, result.recall, interp);
  return result;
}

PixelConfusion ImageConfusion(const InstanceSet& gt, const InstanceSet& pred) {
  if (gt.width != pred.width || gt.height != pred.height) {
    throw InvalidArgument("image '" + gt.image_id + "': ground truth is " + std::to_string(gt.width) +
                          "x" + std::to_string(gt.height) + ", prediction is " +
                          std::to_string(pred.width) + "x" + std::to_string(pred.height));
  }
  auto union_runs = [](const InstanceSet& set) {
    RunList all;
    for (const GlobalInstance& inst : set.instances) {
      RunList r = inst.Runs();
      all.insert(all.end(), r.begin(), r.end());
    }
    return NormalizeRuns(std::move(all));
  };
  const RunList g = union_runs(gt);
  const RunList p = union_runs(pred);
  PixelConfusion c;
  c.tp = RunsIntersectionArea(g, p);
  c.fp = RunsArea(p) - c.tp;
  c.fn = RunsArea(g) - c.tp;
  const std::uint64_t total = static_cast<std::uint64_t>(gt.width) * static_cast<std::uint64_t>(gt.height);
  c.tn = total - c.tp - c.fp - c.fn;
  return c;
}

double MiouFromConfusion(const PixelConfusion& c, double* iou_fg, double* iou_bg) {
  const std::uint64_t fg_union = c.tp + c.fp + c.fn;
  const std::uint64_t bg_union = c.tn + c.fp + c.fn;
  const double fg = fg_union == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(fg_union);
  const double bg = bg_union == 0 ? 1.0 : static_cast<double>(c.tn) / static_cast<double>(bg_union);
  if (iou_fg != nullptr) *iou_fg = fg;
  if (iou_bg != nullptr) *iou_bg = bg;
  return 100.0 * (fg + bg) / 2.0;
}

MiouResult ComputeMiou(std::span<const InstanceSet> gt, std::span<const InstanceSet> pred, int threads) {
  const std::vector<std::size_t> pairing = PairImages(gt, pred);
  std::vector<PixelConfusion> per_image(pred.size());
  ParallelFor(pred.size(), threads, [&](std::size_t i) { per_image[i] = ImageConfusion(gt[pairing[i]], pred[i]); });
  MiouResult result;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    result.pooled += per_image[i];
    result.per_image.emplace_back(pred[i].image_id, per_image[i]);
  }
  result.miou = MiouFromConfusion(result.pooled, &result.iou_fg, &result.iou_bg);
  return result;
}

double Score1(double ap50, double miou) {
  if (!(ap50 >= 0.0 && ap50 <= 100.0) || !(miou >= 0.0 && miou <= 100.0)) {
    throw InvalidArgument("score1 inputs must lie in [0, 100]");
  }
  return 0.6 * ap50 + 0.4 * miou;
}

double Score2(double score1, double eff, double cod, double doc) {
  return 0.5 * score1 + 0.3 * eff + 0.1 * cod + 0.1 * doc;
}

nlohmann::ordered_json EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["ap50"] = ap.ap;
  j["miou"] = miou.miou;
  j["score1"] = score1;
  if (score2) j["score2"] = *score2;
  j["iou_fg"] = miou.iou_fg;
  j["iou_bg"] = miou.iou_bg;
  j["instances"] = {{"num_gt", ap.num_gt}, {"num_pred", ap.num_pred},
                    {"tp", ap.tp},         {"fp", ap.fp},
                    {"fn", ap.fn}};
  auto confusion = [](const PixelConfusion& c, nlohmann::ordered_json j = {}) {
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["fn"] = c.fn;
    j["tn"] = c.tn;
    return j;
  };
  j["pixels"] = confusion(miou.pooled);
  auto images = nlohmann::ordered_json::array();
  for (const auto& [id, c] : miou.per_image) images.push_back(confusion(c, {{"image_id", id}}));
  j["per_image_pixels"] = std::move(images);
  j["conventions"] = {
      {"ap_match", "mask iou >= 0.5"},
      {"ap_interpolation", interpolation == ApInterpolation::kAllPoints ? "allpoints" : "coco101"},
      {"miou_aggregation", "pooled"},
  };
  return j;
}

EvalReport Evaluate(std::span<const InstanceSet> gt, std::span<const InstanceSet> pred,
                    ApInterpolation interp, std::optional<Subscores> subscores, int threads) {
  EvalReport report;
  report.interpolation = interp;
  report.ap = ComputeAp50(gt, pred, interp, threads);
  report.miou = ComputeMiou(gt, pred, threads);
  report.score1 = Score1(report.ap.ap, report.miou.miou);
  if (subscores) report.score2 = Score2(report.score1, subscores->eff, subscores->cod, subscores->doc);
  return report;
}

}  // namespace tilefuse
