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

#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "tilefuse/error.h"

namespace tilefuse {
namespace {

using testing::RectInstance;

std::vector<InstanceSet> One(InstanceSet s) { return {std::move(s)}; }

TEST(Ap50Test, SingleMatchAboveHalf) {
  // 10x10 vs 10x6 inside it: IoU 0.6.
  const auto gt = One({"a", 32, 32, {RectInstance(1, 1, Rect{0, 0, 10, 10})}});
  const auto pred = One({"a", 32, 32, {RectInstance(1, 0.7, Rect{0, 0, 10, 6})}});
  const ApResult r = ComputeAp50(gt, pred);
  EXPECT_DOUBLE_EQ(r.ap, 100.0);
  EXPECT_EQ(r.tp, 1);
  EXPECT_EQ(r.fn, 0);
}

TEST(Ap50Test, HandComputedCurve) {
  const auto gt = One({"a", 64, 64, {RectInstance(1, 1, Rect{0, 0, 10, 10}), RectInstance(2, 1, Rect{40, 40, 10, 10})}});
  // IoU 0.8 against g1; IoU 0.3 against g2.
  const auto pred = One({"a", 64, 64, {RectInstance(1, 0.9, Rect{0, 0, 10, 8}), RectInstance(2, 0.8, Rect{40, 40, 10, 3})}});
  const ApResult r = ComputeAp50(gt, pred);
  EXPECT_EQ(r.precision, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(r.recall, (std::vector<double>{0.5, 0.5}));
  EXPECT_DOUBLE_EQ(r.ap, 50.0);
  EXPECT_EQ(r.fp, 1);
  EXPECT_EQ(r.fn, 1);
}

TEST(Ap50Test, ExactlyHalfCountsAsMatch) {
  const auto gt = One({"a", 32, 32, {RectInstance(1, 1, Rect{0, 0, 10, 10})}});
  const auto pred = One({"a", 32, 32, {RectInstance(1, 0.7, Rect{0, 0, 10, 5})}});
  EXPECT_DOUBLE_EQ(ComputeAp50(gt, pred).ap, 100.0);
}

TEST(Ap50Test, Errors) {
  const auto gt = One({"a", 8, 8, {RectInstance(1, 1, Rect{0, 0, 2, 2})}});
  EXPECT_THROW(ComputeAp50(gt, One({"b", 8, 8, {}})), InvalidArgument);
  EXPECT_THROW(ComputeAp50(One({"a", 8, 8, {}}), One({"a", 8, 8, {}})), InvalidArgument);
  const std::vector<InstanceSet> two = {gt[0], InstanceSet{"c", 8, 8, {}}};
  EXPECT_THROW(ComputeAp50(two, gt), InvalidArgument);
  EXPECT_DOUBLE_EQ(ComputeAp50(gt, One({"a", 8, 8, {}})).ap, 0.0);
}

TEST(Ap50Test, MatchesBruteForceReference) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    const testing::MicroScene s = testing::RandomMicroScene(rng);
    const double ap = ComputeAp50(s.gt, s.pred).ap;
    EXPECT_NEAR(ap, testing::ReferenceAp50(s.gt, s.pred), 1e-9) << "trial " << trial;
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 100.0);
  }
}

TEST(Ap50Test, OnlyRankMatters) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    testing::MicroScene s = testing::RandomMicroScene(rng);
    const double before = ComputeAp50(s.gt, s.pred).ap;
    for (auto& set : s.pred)
      for (auto& inst : set.instances) inst.score = 0.01 + 0.5 * inst.score * inst.score;
    EXPECT_DOUBLE_EQ(ComputeAp50(s.gt, s.pred).ap, before);
  }
}

TEST(Ap50Test, DroppingATruePositiveNeverHelps) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    testing::MicroScene s = testing::RandomMicroScene(rng);
    const double before = ComputeAp50(s.gt, s.pred).ap;
    for (auto& set : s.pred) {
      // Drop the prediction that exactly equals a gt shape, if any.
      const auto& g = s.gt[&set - s.pred.data()];
      for (std::size_t k = 0; k < set.instances.size(); ++k) {
        bool exact = false;
        for (const auto& gi : g.instances) exact |= gi.Runs() == set.instances[k].Runs();
        if (exact) {
          set.instances.erase(set.instances.begin() + static_cast<long>(k));
          EXPECT_LE(ComputeAp50(s.gt, s.pred).ap, before + 1e-12);
          break;
        }
      }
    }
  }
}

TEST(Ap50Test, Coco101Interpolation) {
  const auto gt = One({"a", 64, 64, {RectInstance(1, 1, Rect{0, 0, 10, 10}), RectInstance(2, 1, Rect{40, 40, 10, 10})}});
  const auto pred = One({"a", 64, 64, {RectInstance(1, 0.9, Rect{0, 0, 10, 8}), RectInstance(2, 0.8, Rect{40, 40, 10, 3})}});
  // Recall levels 0.00..0.50 (51 of 101) reach precision 1.
  EXPECT_NEAR(ComputeAp50(gt, pred, ApInterpolation::kCoco101).ap, 100.0 * 51.0 / 101.0, 1e-12);
}

TEST(MiouTest, Examples) {
  const auto half = One({"a", 10, 10, {RectInstance(1, 1, Rect{0, 0, 10, 5})}});
  EXPECT_DOUBLE_EQ(ComputeMiou(half, half).miou, 100.0);
  const MiouResult r = ComputeMiou(half, One({"a", 10, 10, {}}));
  EXPECT_DOUBLE_EQ(r.iou_fg, 0.0);
  EXPECT_DOUBLE_EQ(r.iou_bg, 0.5);
  EXPECT_DOUBLE_EQ(r.miou, 25.0);
  EXPECT_DOUBLE_EQ(ComputeMiou(One({"a", 10, 10, {}}), One({"a", 10, 10, {}})).miou, 100.0);
  EXPECT_THROW(ComputeMiou(half, One({"a", 10, 11, {}})), InvalidArgument);
}

TEST(MiouTest, OverlappingPredictionsCountOnce) {
  const auto gt = One({"a", 10, 10, {RectInstance(1, 1, Rect{0, 0, 4, 4})}});
  const auto pred = One({"a", 10, 10, {RectInstance(1, 0.9, Rect{0, 0, 4, 4}), RectInstance(2, 0.8, Rect{2, 2, 2, 2})}});
  const MiouResult r = ComputeMiou(gt, pred);
  EXPECT_EQ(r.pooled.tp, 16u);
  EXPECT_EQ(r.pooled.fp, 0u);
  EXPECT_EQ(r.pooled.tn, 84u);
}

TEST(MiouTest, PooledEqualsConcatenatedImageAndIgnoresOrder) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> px(0, 12), ext(1, 8);
  std::vector<InstanceSet> gt, pred;
  InstanceSet big_gt{"big", 16, 48, {}}, big_pred{"big", 16, 48, {}};
  for (int i = 0; i < 3; ++i) {
    InstanceSet g{"i" + std::to_string(i), 16, 16, {}}, p{g.image_id, 16, 16, {}};
    for (int k = 1; k <= 3; ++k) {
      const Rect rg{px(rng), px(rng), ext(rng), ext(rng)};
      const Rect rp{px(rng), px(rng), ext(rng), ext(rng)};
      g.instances.push_back(RectInstance(k, 1, rg.Intersect(Rect{0, 0, 16, 16})));
      p.instances.push_back(RectInstance(k, 0.5, rp.Intersect(Rect{0, 0, 16, 16})));
      const Rect cg = rg.Intersect(Rect{0, 0, 16, 16});
      const Rect cp = rp.Intersect(Rect{0, 0, 16, 16});
      big_gt.instances.push_back(RectInstance(i * 3 + k, 1, Rect{cg.x, cg.y + 16 * i, cg.w, cg.h}));
      big_pred.instances.push_back(RectInstance(i * 3 + k, 0.5, Rect{cp.x, cp.y + 16 * i, cp.w, cp.h}));
    }
    gt.push_back(std::move(g));
    pred.push_back(std::move(p));
  }
  const double pooled = ComputeMiou(gt, pred).miou;
  EXPECT_DOUBLE_EQ(pooled, ComputeMiou(One(big_gt), One(big_pred)).miou);
  std::reverse(pred.begin(), pred.end());
  EXPECT_DOUBLE_EQ(ComputeMiou(gt, pred, 3).miou, pooled);
}

TEST(ScoreTest, Formulas) {
  EXPECT_DOUBLE_EQ(Score1(100, 100), 100.0);
  EXPECT_DOUBLE_EQ(Score1(0, 0), 0.0);
  EXPECT_NEAR(Score1(58.1, 71.3), 63.38, 1e-9);
  EXPECT_NEAR(Score1(55.7, (62.88 - 0.6 * 55.7) / 0.4), 62.88, 1e-9);
  EXPECT_NEAR((62.88 - 0.6 * 55.7) / 0.4, 73.65, 1e-9);
  for (double a : {0.0, 13.5, 58.1, 100.0}) EXPECT_NEAR(Score1(a, 40) - Score1(0, 40), 0.6 * a, 1e-12);
  EXPECT_THROW(Score1(100.5, 0), InvalidArgument);
  EXPECT_THROW(Score1(50, -1), InvalidArgument);
  EXPECT_DOUBLE_EQ(Score2(100, 100, 100, 100), 100.0);
  EXPECT_DOUBLE_EQ(Score2(0, 0, 0, 0), 0.0);
  EXPECT_NEAR(Score2(63.38, 80, 90, 90), 73.69, 1e-9);
}

TEST(EvaluateTest, ReportJson) {
  const auto gt = One({"a", 10, 10, {RectInstance(1, 1, Rect{0, 0, 10, 5})}});
  const EvalReport r = Evaluate(gt, gt, ApInterpolation::kAllPoints, Subscores{80, 90, 90});
  const auto j = r.ToJson();
  EXPECT_DOUBLE_EQ(j["score1"].get<double>(), 100.0);
  EXPECT_DOUBLE_EQ(j["score2"].get<double>(), 0.5 * 100 + 0.3 * 80 + 9 + 9);
  EXPECT_EQ(j["pixels"]["tp"].get<int>(), 50);
  EXPECT_EQ(j["per_image_pixels"][0]["image_id"], "a");
  EXPECT_EQ(j["conventions"]["miou_aggregation"], "pooled");
  EXPECT_FALSE(Evaluate(gt, gt).ToJson().contains("score2"));
}

}  // namespace
}  // namespace tilefuse
