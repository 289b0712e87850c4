#include <algorithm>

#include <gtest/gtest.h>

#include "lrpd/eval.hpp"
#include "lrpd/testing/oracles.hpp"
#include "lrpd/testing/scenarios.hpp"

namespace lrpd {
namespace {

EvalObject obj(double x, double z, double score = 1.0, int cls = kPedestrian, double bbox_height = 100.0) {
  EvalObject o;
  o.box = {x, 0.8, z, 1.0, 1.0, 1.7, 0.0, cls, score};
  o.score = score;
  o.bbox_height = bbox_height;
  return o;
}

EvalFrame frame(std::vector<EvalObject> gts, std::vector<EvalObject> dets, std::string id = "000000") {
  return {std::move(id), std::move(gts), std::move(dets)};
}

const auto kIou = MatchCriterion::bev_iou(0.5);
const auto kAll = DifficultyFilter::all();

TEST(Match, IouAboveThresholdIsTruePositive) {
  // Unit squares offset by d along x: IoU = (1 - d) / (1 + d).
  const std::vector<EvalObject> gts{obj(0, 10)};
  const std::vector<EvalObject> dets{obj(0.25, 10, 0.9)};
  const auto m = match_frame(dets, gts, kIou);
  ASSERT_EQ(m.dets.size(), 1u);
  EXPECT_EQ(m.dets[0].status, DetStatus::kTruePositive);
  EXPECT_EQ(m.dets[0].gt_index, 0);
  EXPECT_TRUE(m.unmatched_gts.empty());
}

TEST(Match, IouBelowThresholdIsFalsePositiveAndMiss) {
  const std::vector<EvalObject> gts{obj(0, 10)};
  const std::vector<EvalObject> dets{obj(3.0 / 7.0, 10, 0.9)};
  const auto m = match_frame(dets, gts, kIou);
  EXPECT_EQ(m.dets[0].status, DetStatus::kFalsePositive);
  EXPECT_EQ(m.unmatched_gts, (std::vector<std::size_t>{0}));
}

TEST(Match, TwoDetectionsOneGroundTruth) {
  const std::vector<EvalObject> gts{obj(0, 10)};
  const std::vector<EvalObject> dets{obj(0.1, 10, 0.5), obj(0.0, 10, 0.9)};
  const auto m = match_frame(dets, gts, kIou);
  ASSERT_EQ(m.dets.size(), 2u);
  EXPECT_EQ(m.dets[0].det_index, 1u);  // higher score first
  EXPECT_EQ(m.dets[0].status, DetStatus::kTruePositive);
  EXPECT_EQ(m.dets[1].status, DetStatus::kFalsePositive);
}

TEST(Match, EuclideanThresholdInclusive) {
  const std::vector<EvalObject> gts{obj(0, 10)};
  const std::vector<EvalObject> dets{obj(1.0, 10, 0.9)};
  const auto m = match_frame(dets, gts, MatchCriterion::euclidean(1.0));
  EXPECT_EQ(m.dets[0].status, DetStatus::kTruePositive);
  EXPECT_EQ(m.dets[0].distance, 1.0);
}

TEST(Match, IgnoreSemantics) {
  // Cyclist ground truth absorbs a detection; a car does not.
  const std::vector<EvalObject> gts{obj(0, 10, 1, kCyclist), obj(5, 10, 1, kCar), obj(-5, 10, 1, kPedestrian, 10.0)};
  const std::vector<EvalObject> dets{obj(0, 10, 0.9), obj(5, 10, 0.8), obj(-5, 10, 0.7), obj(9, 10, 0.6, kCar)};
  const auto m = match_frame(dets, gts, kIou, DifficultyFilter::moderate());
  ASSERT_EQ(m.dets.size(), 3u);  // the car detection is not evaluated
  EXPECT_EQ(m.dets[0].status, DetStatus::kIgnored);
  EXPECT_EQ(m.dets[1].status, DetStatus::kFalsePositive);
  EXPECT_EQ(m.dets[2].status, DetStatus::kIgnored);  // too-small pedestrian ground truth
  EXPECT_EQ(m.num_valid_gt, 0);
  const std::vector<EvalObject> small{obj(0, 10, 0.9, kPedestrian, 10.0)};
  EXPECT_EQ(match_frame(small, {}, kIou, DifficultyFilter::moderate()).dets[0].status, DetStatus::kIgnored);
}

TEST(PrAp, PerfectDetector) {
  const std::vector<EvalFrame> f{frame({obj(0, 10), obj(3, 15)}, {obj(0, 10, 0.9), obj(3, 15, 0.8)})};
  const auto r = evaluate_range(f, 0, 1e9, kIou, kAll);
  EXPECT_EQ(r.ap, 1.0);
  EXPECT_EQ(evaluate_range(f, 0, 1e9, kIou, kAll, Interpolation::k11Point).ap, 1.0);
  EXPECT_EQ(r.f1.f1, 1.0);
}

TEST(PrAp, NoDetections) {
  const std::vector<EvalFrame> f{frame({obj(0, 10)}, {})};
  const auto r = evaluate_range(f, 0, 1e9, kIou, kAll);
  EXPECT_EQ(r.ap, 0.0);
  EXPECT_TRUE(r.f1.empty);
  EXPECT_EQ(r.f1.fn, 1);
}

TEST(PrAp, HalfRecallFullPrecision) {
  const std::vector<EvalFrame> f{frame({obj(0, 10), obj(3, 15)}, {obj(0, 10, 0.9)})};
  EXPECT_EQ(evaluate_range(f, 0, 1e9, kIou, kAll).ap, 0.5);
}

TEST(PrAp, ConstantPrecisionSameUnderBothInterpolations) {
  const std::vector<EvalFrame> f{
      frame({obj(0, 10), obj(3, 15)}, {obj(9, 10, 0.9), obj(0, 10, 0.8), obj(-9, 10, 0.7), obj(3, 15, 0.6)})};
  const double a40 = evaluate_range(f, 0, 1e9, kIou, kAll).ap;
  const double a11 = evaluate_range(f, 0, 1e9, kIou, kAll, Interpolation::k11Point).ap;
  EXPECT_EQ(a40, 0.5);
  EXPECT_EQ(a11, 0.5);
}

TEST(Bins, FarObjectsDoNotTouchNearBin) {
  RangeBins bins;
  const std::vector<EvalFrame> base{frame({obj(0, 5), obj(2, 8)}, {obj(0, 5, 0.9), obj(4, 8, 0.7)})};
  std::vector<EvalFrame> more = base;
  more[0].gts.push_back(obj(0, 35));
  more[0].dets.push_back(obj(0, 36, 0.95));
  const auto a = range_binned_map(base, bins, kIou, kAll);
  const auto b = range_binned_map(more, bins, kIou, kAll);
  EXPECT_EQ(a[0].ap, b[0].ap);
  EXPECT_EQ(a[0].f1.f1, b[0].f1.f1);
  EXPECT_EQ(a[0].f1.threshold, b[0].f1.threshold);
  EXPECT_EQ(a[0].num_det, b[0].num_det);
  EXPECT_NE(a[3].num_gt, b[3].num_gt);
}

TEST(Bins, EverythingAtThirtyFiveMeters) {
  const std::vector<EvalFrame> f{frame({obj(0, 35), obj(2, 34.9)}, {obj(0, 35, 0.9)})};
  const auto rows = range_binned_map(f, RangeBins{}, kIou, kAll);
  ASSERT_EQ(rows.size(), 4u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_FALSE(rows[static_cast<std::size_t>(i)].populated);
    EXPECT_EQ(rows[static_cast<std::size_t>(i)].ap, 0.0);
  }
  EXPECT_TRUE(rows[3].populated);
  EXPECT_EQ(rows[3].num_gt, 2);
  EXPECT_EQ(rows[3].range, "30+");
  EXPECT_EQ(rows[0].range, "0-10");
}

TEST(Bins, EdgeBelongsToUpperBin) {
  const RangeBins bins;
  EXPECT_EQ(bins.bin_of(10.0), 1u);
  EXPECT_EQ(bins.bin_of(9.999), 0u);
  EXPECT_EQ(bins.bin_of(-1.0), std::nullopt);
  RangeBins bad;
  bad.edges = {0, 10, 10};
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(BestF1, HalfMeterOffsets) {
  const std::vector<EvalFrame> f{frame({obj(0, 10), obj(4, 20)}, {obj(0.5, 10, 0.9), obj(4, 20.5, 0.8)})};
  const auto r = best_f1_report(f);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_NEAR(r.mean_error, 0.5, 1e-12);
  EXPECT_FALSE(r.empty);
}

TEST(BestF1, TiesTakeHighestThreshold) {
  // TP, FP, FP, TP: F1 is 2/3 at 0.9 and again at 0.5.
  const std::vector<EvalFrame> f{frame({obj(0, 10), obj(4, 20)},
                                       {obj(0, 10, 0.9), obj(-9, 10, 0.7), obj(9, 10, 0.6), obj(4, 20, 0.5)})};
  const auto r = evaluate_range(f, 0, 1e9, kIou, kAll).f1;
  EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r.threshold, 0.9);
}

std::vector<EvalFrame> random_frames(Rng& rng, int n) {
  std::vector<EvalFrame> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(testing::random_eval_frame(rng, static_cast<int>(rng.uniform_int(0, 6)),
                                             static_cast<int>(rng.uniform_int(0, 5)), std::to_string(i)));
  }
  return out;
}

TEST(EvalProperty, GreedyMatchesBruteForce) {
  Rng rng(31);
  const std::vector<MatchCriterion> crits{kIou, MatchCriterion::bev_iou(0.3), MatchCriterion::euclidean(1.0)};
  for (int i = 0; i < 500; ++i) {
    const auto f = testing::random_eval_frame(rng, static_cast<int>(rng.uniform_int(0, 6)),
                                              static_cast<int>(rng.uniform_int(0, 5)));
    const auto& crit = crits[static_cast<std::size_t>(i) % crits.size()];
    for (const auto& filter : {DifficultyFilter::moderate(), DifficultyFilter::hard(), kAll}) {
      const auto m = match_frame(f.dets, f.gts, crit, filter);
      const auto o = oracle::brute_force_match(f.dets, f.gts, crit, filter);
      EXPECT_EQ(m.num_valid_gt, o.num_valid_gt);
      for (const auto& r : m.dets) {
        const auto expected = o.outcome[r.det_index];
        const auto got = r.status == DetStatus::kTruePositive  ? oracle::Outcome::kTruePositive
                         : r.status == DetStatus::kFalsePositive ? oracle::Outcome::kFalsePositive
                                                                 : oracle::Outcome::kIgnored;
        ASSERT_EQ(got, expected) << "scenario " << i;
        ASSERT_EQ(r.gt_index, o.gt_of_det[r.det_index]) << "scenario " << i;
      }
    }
  }
}

TEST(EvalProperty, MatchesThresholdEnumeration) {
  Rng rng(32);
  const RangeBins bins;
  for (int i = 0; i < 100; ++i) {
    const auto frames = random_frames(rng, static_cast<int>(rng.uniform_int(1, 5)));
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const auto got = evaluate_range(frames, bins.lo(b), bins.hi(b), kIou, DifficultyFilter::moderate());
      const auto got11 =
          evaluate_range(frames, bins.lo(b), bins.hi(b), kIou, DifficultyFilter::moderate(), Interpolation::k11Point);
      const auto want = oracle::threshold_enumeration(frames, bins.lo(b), bins.hi(b), kIou, DifficultyFilter::moderate());
      EXPECT_EQ(got.num_gt, want.num_gt);
      EXPECT_EQ(got.ap, want.ap40);
      EXPECT_EQ(got11.ap, want.ap11);
      EXPECT_EQ(got.f1.empty, want.empty);
      EXPECT_EQ(got.f1.precision, want.precision);
      EXPECT_EQ(got.f1.recall, want.recall);
      EXPECT_EQ(got.f1.f1, want.f1);
      EXPECT_EQ(got.f1.threshold, want.threshold);
      EXPECT_NEAR(got.f1.mean_error, want.mean_error, 1e-12);
    }
  }
}

TEST(EvalProperty, DroppingFalsePositivesNeverLowersAp) {
  Rng rng(33);
  for (int i = 0; i < 200; ++i) {
    auto frames = random_frames(rng, 3);
    const double before = evaluate_range(frames, 0, 1e9, kIou, kAll).ap;
    for (auto& f : frames) {
      const auto m = match_frame(f.dets, f.gts, kIou, kAll);
      std::vector<bool> drop(f.dets.size(), false);
      for (const auto& r : m.dets) drop[r.det_index] = r.status == DetStatus::kFalsePositive;
      std::vector<EvalObject> kept;
      for (std::size_t d = 0; d < f.dets.size(); ++d) {
        if (!drop[d]) kept.push_back(f.dets[d]);
      }
      f.dets = kept;
    }
    EXPECT_GE(evaluate_range(frames, 0, 1e9, kIou, kAll).ap, before);
  }
}

TEST(EvalProperty, BinsPartitionGroundTruth) {
  Rng rng(34);
  for (int i = 0; i < 100; ++i) {
    const auto frames = random_frames(rng, 4);
    int sum = 0;
    for (const auto& r : range_binned_map(frames, RangeBins{}, kIou, DifficultyFilter::hard())) sum += r.num_gt;
    EXPECT_EQ(sum, evaluate_range(frames, 0, std::numeric_limits<double>::infinity(), kIou, DifficultyFilter::hard()).num_gt);
  }
}

TEST(EvalProperty, FrameOrderDoesNotMatter) {
  Rng rng(35);
  for (int i = 0; i < 100; ++i) {
    auto frames = random_frames(rng, 5);
    const auto a = evaluate_range(frames, 0, 1e9, kIou, kAll);
    std::reverse(frames.begin(), frames.end());
    const auto b = evaluate_range(frames, 0, 1e9, kIou, kAll);
    EXPECT_EQ(a.ap, b.ap);
    EXPECT_EQ(a.f1.f1, b.f1.f1);
    EXPECT_EQ(a.f1.threshold, b.f1.threshold);
    EXPECT_NEAR(a.f1.mean_error, b.f1.mean_error, 1e-12);
  }
}

TEST(Report, JsonAndCsvShape) {
  const std::vector<EvalFrame> f{frame({obj(0, 10)}, {obj(0, 10, 0.9)})};
  const auto rep = evaluate(f, EvalConfig{});
  ASSERT_EQ(rep.rows.size(), 15u);
  EXPECT_EQ(rep.rows[4].range, "all");
  EXPECT_EQ(rep.criterion.substr(0, 7), "bev_iou");
  const auto j = to_json(rep);
  EXPECT_EQ(j["rows"].size(), 15u);
  EXPECT_EQ(j["overall"]["f1"], 1.0);
  const auto csv = to_csv(rep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 16);
}

}  // namespace
}  // namespace lrpd
