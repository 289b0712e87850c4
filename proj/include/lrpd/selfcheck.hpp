#ifndef LRPD_SELFCHECK_HPP
#define LRPD_SELFCHECK_HPP

// Quick built-in oracle suite behind `lrpd selfcheck`. Each check prints one
// PASS/FAIL line; the whole run takes a few seconds.

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lrpd/augment.hpp"
#include "lrpd/eval.hpp"
#include "lrpd/geometry.hpp"
#include "lrpd/kitti_io.hpp"
#include "lrpd/loss.hpp"
#include "lrpd/synthetic.hpp"
#include "lrpd/testing/oracles.hpp"
#include "lrpd/testing/scenarios.hpp"

namespace lrpd {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline CheckResult check_iou_monte_carlo() {
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto [a, b] = testing::random_overlapping_pair(rng);
    worst = std::max(worst, std::abs(bev_iou(a, b) - oracle::monte_carlo_bev_iou(a, b, 200000, 100 + i)));
  }
  return {"bev_iou vs monte carlo", worst <= 5e-3, "max |diff| " + std::to_string(worst)};
}

inline CheckResult check_iou_symmetry() {
  Rng rng(12);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const auto [a, b] = testing::random_overlapping_pair(rng);
    worst = std::max({worst, std::abs(bev_iou(a, b) - bev_iou(b, a)), std::abs(bev_iou(a, a) - 1.0)});
  }
  return {"bev_iou symmetry and self", worst <= 1e-9, "max |diff| " + std::to_string(worst)};
}

inline CheckResult check_loss_gradients() {
  Rng rng(13);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double p = rng.uniform(0.02, 0.98);
    const double ph = rng.uniform(0.05, 1.0);
    const double fd = oracle::central_difference([&](double x) { return automated_focal_loss(x, ph).value; }, p);
    worst = std::max(worst, rel_err(automated_focal_loss(p, ph).grad, fd));
    double r = rng.uniform(-3.0, 3.0);
    if (std::abs(std::abs(r) - 1.0) < 1e-3) r += 0.01;
    const double fd2 = oracle::central_difference([](double x) { return smooth_l1(x).value; }, r);
    worst = std::max(worst, rel_err(smooth_l1(r).grad, fd2));
  }
  const double ce_gap = std::abs(automated_focal_loss(0.3, 1.0).value + std::log(0.3));
  return {"loss gradients", worst <= 1e-4 && ce_gap <= 1e-12, "max rel err " + std::to_string(worst)};
}

inline CheckResult check_match_oracle() {
  Rng rng(14);
  int mismatches = 0;
  for (int i = 0; i < 400; ++i) {
    const auto f = testing::random_eval_frame(rng, static_cast<int>(rng.uniform_int(0, 5)),
                                              static_cast<int>(rng.uniform_int(0, 3)));
    for (const auto& crit : {MatchCriterion::bev_iou(0.5), MatchCriterion::euclidean(1.0)}) {
      const auto filter = DifficultyFilter::moderate();
      const auto m = match_frame(f.dets, f.gts, crit, filter);
      const auto o = oracle::brute_force_match(f.dets, f.gts, crit, filter);
      for (const auto& d : m.dets) {
        const auto want = o.outcome[d.det_index];
        const bool same = (d.status == DetStatus::kTruePositive && want == oracle::Outcome::kTruePositive) ||
                          (d.status == DetStatus::kFalsePositive && want == oracle::Outcome::kFalsePositive) ||
                          (d.status == DetStatus::kIgnored && want == oracle::Outcome::kIgnored);
        if (!same || (d.status != DetStatus::kFalsePositive && d.gt_index != o.gt_of_det[d.det_index] &&
                      d.gt_index >= 0)) {
          ++mismatches;
        }
      }
    }
  }
  return {"matching vs brute force", mismatches == 0, std::to_string(mismatches) + " mismatches"};
}

inline CheckResult check_ap_oracle() {
  Rng rng(15);
  int mismatches = 0;
  for (int i = 0; i < 150; ++i) {
    std::vector<EvalFrame> frames;
    const auto n = rng.uniform_int(1, 3);
    for (std::int64_t k = 0; k < n; ++k) {
      frames.push_back(testing::random_eval_frame(rng, static_cast<int>(rng.uniform_int(0, 5)),
                                                  static_cast<int>(rng.uniform_int(0, 3))));
    }
    const auto crit = MatchCriterion::euclidean(1.0);
    const auto filter = DifficultyFilter::all();
    const auto got = evaluate_range(frames, 0.0, 30.0, crit, filter);
    const auto want = oracle::threshold_enumeration(frames, 0.0, 30.0, crit, filter);
    if (got.ap != want.ap40 || got.f1.f1 != want.f1 || got.f1.precision != want.precision ||
        got.f1.recall != want.recall) {
      ++mismatches;
    }
  }
  return {"AP and best-F1 vs threshold enumeration", mismatches == 0, std::to_string(mismatches) + " mismatches"};
}

inline CheckResult check_round_trips() {
  SyntheticSpec spec;
  spec.pedestrians = {{-1.0, 12.0}, {2.0, 25.0}};
  const auto sf = generate_synthetic_frame(spec, 5);
  const auto& f = sf.frame;
  const bool labels = parse_label_file(write_label_file(*f.labels)) == *f.labels;
  const auto calib = parse_calib(write_calib(f.calib));
  const bool cal = calib.P2 == f.calib.P2 && calib.R0_rect == f.calib.R0_rect &&
                   calib.Tr_velo_to_cam == f.calib.Tr_velo_to_cam && calib.image == f.calib.image;
  const bool velo = read_velodyne(write_velodyne(f.cloud)) == f.cloud;
  const bool masks = parse_masks(write_masks(*f.masks)) == *f.masks;
  std::string detail;
  if (!labels) detail += " labels";
  if (!cal) detail += " calib";
  if (!velo) detail += " velodyne";
  if (!masks) detail += " masks";
  return {"format round-trips", detail.empty(), detail.empty() ? "lossless" : "differs:" + detail};
}

inline CheckResult check_encode_decode() {
  Rng rng(16);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Box3D p = testing::random_box(rng);
    Box3D g = testing::random_box(rng);
    g.theta = normalize_angle(g.theta);
    const Box3D d = decode(p, encode_target(p, g));
    worst = std::max({worst, std::abs(d.cx - g.cx), std::abs(d.cy - g.cy), std::abs(d.cz - g.cz),
                      std::abs(d.l - g.l), std::abs(d.w - g.w), std::abs(d.h - g.h),
                      std::abs(normalize_angle(d.theta - g.theta))});
  }
  return {"target encode/decode", worst <= 1e-9, "max |diff| " + std::to_string(worst)};
}

}  // namespace detail

inline std::vector<CheckResult> run_selfcheck() {
  std::vector<std::function<CheckResult()>> checks{
      detail::check_iou_monte_carlo, detail::check_iou_symmetry, detail::check_loss_gradients,
      detail::check_match_oracle,    detail::check_ap_oracle,    detail::check_round_trips,
      detail::check_encode_decode};
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"(exception)", false, e.what()});
    }
  }
  return out;
}

}  // namespace lrpd

#endif  // LRPD_SELFCHECK_HPP
