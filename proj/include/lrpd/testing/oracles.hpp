#ifndef LRPD_TESTING_ORACLES_HPP
#define LRPD_TESTING_ORACLES_HPP

// Independent reference computations used to check the library:
//   - Monte-Carlo BEV IoU (point sampling, no polygon clipping)
//   - brute-force matching by lexicographic enumeration of assignments
//   - evaluation by re-matching at every score threshold
//   - central finite differences
// None of these call the code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "lrpd/eval.hpp"
#include "lrpd/geometry.hpp"
#include "lrpd/random.hpp"

namespace lrpd::oracle {

// Footprint membership by half-plane tests in the box frame.
inline bool in_footprint(const Box3D& b, double x, double z) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double dx = x - b.cx;
  const double dz = z - b.cz;
  const double along = c * dx - s * dz;
  const double across = s * dx + c * dz;
  return std::abs(along) <= 0.5 * b.l && std::abs(across) <= 0.5 * b.w;
}

/// Monte-Carlo BEV IoU: uniform samples over the joint bounding square.
inline double monte_carlo_bev_iou(const Box3D& a, const Box3D& b, std::size_t samples, std::uint64_t seed) {
  const double ra = 0.5 * std::hypot(a.l, a.w);
  const double rb = 0.5 * std::hypot(b.l, b.w);
  const double x0 = std::min(a.cx - ra, b.cx - rb);
  const double x1 = std::max(a.cx + ra, b.cx + rb);
  const double z0 = std::min(a.cz - ra, b.cz - rb);
  const double z1 = std::max(a.cz + ra, b.cz + rb);
  Rng rng(seed);
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = rng.uniform(x0, x1);
    const double z = rng.uniform(z0, z1);
    const bool ia = in_footprint(a, x, z);
    const bool ib = in_footprint(b, x, z);
    both += (ia && ib) ? 1 : 0;
    either += (ia || ib) ? 1 : 0;
  }
  return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

inline double central_difference(const std::function<double(double)>& f, double x, double step = 1e-5) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

enum class Outcome { kTruePositive, kFalsePositive, kIgnored };

struct OracleMatch {
  std::vector<Outcome> outcome;  // per detection index (non-pedestrian: kIgnored)
  std::vector<int> gt_of_det;    // per detection index
  int num_valid_gt = 0;
};

namespace detail {

inline int role_of(const EvalObject& g, const DifficultyFilter& f) {
  // 2 valid, 1 ignored, 0 not considered
  if (g.box.class_id == kPedestrian) {
    const bool ok = g.bbox_height >= f.min_bbox_height && g.occluded <= f.max_occlusion &&
                    g.truncated <= f.max_truncation;
    return ok ? 2 : 1;
  }
  if (g.box.class_id == kPersonSitting || g.box.class_id == kCyclist) return 1;
  return 0;
}

}  // namespace detail

/// Enumerates every one-to-one assignment and keeps the lexicographically
/// best one, comparing detections in descending score order (ties: input
/// order) by (valid > ignored > unmatched, similarity, lower gt index).
inline OracleMatch brute_force_match(std::span<const EvalObject> dets, std::span<const EvalObject> gts,
                                     const MatchCriterion& crit, const DifficultyFilter& filter) {
  OracleMatch out;
  out.outcome.assign(dets.size(), Outcome::kIgnored);
  out.gt_of_det.assign(dets.size(), -1);
  std::vector<int> roles;
  for (const auto& g : gts) {
    roles.push_back(detail::role_of(g, filter));
    if (roles.back() == 2) ++out.num_valid_gt;
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].box.class_id == kPedestrian && dets[i].bbox_height >= filter.min_bbox_height) order.push_back(i);
  }
  for (std::size_t i = 1; i < order.size(); ++i) {  // insertion sort, stable
    for (std::size_t j = i; j > 0 && dets[order[j]].score > dets[order[j - 1]].score; --j) {
      std::swap(order[j], order[j - 1]);
    }
  }

  struct Key {
    int tier;
    double sim;
    int neg_gt;
  };
  const auto less = [](const std::vector<Key>& a, const std::vector<Key>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].tier != b[i].tier) return a[i].tier < b[i].tier;
      if (a[i].sim != b[i].sim) return a[i].sim < b[i].sim;
      if (a[i].neg_gt != b[i].neg_gt) return a[i].neg_gt < b[i].neg_gt;
    }
    return false;
  };

  std::vector<Key> cur, best;
  std::vector<int> cur_gt, best_gt;
  std::vector<bool> used(gts.size(), false);
  bool have_best = false;
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == order.size()) {
      if (!have_best || less(best, cur)) {
        best = cur;
        best_gt = cur_gt;
        have_best = true;
      }
      return;
    }
    const EvalObject& d = dets[order[k]];
    cur.push_back({0, -std::numeric_limits<double>::infinity(), std::numeric_limits<int>::min()});
    cur_gt.push_back(-1);
    rec(k + 1);
    cur.pop_back();
    cur_gt.pop_back();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || roles[g] == 0) continue;
      const double sim = crit.mode == MatchCriterion::Mode::kBevIou
                             ? bev_iou(d.box, gts[g].box)
                             : -std::sqrt((d.box.cx - gts[g].box.cx) * (d.box.cx - gts[g].box.cx) +
                                          (d.box.cy - gts[g].box.cy) * (d.box.cy - gts[g].box.cy) +
                                          (d.box.cz - gts[g].box.cz) * (d.box.cz - gts[g].box.cz));
      const bool ok = crit.mode == MatchCriterion::Mode::kBevIou ? sim >= crit.threshold : -sim <= crit.threshold;
      if (!ok) continue;
      used[g] = true;
      cur.push_back({roles[g], sim, -static_cast<int>(g)});
      cur_gt.push_back(static_cast<int>(g));
      rec(k + 1);
      cur.pop_back();
      cur_gt.pop_back();
      used[g] = false;
    }
  };
  rec(0);

  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t di = order[k];
    const int g = best_gt[k];
    out.gt_of_det[di] = g;
    if (g < 0) {
      out.outcome[di] = Outcome::kFalsePositive;
    } else {
      out.outcome[di] = roles[static_cast<std::size_t>(g)] == 2 ? Outcome::kTruePositive : Outcome::kIgnored;
    }
  }
  return out;
}

struct OracleEval {
  double ap40 = 0.0;
  double ap11 = 0.0;
  double precision = 0.0;  // at best F1
  double recall = 0.0;
  double f1 = 0.0;
  double mean_error = 0.0;
  double threshold = 0.0;
  int num_gt = 0;
  bool empty = true;
};

/// Re-runs brute-force matching for every distinct score threshold and
/// derives AP and the best-F1 operating point from those counts.
inline OracleEval threshold_enumeration(std::span<const EvalFrame> frames, double lo, double hi,
                                        const MatchCriterion& crit, const DifficultyFilter& filter) {
  const auto in_range = [&](const EvalObject& o) {
    const double r = std::hypot(o.box.cx, o.box.cz);
    return r >= lo && r < hi;
  };
  std::vector<double> thresholds;
  OracleEval out;
  for (const auto& f : frames) {
    for (const auto& g : f.gts) {
      if (in_range(g) && detail::role_of(g, filter) == 2) ++out.num_gt;
    }
    for (const auto& d : f.dets) {
      if (in_range(d)) thresholds.push_back(d.score);
    }
  }
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  struct Point {
    int tp, fp;
    double precision, recall, err, threshold;
  };
  std::vector<Point> pts;
  for (const double t : thresholds) {
    int tp = 0, fp = 0;
    double err = 0.0;
    for (const auto& f : frames) {
      std::vector<EvalObject> gts, dets;
      for (const auto& g : f.gts) {
        if (in_range(g)) gts.push_back(g);
      }
      for (const auto& d : f.dets) {
        if (in_range(d) && d.score >= t) dets.push_back(d);
      }
      const auto m = brute_force_match(dets, gts, crit, filter);
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (m.outcome[i] == Outcome::kTruePositive) {
          ++tp;
          const auto& g = gts[static_cast<std::size_t>(m.gt_of_det[i])].box;
          const auto& d = dets[i].box;
          err += std::sqrt((d.cx - g.cx) * (d.cx - g.cx) + (d.cy - g.cy) * (d.cy - g.cy) +
                           (d.cz - g.cz) * (d.cz - g.cz));
        } else if (m.outcome[i] == Outcome::kFalsePositive && dets[i].box.class_id == kPedestrian &&
                   dets[i].bbox_height >= filter.min_bbox_height) {
          ++fp;
        }
      }
    }
    if (tp + fp == 0) continue;
    const double p = static_cast<double>(tp) / (tp + fp);
    const double r = out.num_gt > 0 ? static_cast<double>(tp) / out.num_gt : 0.0;
    pts.push_back({tp, fp, p, r, err, t});
  }

  if (out.num_gt > 0) {
    const auto ap = [&](int steps, int first) {
      double sum = 0.0;
      for (int i = first; i <= steps; ++i) {
        double m = 0.0;
        for (const auto& p : pts) {
          if (static_cast<long long>(p.tp) * steps >= static_cast<long long>(i) * out.num_gt) m = std::max(m, p.precision);
        }
        sum += m;
      }
      return sum / (steps - first + 1);
    };
    out.ap40 = ap(40, 1);
    out.ap11 = ap(10, 0);
  }
  for (const auto& p : pts) {
    const double f1 = (p.precision + p.recall) > 0.0 ? 2.0 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
    if (out.empty || f1 > out.f1) {
      out.empty = false;
      out.f1 = f1;
      out.precision = p.precision;
      out.recall = p.recall;
      out.threshold = p.threshold;
      out.mean_error = p.tp > 0 ? p.err / p.tp : 0.0;
    }
  }
  return out;
}

}  // namespace lrpd::oracle

#endif  // LRPD_TESTING_ORACLES_HPP
