#ifndef LRPD_EVAL_HPP
#define LRPD_EVAL_HPP

// Range-binned BEV evaluation for pedestrian detection.
//
// Matching is greedy in descending detection score (ties: frame order, then
// input order). Ground truth outside the difficulty filter, and neighboring
// classes (Person_sitting, Cyclist), are "ignored": a detection that can only
// match an ignored object is neither a true nor a false positive. Detections
// whose 2D box is shorter than the filter's minimum height are set aside
// before matching.
//
// Range binning restricts both detections and ground truth to the bin by
// planar range; detections in other bins are excluded, not penalized.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lrpd/geometry.hpp"
#include "lrpd/kitti_io.hpp"

namespace lrpd {

// ---------------------------------------------------------------------------
// Configuration types
// ---------------------------------------------------------------------------

// Bin edges; bin i is [edges[i], edges[i+1]). The last edge may be +inf.
struct RangeBins {
  std::vector<double> edges{0.0, 10.0, 20.0, 30.0, std::numeric_limits<double>::infinity()};

  void validate() const {
    if (edges.size() < 2) throw InvalidArgument("range bins need at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (!(edges[i] > edges[i - 1])) throw InvalidArgument("range bin edges must be strictly increasing");
    }
  }

  std::size_t size() const { return edges.size() - 1; }
  double lo(std::size_t i) const { return edges[i]; }
  double hi(std::size_t i) const { return edges[i + 1]; }
  bool in_bin(std::size_t i, double range) const { return range >= lo(i) && range < hi(i); }

  std::optional<std::size_t> bin_of(double range) const {
    for (std::size_t i = 0; i < size(); ++i) {
      if (in_bin(i, range)) return i;
    }
    return std::nullopt;
  }

  std::string label(std::size_t i) const {
    const auto num = [](double v) {
      std::string s;
      detail::append_exact(s, v);
      return s;
    };
    if (std::isinf(hi(i))) return num(lo(i)) + "+";
    return num(lo(i)) + "-" + num(hi(i));
  }
};

struct MatchCriterion {
  enum class Mode { kBevIou, kEuclidean3d };
  Mode mode = Mode::kBevIou;
  double threshold = 0.5;

  static MatchCriterion bev_iou(double t = 0.5) { return {Mode::kBevIou, t}; }
  static MatchCriterion euclidean(double meters = 1.0) { return {Mode::kEuclidean3d, meters}; }

  void validate() const {
    if (!(threshold > 0.0)) throw InvalidArgument("match threshold must be > 0");
    if (mode == Mode::kBevIou && threshold > 1.0) throw InvalidArgument("IoU threshold must be <= 1");
  }

  // Larger is better: IoU, or negated center distance.
  double similarity(const Box3D& det, const Box3D& gt) const {
    return mode == Mode::kBevIou ? ::lrpd::bev_iou(det, gt) : -center_distance(det, gt);
  }

  bool accepts(double sim) const { return mode == Mode::kBevIou ? sim >= threshold : -sim <= threshold; }

  std::string_view name() const { return mode == Mode::kBevIou ? "bev_iou" : "euclidean_3d"; }
};

struct DifficultyFilter {
  std::string name = "moderate";
  double min_bbox_height = 25.0;  // pixels
  int max_occlusion = 1;
  double max_truncation = 0.30;

  static DifficultyFilter easy() { return {"easy", 40.0, 0, 0.15}; }
  static DifficultyFilter moderate() { return {"moderate", 25.0, 1, 0.30}; }
  static DifficultyFilter hard() { return {"hard", 25.0, 2, 0.50}; }
  // Accepts every object.
  static DifficultyFilter all() { return {"all", 0.0, 3, 1.0}; }

  static std::optional<DifficultyFilter> preset(std::string_view n) {
    if (n == "easy") return easy();
    if (n == "moderate") return moderate();
    if (n == "hard") return hard();
    if (n == "all") return all();
    return std::nullopt;
  }
};

// One object as seen by the evaluator (ground truth or detection).
struct EvalObject {
  Box3D box;
  double bbox_height = 0.0;
  int occluded = 0;
  double truncated = 0.0;
  double score = 1.0;
};

inline EvalObject eval_object(const LabelRecord& r) {
  EvalObject o;
  o.box = label_to_box(r);
  o.bbox_height = r.bbox_height();
  o.occluded = r.occluded;
  o.truncated = r.truncated;
  o.score = r.score.value_or(1.0);
  o.box.score = o.score;
  return o;
}

struct EvalFrame {
  std::string frame_id;
  std::vector<EvalObject> gts;
  std::vector<EvalObject> dets;
};

inline EvalFrame eval_frame(std::string frame_id, std::span<const LabelRecord> gts,
                            std::span<const LabelRecord> dets) {
  EvalFrame f;
  f.frame_id = std::move(frame_id);
  for (const auto& r : gts) f.gts.push_back(eval_object(r));
  for (const auto& r : dets) f.dets.push_back(eval_object(r));
  return f;
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

enum class GtRole { kValid, kIgnored, kExcluded };

inline GtRole gt_role(const EvalObject& gt, const DifficultyFilter& filter) {
  switch (gt.box.class_id) {
    case kPedestrian:
      if (gt.bbox_height >= filter.min_bbox_height && gt.occluded <= filter.max_occlusion &&
          gt.truncated <= filter.max_truncation) {
        return GtRole::kValid;
      }
      return GtRole::kIgnored;
    case kPersonSitting:
    case kCyclist:
      return GtRole::kIgnored;
    default:
      return GtRole::kExcluded;
  }
}

enum class DetStatus { kTruePositive, kFalsePositive, kIgnored };

struct DetResult {
  std::size_t det_index = 0;
  double score = 0.0;
  DetStatus status = DetStatus::kFalsePositive;
  int gt_index = -1;      // matched ground truth (valid or ignored)
  double distance = 0.0;  // 3D center error for true positives
};

struct FrameMatch {
  std::vector<DetResult> dets;        // pedestrian detections in processing order
  std::vector<int> gt_match;          // per ground truth: det index or -1
  std::vector<std::size_t> unmatched_gts;  // valid ground truth left unmatched
  int num_valid_gt = 0;
};

/// Greedy one-to-one matching in descending score order. Each detection
/// takes the most similar unmatched valid ground truth meeting the threshold;
/// failing that an unmatched ignored one (and is then ignored itself);
/// otherwise it is a false positive.
inline FrameMatch match_frame(std::span<const EvalObject> dets, std::span<const EvalObject> gts,
                              const MatchCriterion& criterion,
                              const DifficultyFilter& filter = DifficultyFilter::all()) {
  FrameMatch m;
  m.gt_match.assign(gts.size(), -1);
  std::vector<GtRole> roles;
  roles.reserve(gts.size());
  for (const auto& g : gts) {
    roles.push_back(gt_role(g, filter));
    if (roles.back() == GtRole::kValid) ++m.num_valid_gt;
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].box.class_id == kPedestrian) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  for (const std::size_t di : order) {
    const EvalObject& d = dets[di];
    DetResult r{di, d.score, DetStatus::kFalsePositive, -1, 0.0};
    if (d.bbox_height < filter.min_bbox_height) {
      r.status = DetStatus::kIgnored;
      m.dets.push_back(r);
      continue;
    }
    int best_valid = -1;
    int best_ignored = -1;
    double sim_valid = -std::numeric_limits<double>::infinity();
    double sim_ignored = -std::numeric_limits<double>::infinity();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (roles[gi] == GtRole::kExcluded || m.gt_match[gi] >= 0) continue;
      const double sim = criterion.similarity(d.box, gts[gi].box);
      if (!criterion.accepts(sim)) continue;
      if (roles[gi] == GtRole::kValid) {
        if (sim > sim_valid) {
          sim_valid = sim;
          best_valid = static_cast<int>(gi);
        }
      } else if (sim > sim_ignored) {
        sim_ignored = sim;
        best_ignored = static_cast<int>(gi);
      }
    }
    if (best_valid >= 0) {
      r.gt_index = best_valid;
      r.status = DetStatus::kTruePositive;
      r.distance = center_distance(d.box, gts[static_cast<std::size_t>(best_valid)].box);
    } else if (best_ignored >= 0) {
      r.gt_index = best_ignored;
      r.status = DetStatus::kIgnored;
    }
    if (r.gt_index >= 0) m.gt_match[static_cast<std::size_t>(r.gt_index)] = static_cast<int>(di);
    m.dets.push_back(r);
  }

  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    if (roles[gi] == GtRole::kValid && m.gt_match[gi] < 0) m.unmatched_gts.push_back(gi);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Precision / recall
// ---------------------------------------------------------------------------

struct PrPoint {
  double threshold = 0.0;  // detections with score >= threshold are kept
  int tp = 0;
  int fp = 0;
  double precision = 0.0;
  double recall = 0.0;
  double error_sum = 0.0;  // summed 3D center error of the true positives
};

struct PrCurve {
  std::vector<PrPoint> points;  // descending threshold, one per distinct score
  int num_gt = 0;
};

/// Cumulative PR curve over every frame's matches; one point per distinct
/// detection score.
inline PrCurve pr_curve(std::span<const FrameMatch> matches) {
  struct Entry {
    double score;
    std::size_t frame;
    std::size_t det;
    bool tp;
    double distance;
  };
  std::vector<Entry> entries;
  PrCurve curve;
  for (std::size_t f = 0; f < matches.size(); ++f) {
    curve.num_gt += matches[f].num_valid_gt;
    for (const auto& r : matches[f].dets) {
      if (r.status == DetStatus::kIgnored) continue;
      entries.push_back({r.score, f, r.det_index, r.status == DetStatus::kTruePositive, r.distance});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.det < b.det;
  });

  PrPoint acc;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.tp) {
      ++acc.tp;
      acc.error_sum += e.distance;
    } else {
      ++acc.fp;
    }
    if (i + 1 == entries.size() || entries[i + 1].score != e.score) {
      acc.threshold = e.score;
      acc.precision = static_cast<double>(acc.tp) / (acc.tp + acc.fp);
      acc.recall = curve.num_gt > 0 ? static_cast<double>(acc.tp) / curve.num_gt : 0.0;
      curve.points.push_back(acc);
    }
  }
  return curve;
}

enum class Interpolation { k40Point, k11Point };

/// Interpolated AP: mean over recall levels r of the best precision among
/// curve points with recall >= r. 40-point uses r = 1/40..40/40, 11-point
/// r = 0, 0.1..1. Zero without ground truth.
inline double average_precision(const PrCurve& curve, Interpolation interp = Interpolation::k40Point) {
  if (curve.num_gt <= 0) return 0.0;
  const int steps = interp == Interpolation::k40Point ? 40 : 10;
  const int first = interp == Interpolation::k40Point ? 1 : 0;
  double sum = 0.0;
  for (int i = first; i <= steps; ++i) {
    double best = 0.0;
    for (const auto& p : curve.points) {
      // recall >= i / steps, compared exactly in integers
      if (static_cast<long long>(p.tp) * steps >= static_cast<long long>(i) * curve.num_gt) {
        best = std::max(best, p.precision);
      }
    }
    sum += best;
  }
  return sum / (steps - first + 1);
}

struct BestF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_error = 0.0;  // meters, over true positives at the operating point
  double threshold = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  bool empty = true;  // no scored detections
};

/// Operating point with the highest F1 (ties: highest threshold).
inline BestF1 best_f1(const PrCurve& curve) {
  BestF1 out;
  out.fn = curve.num_gt;
  for (const auto& p : curve.points) {
    const double denom = p.precision + p.recall;
    const double f1 = denom > 0.0 ? 2.0 * p.precision * p.recall / denom : 0.0;
    if (out.empty || f1 > out.f1) {
      out.empty = false;
      out.f1 = f1;
      out.precision = p.precision;
      out.recall = p.recall;
      out.threshold = p.threshold;
      out.tp = p.tp;
      out.fp = p.fp;
      out.fn = curve.num_gt - p.tp;
      out.mean_error = p.tp > 0 ? p.error_sum / p.tp : 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Range-binned evaluation
// ---------------------------------------------------------------------------

struct BinResult {
  std::string difficulty;
  std::string range;  // bin label, or "all"
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double ap = 0.0;
  BestF1 f1;
  int num_gt = 0;
  int num_det = 0;   // pedestrian detections inside the bin
  bool populated = false;  // at least one valid ground truth in the bin
};

inline std::vector<EvalObject> restrict_to_range(std::span<const EvalObject> objs, double lo, double hi) {
  std::vector<EvalObject> out;
  for (const auto& o : objs) {
    const double r = planar_range(o.box);
    if (r >= lo && r < hi) out.push_back(o);
  }
  return out;
}

/// AP and best-F1 for the objects whose planar range lies in [lo, hi).
inline BinResult evaluate_range(std::span<const EvalFrame> frames, double lo, double hi,
                                const MatchCriterion& criterion, const DifficultyFilter& filter,
                                Interpolation interp = Interpolation::k40Point) {
  criterion.validate();
  std::vector<FrameMatch> matches;
  matches.reserve(frames.size());
  BinResult res;
  res.difficulty = filter.name;
  res.lo = lo;
  res.hi = hi;
  for (const auto& f : frames) {
    const auto gts = restrict_to_range(f.gts, lo, hi);
    const auto dets = restrict_to_range(f.dets, lo, hi);
    res.num_det += static_cast<int>(std::count_if(dets.begin(), dets.end(), [](const EvalObject& d) {
      return d.box.class_id == kPedestrian;
    }));
    matches.push_back(match_frame(dets, gts, criterion, filter));
  }
  const PrCurve curve = pr_curve(matches);
  res.num_gt = curve.num_gt;
  res.populated = curve.num_gt > 0;
  res.ap = average_precision(curve, interp);
  res.f1 = best_f1(curve);
  return res;
}

/// One BinResult per range bin, in bin order.
inline std::vector<BinResult> range_binned_map(std::span<const EvalFrame> frames, const RangeBins& bins,
                                               const MatchCriterion& criterion, const DifficultyFilter& filter,
                                               Interpolation interp = Interpolation::k40Point) {
  bins.validate();
  std::vector<BinResult> out;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    auto r = evaluate_range(frames, bins.lo(i), bins.hi(i), criterion, filter, interp);
    r.range = bins.label(i);
    out.push_back(std::move(r));
  }
  return out;
}

/// Precision, recall and F1 at the best-F1 operating point plus the mean 3D
/// center error of its true positives, over all ranges.
inline BestF1 best_f1_report(std::span<const EvalFrame> frames,
                             const MatchCriterion& criterion = MatchCriterion::euclidean(1.0),
                             const DifficultyFilter& filter = DifficultyFilter::all()) {
  return evaluate_range(frames, 0.0, std::numeric_limits<double>::infinity(), criterion, filter).f1;
}

struct EvalConfig {
  RangeBins bins;
  MatchCriterion criterion = MatchCriterion::bev_iou(0.5);
  MatchCriterion f1_criterion = MatchCriterion::euclidean(1.0);
  std::vector<DifficultyFilter> difficulties{DifficultyFilter::easy(), DifficultyFilter::moderate(),
                                             DifficultyFilter::hard()};
  Interpolation interpolation = Interpolation::k40Point;
};

struct EvalReport {
  std::vector<BinResult> rows;  // per difficulty: every bin, then "all"
  BestF1 overall;               // f1_criterion, every object, all ranges
  std::string criterion;
  std::string f1_criterion;
  int frames = 0;
  std::vector<std::string> warnings;
};

inline EvalReport evaluate(std::span<const EvalFrame> frames, const EvalConfig& cfg) {
  EvalReport rep;
  rep.frames = static_cast<int>(frames.size());
  for (const auto& d : cfg.difficulties) {
    for (auto& r : range_binned_map(frames, cfg.bins, cfg.criterion, d, cfg.interpolation)) {
      rep.rows.push_back(std::move(r));
    }
    auto all = evaluate_range(frames, 0.0, std::numeric_limits<double>::infinity(), cfg.criterion, d,
                              cfg.interpolation);
    all.range = "all";
    rep.rows.push_back(std::move(all));
  }
  rep.overall = best_f1_report(frames, cfg.f1_criterion, DifficultyFilter::all());
  const auto crit = [](const MatchCriterion& c) {
    std::string s(c.name());
    s += '@';
    detail::append_exact(s, c.threshold);
    return s;
  };
  rep.criterion = crit(cfg.criterion);
  rep.f1_criterion = crit(cfg.f1_criterion);
  return rep;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const BestF1& f) {
  nlohmann::ordered_json j;
  j["precision"] = f.precision;
  j["recall"] = f.recall;
  j["f1"] = f.f1;
  j["mean_error_m"] = f.mean_error;
  j["threshold"] = f.threshold;
  j["tp"] = f.tp;
  j["fp"] = f.fp;
  j["fn"] = f.fn;
  j["empty"] = f.empty;
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& rep) {
  nlohmann::ordered_json j;
  j["frames"] = rep.frames;
  j["criterion"] = rep.criterion;
  j["f1_criterion"] = rep.f1_criterion;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    nlohmann::ordered_json jr;
    jr["difficulty"] = r.difficulty;
    jr["range"] = r.range;
    jr["lo"] = r.lo;
    jr["hi"] = std::isinf(r.hi) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.hi);
    jr["ap"] = r.ap;
    jr["num_gt"] = r.num_gt;
    jr["num_det"] = r.num_det;
    jr["populated"] = r.populated;
    jr["best_f1"] = to_json(r.f1);
    j["rows"].push_back(std::move(jr));
  }
  j["overall"] = to_json(rep.overall);
  j["warnings"] = rep.warnings;
  return j;
}

inline std::string to_csv(const EvalReport& rep) {
  std::string out = "difficulty,range,lo,hi,ap,precision,recall,f1,mean_error_m,tp,fp,fn,num_gt,num_det,populated\n";
  for (const auto& r : rep.rows) {
    const auto num = [&](double v) {
      detail::append_exact(out, v);
      out += ',';
    };
    out += r.difficulty + ',' + r.range + ',';
    num(r.lo);
    if (std::isinf(r.hi)) {
      out += "inf,";
    } else {
      num(r.hi);
    }
    num(r.ap);
    num(r.f1.precision);
    num(r.f1.recall);
    num(r.f1.f1);
    num(r.f1.mean_error);
    out += std::to_string(r.f1.tp) + ',' + std::to_string(r.f1.fp) + ',' + std::to_string(r.f1.fn) + ',' +
           std::to_string(r.num_gt) + ',' + std::to_string(r.num_det) + ',' + (r.populated ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace lrpd

#endif  // LRPD_EVAL_HPP
