#ifndef LRPD_AUGMENT_HPP
#define LRPD_AUGMENT_HPP

// Proposal augmentation for training the refinement stage, and the
// regression-target codec shared with it.
//
//   random    original + N copies displaced uniformly per axis
//   grounding snap to the lowest return in a pillar, then displace in x/z
//   combined  grounding only beyond grounding_min_range, random otherwise

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrpd/geometry.hpp"
#include "lrpd/proposal.hpp"
#include "lrpd/random.hpp"

namespace lrpd {

struct AugmentConfig {
  int copies_per_proposal = 9;
  double displacement_range = 0.5;  // +/- meters, per axis
  double positive_iou = 0.5;
  double close_negative_min_iou = 0.05;
  double grounding_min_range = 10.0;
  std::optional<double> pillar_radius;  // default: max(l, w) of the proposal

  void validate() const {
    if (copies_per_proposal < 0) throw InvalidArgument("copies_per_proposal must be >= 0");
    if (!(displacement_range >= 0.0)) throw InvalidArgument("displacement_range must be >= 0");
    if (!(close_negative_min_iou >= 0.0 && close_negative_min_iou < positive_iou && positive_iou <= 1.0)) {
      throw InvalidArgument("need 0 <= close_negative_min_iou < positive_iou <= 1");
    }
    if (pillar_radius && !(*pillar_radius > 0.0)) throw InvalidArgument("pillar_radius must be > 0");
  }
};

enum class AugmentLabel { kPositive, kCloseNegative, kNegative };

inline std::string_view to_string(AugmentLabel l) {
  switch (l) {
    case AugmentLabel::kPositive: return "positive";
    case AugmentLabel::kCloseNegative: return "close_negative";
    case AugmentLabel::kNegative: return "negative";
  }
  return "negative";
}

enum class AugmentMode { kRandom, kGrounding, kCombined };

inline std::optional<AugmentMode> parse_augment_mode(std::string_view s) {
  if (s == "random") return AugmentMode::kRandom;
  if (s == "grounding") return AugmentMode::kGrounding;
  if (s == "combined") return AugmentMode::kCombined;
  return std::nullopt;
}

struct LabeledProposal {
  Proposal proposal;
  AugmentLabel label = AugmentLabel::kNegative;
  double max_iou = 0.0;
  int gt_index = -1;   // ground truth with the highest BEV IoU, -1 if none overlaps
  int copy_index = 0;  // 0 is the undisplaced original
  bool grounded = false;
};

struct IouLabel {
  AugmentLabel label = AugmentLabel::kNegative;
  double max_iou = 0.0;
  int gt_index = -1;
};

inline IouLabel label_by_iou(const Box3D& box, std::span<const Box3D> gts, const AugmentConfig& cfg) {
  IouLabel out;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const double iou = bev_iou(box, gts[i]);
    if (iou > out.max_iou) {
      out.max_iou = iou;
      out.gt_index = static_cast<int>(i);
    }
  }
  if (out.max_iou >= cfg.positive_iou) {
    out.label = AugmentLabel::kPositive;
  } else if (out.max_iou >= cfg.close_negative_min_iou) {
    out.label = AugmentLabel::kCloseNegative;
  }
  return out;
}

/// Original proposal followed by copies_per_proposal uniformly displaced
/// copies, each labeled by its best BEV IoU against the ground truth.
/// With `keep_height` the vertical offset is always zero.
inline std::vector<LabeledProposal> random_displace(const Proposal& proposal, std::span<const Box3D> gts,
                                                    const AugmentConfig& cfg, std::uint64_t seed,
                                                    bool keep_height = false) {
  cfg.validate();
  Rng rng(seed);
  std::vector<LabeledProposal> out;
  out.reserve(static_cast<std::size_t>(cfg.copies_per_proposal) + 1);
  for (int copy = 0; copy <= cfg.copies_per_proposal; ++copy) {
    Proposal p = proposal;
    if (copy > 0) {
      const double r = cfg.displacement_range;
      // Draw all three offsets even when one is unused so the x/z stream
      // does not depend on keep_height.
      const double dx = rng.uniform(-r, r);
      const double dy = rng.uniform(-r, r);
      const double dz = rng.uniform(-r, r);
      p.box.cx += dx;
      p.box.cy += keep_height ? 0.0 : dy;
      p.box.cz += dz;
    }
    const auto lab = label_by_iou(p.box, gts, cfg);
    out.push_back({p, lab.label, lab.max_iou, lab.gt_index, copy, false});
  }
  return out;
}

/// Snaps the box bottom onto the lowest return (largest y) within the
/// pillar around the proposal center. Unchanged when the pillar is empty.
inline Proposal ground(const Proposal& proposal, std::span<const Point3> camera_points,
                       const AugmentConfig& cfg) {
  const Box3D& b = proposal.box;
  const double radius = cfg.pillar_radius.value_or(std::max(b.l, b.w));
  const double r2 = radius * radius;
  double lowest = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& p : camera_points) {
    const double dx = p.x - b.cx;
    const double dz = p.z - b.cz;
    if (dx * dx + dz * dz <= r2 && p.y > lowest) {
      lowest = p.y;
      found = true;
    }
  }
  if (!found) return proposal;
  Proposal out = proposal;
  out.box.cy = lowest - 0.5 * b.h;
  return out;
}

/// Grounding followed by displacement restricted to the ground plane.
inline std::vector<LabeledProposal> grounded_displace(const Proposal& proposal,
                                                      std::span<const Point3> camera_points,
                                                      std::span<const Box3D> gts, const AugmentConfig& cfg,
                                                      std::uint64_t seed) {
  auto out = random_displace(ground(proposal, camera_points, cfg), gts, cfg, seed, true);
  for (auto& lp : out) lp.grounded = true;
  return out;
}

/// Grounding for proposals at planar range >= grounding_min_range, plain
/// random displacement below it.
inline std::vector<LabeledProposal> combined(const Proposal& proposal, std::span<const Point3> camera_points,
                                             std::span<const Box3D> gts, const AugmentConfig& cfg,
                                             std::uint64_t seed) {
  if (planar_range(proposal.box) >= cfg.grounding_min_range) {
    return grounded_displace(proposal, camera_points, gts, cfg, seed);
  }
  return random_displace(proposal, gts, cfg, seed);
}

inline std::vector<LabeledProposal> augment(const Proposal& proposal, std::span<const Point3> camera_points,
                                            std::span<const Box3D> gts, const AugmentConfig& cfg,
                                            AugmentMode mode, std::uint64_t seed) {
  switch (mode) {
    case AugmentMode::kRandom: return random_displace(proposal, gts, cfg, seed);
    case AugmentMode::kGrounding: return grounded_displace(proposal, camera_points, gts, cfg, seed);
    case AugmentMode::kCombined: return combined(proposal, camera_points, gts, cfg, seed);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Regression targets
// ---------------------------------------------------------------------------

struct RegressionTarget {
  int objectness = 0;
  double dx = 0.0, dy = 0.0, dz = 0.0;  // center offset, gt - proposal
  double dl = 0.0, dw = 0.0, dh = 0.0;  // size offset, gt - proposal
  double s_theta = 0.0;                 // sin of gt heading
  double c_theta = 1.0;                 // cos of gt heading

  friend bool operator==(const RegressionTarget&, const RegressionTarget&) = default;
};

inline RegressionTarget encode_target(const Box3D& proposal, const Box3D& gt, int objectness = 1) {
  RegressionTarget t;
  t.objectness = objectness;
  t.dx = gt.cx - proposal.cx;
  t.dy = gt.cy - proposal.cy;
  t.dz = gt.cz - proposal.cz;
  t.dl = gt.l - proposal.l;
  t.dw = gt.w - proposal.w;
  t.dh = gt.h - proposal.h;
  t.s_theta = std::sin(gt.theta);
  t.c_theta = std::cos(gt.theta);
  return t;
}

inline Box3D decode(const Box3D& proposal, const RegressionTarget& t) {
  Box3D b = proposal;
  b.cx = proposal.cx + t.dx;
  b.cy = proposal.cy + t.dy;
  b.cz = proposal.cz + t.dz;
  b.l = proposal.l + t.dl;
  b.w = proposal.w + t.dw;
  b.h = proposal.h + t.dh;
  b.theta = normalize_angle(std::atan2(t.s_theta, t.c_theta));
  return b;
}

}  // namespace lrpd

#endif  // LRPD_AUGMENT_HPP
