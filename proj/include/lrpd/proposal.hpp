#ifndef LRPD_PROPOSAL_HPP
#define LRPD_PROPOSAL_HPP

// Instance-mask-driven proposal generation:
//   1. instance masks are ingested (kitti_io)
//   2. LiDAR points are projected and assigned to the mask they fall in
//   3. every assigned point becomes a mean-sized box proposal
//   4. BEV NMS runs separately inside each instance

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "lrpd/geometry.hpp"
#include "lrpd/kitti_io.hpp"

namespace lrpd {

// Mean pedestrian box. The defaults are the KITTI training-split pedestrian
// means; mean_box_from_labels() recomputes them from any label corpus.
struct MeanBoxConfig {
  double l = 0.8453;
  double w = 0.6602;
  double h = 1.7607;

  void validate() const {
    if (!(l > 0.0 && w > 0.0 && h > 0.0)) throw InvalidArgument("mean box dims must be positive");
  }
};

struct Proposal {
  Box3D box;
  int instance_id = 0;
  // Number of assigned points that share this proposal's instance id.
  int inlier_count = 1;
  // Number of those points that lie inside this proposal's box; the NMS score.
  int box_inlier_count = 1;
  std::size_t source_point_index = 0;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

struct PointAssignment {
  std::size_t point_index = 0;
  int instance_id = 0;

  friend bool operator==(const PointAssignment&, const PointAssignment&) = default;
};

/// Maps each in-image point to the instance whose mask holds its floored
/// pixel. Points outside every mask are dropped. Ordered by point index.
inline std::vector<PointAssignment> assign_points_to_instances(std::span<const Point3> camera_points,
                                                                const Calibration& calib,
                                                                const InstanceMaskSet& masks) {
  std::vector<PointAssignment> out;
  if (masks.instances.empty()) return out;
  const MaskRaster raster(masks);
  for (const auto& pp : project_points(camera_points, calib)) {
    const auto id = raster.at(static_cast<int>(std::floor(pp.u)), static_cast<int>(std::floor(pp.v)));
    if (id) out.push_back({pp.index, *id});
  }
  return out;
}

inline std::vector<PointAssignment> assign_points_to_instances(const Frame& frame) {
  if (!frame.masks) return {};
  const auto cam = to_camera_frame(frame.cloud, frame.calib);
  return assign_points_to_instances(cam, frame.calib, *frame.masks);
}

/// One axis-aligned mean-size box per assigned point, centered on the point.
inline std::vector<Proposal> generate_proposals(std::span<const PointAssignment> assignments,
                                                std::span<const Point3> camera_points,
                                                const MeanBoxConfig& mean_box) {
  mean_box.validate();
  std::map<int, std::vector<std::size_t>> members;  // instance -> point indices
  for (const auto& a : assignments) members[a.instance_id].push_back(a.point_index);

  std::vector<Proposal> out;
  out.reserve(assignments.size());
  for (const auto& a : assignments) {
    const Point3& p = camera_points[a.point_index];
    Proposal prop;
    prop.box = Box3D{p.x, p.y, p.z, mean_box.l, mean_box.w, mean_box.h, 0.0, kPedestrian, 0.0};
    prop.instance_id = a.instance_id;
    prop.source_point_index = a.point_index;
    const auto& group = members[a.instance_id];
    prop.inlier_count = static_cast<int>(group.size());
    prop.box_inlier_count = static_cast<int>(std::count_if(
        group.begin(), group.end(), [&](std::size_t i) { return contains(prop.box, camera_points[i]); }));
    prop.box.score = static_cast<double>(prop.box_inlier_count) / prop.inlier_count;
    out.push_back(prop);
  }
  return out;
}

/// Greedy BEV NMS run independently per instance id. Within an instance the
/// proposal with more same-instance points inside its box wins; ties go to
/// the lower source point index. Output is grouped by ascending instance id.
inline std::vector<Proposal> instance_nms(std::span<const Proposal> proposals,
                                          double iou_threshold = 0.5) {
  std::map<int, std::vector<const Proposal*>> groups;
  for (const auto& p : proposals) groups[p.instance_id].push_back(&p);

  std::vector<Proposal> kept;
  for (auto& [id, group] : groups) {
    std::stable_sort(group.begin(), group.end(), [](const Proposal* a, const Proposal* b) {
      if (a->box_inlier_count != b->box_inlier_count) return a->box_inlier_count > b->box_inlier_count;
      if (a->inlier_count != b->inlier_count) return a->inlier_count > b->inlier_count;
      return a->source_point_index < b->source_point_index;
    });
    const std::size_t first = kept.size();
    for (const Proposal* cand : group) {
      const bool suppressed = std::any_of(kept.begin() + static_cast<std::ptrdiff_t>(first), kept.end(),
                                          [&](const Proposal& k) { return bev_iou(k.box, cand->box) >= iou_threshold; });
      if (!suppressed) kept.push_back(*cand);
    }
  }
  return kept;
}

struct ProposalStats {
  // survivors_per_instance[n] = number of instances with exactly n survivors.
  std::map<int, int> survivors_per_instance;
  int instances = 0;
  int proposals_before_nms = 0;
  int proposals_after_nms = 0;
};

struct FrameProposals {
  std::vector<PointAssignment> assignments;
  std::vector<Proposal> raw;
  std::vector<Proposal> kept;
};

/// Runs assignment, generation and per-instance NMS on one frame.
inline FrameProposals propose(const Frame& frame, const MeanBoxConfig& mean_box,
                              double iou_threshold = 0.5) {
  FrameProposals out;
  if (!frame.masks) return out;
  const auto cam = to_camera_frame(frame.cloud, frame.calib);
  out.assignments = assign_points_to_instances(cam, frame.calib, *frame.masks);
  out.raw = generate_proposals(out.assignments, cam, mean_box);
  out.kept = instance_nms(out.raw, iou_threshold);
  return out;
}

inline void accumulate(ProposalStats& stats, const FrameProposals& fp) {
  std::map<int, int> per_instance;
  for (const auto& a : fp.assignments) per_instance.try_emplace(a.instance_id, 0);
  for (const auto& p : fp.kept) ++per_instance[p.instance_id];
  for (const auto& [id, n] : per_instance) ++stats.survivors_per_instance[n];
  stats.instances += static_cast<int>(per_instance.size());
  stats.proposals_before_nms += static_cast<int>(fp.raw.size());
  stats.proposals_after_nms += static_cast<int>(fp.kept.size());
}

}  // namespace lrpd

#endif  // LRPD_PROPOSAL_HPP
