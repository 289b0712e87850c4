// Walks one synthetic frame through the library: proposals, augmentation,
// voxel encoding, and a range-binned evaluation of the proposals.

#include <iomanip>
#include <iostream>

#include "lrpd/augment.hpp"
#include "lrpd/eval.hpp"
#include "lrpd/proposal.hpp"
#include "lrpd/synthetic.hpp"
#include "lrpd/voxel.hpp"

int main() {
  using namespace lrpd;

  SyntheticSpec spec;
  spec.pedestrians = {{-2.0, 8.0}, {1.0, 18.0}, {-0.25, 35.0}, {0.25, 35.0}};
  const auto sf = generate_synthetic_frame(spec, 42);
  const auto cam = to_camera_frame(sf.frame.cloud, sf.frame.calib);

  const auto fp = propose(sf.frame, MeanBoxConfig{});
  std::cout << sf.frame.cloud.size() << " points, " << fp.assignments.size() << " in masks, " << fp.raw.size()
            << " proposals, " << fp.kept.size() << " after per-instance NMS\n";

  std::cout << std::fixed << std::setprecision(2);
  for (std::size_t i = 0; i < fp.kept.size(); ++i) {
    const auto& p = fp.kept[i];
    const auto copies = augment(p, cam, sf.boxes, AugmentConfig{}, AugmentMode::kCombined, derive_seed(42, "demo", i));
    int positives = 0;
    for (const auto& c : copies) positives += c.label == AugmentLabel::kPositive ? 1 : 0;
    const auto grid = voxelize(crop_cloud(cam, p.box.center(), CropExtent{}), p.box.center());
    std::size_t occupied = 0;
    for (const auto n : grid.counts()) occupied += n > 0 ? 1 : 0;
    std::cout << "instance " << p.instance_id << " at " << planar_range(p.box) << " m: " << copies.size()
              << " augmented (" << positives << " positive, grounded " << (copies[0].grounded ? "yes" : "no")
              << "), " << occupied << " occupied voxels\n";
  }

  // Proposals scored by their inlier count against the ground truth.
  EvalFrame ef;
  ef.frame_id = sf.frame.frame_id;
  for (const auto& b : sf.boxes) {
    EvalObject g;
    g.box = b;
    g.bbox_height = 100.0;
    ef.gts.push_back(g);
  }
  for (const auto& p : fp.kept) {
    EvalObject d;
    d.box = p.box;
    d.score = d.box.score = p.box_inlier_count;
    d.bbox_height = 100.0;
    ef.dets.push_back(d);
  }
  const std::vector<EvalFrame> frames{ef};
  for (const auto& r : range_binned_map(frames, RangeBins{}, MatchCriterion::bev_iou(0.5), DifficultyFilter::all())) {
    std::cout << "range " << r.range << ": AP " << r.ap << (r.populated ? "" : " (empty bin)") << '\n';
  }
  const auto f1 = best_f1_report(frames);
  std::cout << "best F1 " << f1.f1 << " (P " << f1.precision << ", R " << f1.recall << ", mean error "
            << f1.mean_error << " m)\n";
}
