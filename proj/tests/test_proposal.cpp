#include <set>

#include <gtest/gtest.h>

#include "lrpd/proposal.hpp"
#include "lrpd/synthetic.hpp"

namespace lrpd {
namespace {

SyntheticFrame single_pedestrian(double x, double z, int points, std::uint64_t seed = 5) {
  SyntheticSpec spec;
  SyntheticPedestrian p;
  p.x = x;
  p.z = z;
  p.points = points;
  spec.pedestrians = {p};
  return generate_synthetic_frame(spec, seed);
}

TEST(Assign, AllObjectPointsOfSyntheticPedestrian) {
  const auto sf = single_pedestrian(0.0, 35.0, 18);
  const auto a = assign_points_to_instances(sf.frame);
  ASSERT_EQ(a.size(), 18u);
  std::set<std::size_t> got;
  for (const auto& x : a) {
    EXPECT_EQ(x.instance_id, 1);
    got.insert(x.point_index);
  }
  EXPECT_EQ(got, std::set<std::size_t>(sf.object_points[0].begin(), sf.object_points[0].end()));
}

TEST(Assign, OutOfImageAndEmptyMasks) {
  const auto calib = synthetic_calibration();
  InstanceMaskSet masks;
  masks.image = calib.image;
  masks.instances.push_back({1, "Pedestrian", 1.0, {{0, static_cast<std::uint64_t>(calib.image.width) * calib.image.height}}});
  const std::vector<Point3> pts{{0, 0, 10}, {0, 0, -10}, {500, 0, 10}};
  const auto a = assign_points_to_instances(pts, calib, masks);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].point_index, 0u);
  masks.instances.clear();
  EXPECT_TRUE(assign_points_to_instances(pts, calib, masks).empty());
}

TEST(Generate, OneProposalPerPointWithInstanceCounts) {
  const auto sf = single_pedestrian(0.0, 35.0, 18);
  const auto cam = to_camera_frame(sf.frame.cloud, sf.frame.calib);
  const auto a = assign_points_to_instances(sf.frame);
  const MeanBoxConfig mb;
  const auto props = generate_proposals(a, cam, mb);
  ASSERT_EQ(props.size(), 18u);
  for (std::size_t i = 0; i < props.size(); ++i) {
    const auto& p = props[i];
    EXPECT_EQ(p.inlier_count, 18);
    EXPECT_GE(p.box_inlier_count, 1);  // its own point
    EXPECT_EQ(p.box.l, mb.l);
    EXPECT_EQ(p.box.w, mb.w);
    EXPECT_EQ(p.box.h, mb.h);
    EXPECT_EQ(p.box.theta, 0.0);
    EXPECT_EQ(p.box.center(), cam[a[i].point_index]);
  }
}

TEST(Generate, SinglePointAndEmpty) {
  const std::vector<Point3> cam{{1, 1, 20}};
  const std::vector<PointAssignment> a{{0, 3}};
  const auto props = generate_proposals(a, cam, {});
  ASSERT_EQ(props.size(), 1u);
  EXPECT_EQ(props[0].inlier_count, 1);
  EXPECT_EQ(props[0].instance_id, 3);
  EXPECT_TRUE(generate_proposals({}, cam, {}).empty());
}

TEST(Nms, SingleInSingleOut) {
  Proposal p;
  const std::vector<Proposal> in{p};
  EXPECT_EQ(instance_nms(in), in);
}

TEST(Nms, CoincidentFootprintsCollapseToOne) {
  std::vector<Proposal> in;
  for (int i = 0; i < 18; ++i) {
    Proposal p;
    p.box = {0.0, 1.0 + 0.01 * i, 20.0, 0.85, 0.66, 1.76, 0.0, kPedestrian, 1.0};
    p.instance_id = 4;
    p.inlier_count = 18;
    p.box_inlier_count = 18;
    p.source_point_index = static_cast<std::size_t>(30 - i);
    in.push_back(p);
  }
  const auto out = instance_nms(in);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].source_point_index, 13u);  // tie: lowest source index
}

TEST(Nms, HigherScoreWinsWithinInstance) {
  Proposal a, b;
  a.box.cz = b.box.cz = 10;
  b.box.cx = 0.1;
  a.box_inlier_count = 3;
  b.box_inlier_count = 5;
  a.source_point_index = 0;
  b.source_point_index = 1;
  const std::vector<Proposal> in{a, b};
  const auto out = instance_nms(in);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].source_point_index, 1u);
}

TEST(Nms, NeverSuppressesAcrossInstances) {
  Proposal a, b;
  a.instance_id = 1;
  b.instance_id = 2;
  const std::vector<Proposal> in{a, b};
  EXPECT_EQ(instance_nms(in).size(), 2u);
}

TEST(Nms, TwoPedestriansHalfMeterApartKeepBoth) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SyntheticSpec spec;
    spec.pedestrians = {{-0.25, 20.0}, {0.25, 20.0}};
    const auto sf = generate_synthetic_frame(spec, seed);
    const auto fp = propose(sf.frame, {});
    std::set<int> ids;
    for (const auto& p : fp.kept) ids.insert(p.instance_id);
    std::set<int> assigned;
    for (const auto& a : fp.assignments) assigned.insert(a.instance_id);
    EXPECT_EQ(ids, assigned) << "seed " << seed;
    EXPECT_EQ(assigned.size(), 2u) << "seed " << seed;
  }
}

TEST(NmsProperty, SurvivorsPairwiseBelowThresholdAndEveryInstanceKept) {
  const SyntheticCorpusConfig cfg;
  for (int i = 0; i < 40; ++i) {
    const auto spec = random_scene_spec(cfg, 99, i);
    const auto sf = generate_synthetic_frame(spec, derive_seed(99, spec.frame_id, 1));
    const auto fp = propose(sf.frame, {});
    std::set<int> assigned, kept;
    for (const auto& a : fp.assignments) assigned.insert(a.instance_id);
    for (const auto& p : fp.kept) kept.insert(p.instance_id);
    EXPECT_EQ(assigned, kept);
    for (std::size_t a = 0; a < fp.kept.size(); ++a) {
      for (std::size_t b = a + 1; b < fp.kept.size(); ++b) {
        if (fp.kept[a].instance_id != fp.kept[b].instance_id) continue;
        EXPECT_LT(bev_iou(fp.kept[a].box, fp.kept[b].box), 0.5);
      }
    }
    // Deterministic.
    EXPECT_EQ(propose(sf.frame, {}).kept, fp.kept);
  }
}

TEST(ProposalStats, Histogram) {
  ProposalStats st;
  FrameProposals fp;
  fp.assignments = {{0, 1}, {1, 1}, {2, 2}};
  Proposal p;
  p.instance_id = 1;
  fp.kept = {p, p};
  p.instance_id = 2;
  fp.kept.push_back(p);
  fp.raw = fp.kept;
  accumulate(st, fp);
  EXPECT_EQ(st.instances, 2);
  EXPECT_EQ(st.survivors_per_instance.at(2), 1);
  EXPECT_EQ(st.survivors_per_instance.at(1), 1);
}

}  // namespace
}  // namespace lrpd
