#ifndef LRPD_SYNTHETIC_HPP
#define LRPD_SYNTHETIC_HPP

// Deterministic synthetic KITTI-like frames for tests and demos.
//
// Each pedestrian gets `points` LiDAR returns on the visible side of its
// body (always inside its box); its instance mask is exactly the set of
// pixels those returns project to.
// Ground, ring and clutter points never land on a pedestrian's mask pixels
// or inside a pedestrian's box, so point/mask bookkeeping is exact.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "lrpd/geometry.hpp"
#include "lrpd/kitti_io.hpp"
#include "lrpd/random.hpp"

namespace lrpd {

struct SyntheticPedestrian {
  double x = 0.0;  // camera frame, meters
  double z = 10.0;
  double l = 0.84;
  double w = 0.66;
  double h = 1.76;
  double theta = 0.0;
  int points = 18;
};

struct SyntheticSpec {
  std::string frame_id = "000000";
  std::vector<SyntheticPedestrian> pedestrians;
  double ground_y = 1.65;  // ground plane height, camera frame (y down)
  int ground_points = 300;
  int ring_points_per_object = 8;  // ground returns right around each pedestrian
  int clutter_points = 200;
  ImageSize image = kKittiImageSize;
  double max_range = 60.0;
};

struct SyntheticFrame {
  Frame frame;
  std::vector<Box3D> boxes;                             // volumetric-center GT boxes
  std::vector<std::vector<std::size_t>> object_points;  // cloud indices per pedestrian
};

/// Fixed KITTI-like calibration: velodyne x-forward/y-left/z-up, a small
/// exact rectification rotation and the usual camera-2 intrinsics.
inline Calibration synthetic_calibration(ImageSize image = kKittiImageSize) {
  Calibration c;
  c.P2 << 721.5377, 0.0, 609.5593, 44.85728,  //
      0.0, 721.5377, 172.854, 0.2163791,      //
      0.0, 0.0, 1.0, 0.002745884;
  const double a = 0.01;  // rad, about the camera x axis
  c.R0_rect << 1.0, 0.0, 0.0,           //
      0.0, std::cos(a), -std::sin(a),  //
      0.0, std::sin(a), std::cos(a);
  c.Tr_velo_to_cam << 0.0, -1.0, 0.0, -0.004,  //
      0.0, 0.0, -1.0, -0.076,                  //
      1.0, 0.0, 0.0, -0.27;
  c.image = image;
  return c;
}

namespace detail {

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

inline LidarPoint to_lidar(const Calibration& calib, const Point3& cam, float reflectance) {
  const auto v = calib.cam_to_velo(cam);
  return {static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z()), reflectance};
}

inline std::optional<std::uint64_t> pixel_of(const Calibration& calib, const Point3& cam) {
  const auto px = calib.project(cam);
  if (!px || !calib.in_image((*px)[0], (*px)[1])) return std::nullopt;
  const auto u = static_cast<std::uint64_t>(std::floor((*px)[0]));
  const auto v = static_cast<std::uint64_t>(std::floor((*px)[1]));
  return v * static_cast<std::uint64_t>(calib.image.width) + u;
}

}  // namespace detail

inline SyntheticFrame generate_synthetic_frame(const SyntheticSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  SyntheticFrame out;
  Frame& f = out.frame;
  f.frame_id = spec.frame_id;
  f.calib = synthetic_calibration(spec.image);
  const Calibration& calib = f.calib;
  const double ground_y = detail::round2(spec.ground_y);

  // Boxes on a 1 cm grid so that label text round-trips exactly.
  for (const auto& p : spec.pedestrians) {
    Box3D b;
    b.l = detail::round2(p.l);
    b.w = detail::round2(p.w);
    b.h = detail::round2(p.h);
    b.cx = detail::round2(p.x);
    b.cz = detail::round2(p.z);
    b.cy = ground_y - 0.5 * b.h;
    b.theta = detail::round2(normalize_angle(p.theta));
    b.class_id = kPedestrian;
    b.score = 1.0;
    out.boxes.push_back(b);
  }

  std::set<std::uint64_t> claimed;  // pixels owned by some pedestrian mask
  std::vector<std::vector<std::uint64_t>> mask_pixels(out.boxes.size());
  out.object_points.resize(out.boxes.size());

  const auto in_any_box = [&](const Point3& p, double margin) {
    for (const auto& b : out.boxes) {
      Box3D grown = b;
      grown.l += 2 * margin;
      grown.w += 2 * margin;
      grown.h += 2 * margin;
      if (contains(grown, p)) return true;
    }
    return false;
  };

  for (std::size_t k = 0; k < out.boxes.size(); ++k) {
    const Box3D& b = out.boxes[k];
    const double c = std::cos(b.theta);
    const double s = std::sin(b.theta);
    const int wanted = std::max(0, spec.pedestrians[k].points);
    for (int n = 0; n < wanted; ++n) {
      // A few hundred attempts are plenty unless two masks fully collide.
      for (int attempt = 0; attempt < 500; ++attempt) {
        // Returns sit on the sensor-facing half of an elliptical body shell
        // (semi-axes 0.35 l, 0.35 w) with a little range noise.
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double shell = 0.35 + rng.uniform(-0.03, 0.03);
        const double lx = shell * b.l * std::cos(phi);
        const double lz = shell * b.w * std::sin(phi);
        const double ly = rng.uniform(-0.45, 0.45) * b.h;
        const Point3 cam{b.cx + c * lx + s * lz, b.cy + ly, b.cz - s * lx + c * lz};
        if ((cam.x - b.cx) * b.cx + (cam.z - b.cz) * b.cz > 0.0) continue;  // hidden side
        const LidarPoint lp = detail::to_lidar(calib, cam, static_cast<float>(rng.uniform(0.1, 0.6)));
        const Point3 back = calib.velo_to_cam(lp);
        if (!contains(b, back)) continue;
        const auto pix = detail::pixel_of(calib, back);
        if (!pix) continue;
        bool foreign = false;
        for (std::size_t o = 0; o < mask_pixels.size() && !foreign; ++o) {
          if (o == k) continue;
          foreign = std::find(mask_pixels[o].begin(), mask_pixels[o].end(), *pix) != mask_pixels[o].end();
        }
        if (foreign) continue;
        out.object_points[k].push_back(f.cloud.size());
        f.cloud.push_back(lp);
        mask_pixels[k].push_back(*pix);
        claimed.insert(*pix);
        break;
      }
    }
  }

  // Background returns: rejected when inside a pedestrian box or on a
  // pedestrian mask pixel.
  const auto add_background = [&](const Point3& cam, float refl) {
    if (in_any_box(cam, 0.05)) return false;
    const LidarPoint lp = detail::to_lidar(calib, cam, refl);
    const Point3 back = calib.velo_to_cam(lp);
    if (in_any_box(back, 0.05)) return false;
    if (const auto pix = detail::pixel_of(calib, back); pix && claimed.contains(*pix)) return false;
    f.cloud.push_back(lp);
    return true;
  };

  for (const auto& b : out.boxes) {
    const double r_in = 0.5 * std::hypot(b.l, b.w) + 0.06;
    const double r_out = std::max(b.l, b.w);
    for (int n = 0; n < spec.ring_points_per_object; ++n) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = rng.uniform(r_in, std::max(r_in, r_out - 0.02));
        if (add_background({b.cx + r * std::cos(ang), ground_y, b.cz + r * std::sin(ang)}, 0.05F)) break;
      }
    }
  }
  for (int n = 0; n < spec.ground_points; ++n) {
    const double z = rng.uniform(2.0, spec.max_range);
    const double x = rng.uniform(-0.8, 0.8) * z;
    add_background({x, ground_y, z}, 0.05F);
  }
  for (int n = 0; n < spec.clutter_points; ++n) {
    // One in ten clutter returns lies behind the camera.
    const bool behind = rng.uniform() < 0.1;
    const double z = behind ? rng.uniform(-20.0, -1.0) : rng.uniform(2.0, spec.max_range);
    const double x = rng.uniform(-0.8, 0.8) * std::abs(z);
    const double y = rng.uniform(ground_y - 3.0, ground_y - 0.05);
    add_background({x, y, z}, static_cast<float>(rng.uniform(0.0, 1.0)));
  }

  InstanceMaskSet masks;
  masks.image = spec.image;
  std::vector<LabelRecord> labels;
  for (std::size_t k = 0; k < out.boxes.size(); ++k) {
    const Box3D& b = out.boxes[k];
    if (!mask_pixels[k].empty()) {
      MaskInstance inst;
      inst.instance_id = static_cast<int>(k) + 1;
      inst.cls = "Pedestrian";
      inst.score = 0.9;
      inst.rle = runs_from_pixels(mask_pixels[k]);
      masks.instances.push_back(std::move(inst));
    }

    LabelRecord r;
    r.type = "Pedestrian";
    r.truncated = 0.0;
    r.occluded = 0;
    r.alpha = detail::round2(normalize_angle(b.theta - std::atan2(b.cx, b.cz)));
    double u0 = spec.image.width, v0 = spec.image.height, u1 = 0.0, v1 = 0.0;
    for (const auto& corner : box_corners_3d(b)) {
      if (const auto px = calib.project(corner)) {
        u0 = std::min(u0, (*px)[0]);
        v0 = std::min(v0, (*px)[1]);
        u1 = std::max(u1, (*px)[0]);
        v1 = std::max(v1, (*px)[1]);
      }
    }
    const double wmax = spec.image.width - 1.0;
    const double hmax = spec.image.height - 1.0;
    r.bbox = {detail::round2(std::clamp(u0, 0.0, wmax)), detail::round2(std::clamp(v0, 0.0, hmax)),
              detail::round2(std::clamp(u1, 0.0, wmax)), detail::round2(std::clamp(v1, 0.0, hmax))};
    if (!(r.bbox[2] > r.bbox[0])) r.bbox[2] = r.bbox[0] + 0.01;
    if (!(r.bbox[3] > r.bbox[1])) r.bbox[3] = r.bbox[1] + 0.01;
    r.height = b.h;
    r.width = b.w;
    r.length = b.l;
    r.location = {b.cx, ground_y, b.cz};
    r.rotation_y = b.theta;
    labels.push_back(std::move(r));
  }
  f.masks = std::move(masks);
  f.labels = std::move(labels);
  return out;
}

struct SyntheticCorpusConfig {
  int frames = 20;
  int min_pedestrians = 1;
  int max_pedestrians = 4;
  double min_range = 5.0;
  double max_range = 45.0;
  // Returns per pedestrian follow reference_points * (reference_range / r)^2,
  // capped; 18 returns at 35 m mirrors typical long-range KITTI pedestrians.
  double reference_points = 18.0;
  double reference_range = 35.0;
  int max_points = 300;
};

/// Scene description for frame `index` of a reproducible random corpus.
inline SyntheticSpec random_scene_spec(const SyntheticCorpusConfig& cfg, std::uint64_t seed,
                                       int index) {
  char id[16];
  std::snprintf(id, sizeof(id), "%06d", index);
  Rng rng(derive_seed(seed, id, 0));
  SyntheticSpec spec;
  spec.frame_id = id;
  const auto n = rng.uniform_int(cfg.min_pedestrians, cfg.max_pedestrians);
  for (std::int64_t k = 0; k < n; ++k) {
    SyntheticPedestrian p;
    // Reject placements closer than 1.2 m to an earlier pedestrian.
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double r = rng.uniform(cfg.min_range, cfg.max_range);
      const double bearing = rng.uniform(-0.5, 0.5);
      p.x = r * std::sin(bearing);
      p.z = r * std::cos(bearing);
      const bool clash = std::any_of(spec.pedestrians.begin(), spec.pedestrians.end(), [&](const auto& o) {
        return std::hypot(o.x - p.x, o.z - p.z) < 1.2;
      });
      if (!clash) break;
    }
    p.l = rng.uniform(0.7, 1.0);
    p.w = rng.uniform(0.55, 0.75);
    p.h = rng.uniform(1.55, 1.9);
    p.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double range = std::hypot(p.x, p.z);
    const double pts = cfg.reference_points * std::pow(cfg.reference_range / range, 2.0);
    p.points = static_cast<int>(std::clamp(std::round(pts), 1.0, static_cast<double>(cfg.max_points)));
    spec.pedestrians.push_back(p);
  }
  return spec;
}

}  // namespace lrpd

#endif  // LRPD_SYNTHETIC_HPP
