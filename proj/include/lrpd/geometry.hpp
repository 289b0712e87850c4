#ifndef LRPD_GEOMETRY_HPP
#define LRPD_GEOMETRY_HPP

// Frames, calibration and oriented-box geometry.
//
// Everything downstream works in the rectified KITTI camera frame:
// x right, y down, z forward. Boxes rotate about the vertical axis with the
// KITTI rotation_y convention, and Box3D::cy is the *volumetric* center
// (KITTI labels store the bottom-face center; conversion happens in kitti_io).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "lrpd/error.hpp"

namespace lrpd {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

// One LiDAR return in the velodyne frame, stored exactly as on disk.
struct LidarPoint {
  float x = 0.0F;
  float y = 0.0F;
  float z = 0.0F;
  float reflectance = 0.0F;

  friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

using PointCloud = std::vector<LidarPoint>;

struct ImageSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// KITTI object-benchmark calibration: velodyne -> reference camera ->
// rectified camera -> image plane of camera 2.
struct Calibration {
  Eigen::Matrix<double, 3, 4> P2 = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix3d R0_rect = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> Tr_velo_to_cam = Eigen::Matrix<double, 3, 4>::Zero();
  ImageSize image;

  void validate() const {
    if (image.width <= 0 || image.height <= 0) {
      throw InvalidArgument("calibration image dimensions must be positive");
    }
    const Eigen::Matrix3d gram = R0_rect * R0_rect.transpose();
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-4) {
      throw InvalidArgument("R0_rect is not orthonormal");
    }
    if (!P2.allFinite() || !Tr_velo_to_cam.allFinite() || !R0_rect.allFinite()) {
      throw InvalidArgument("calibration matrices must be finite");
    }
  }

  Point3 velo_to_cam(double x, double y, double z) const {
    const Eigen::Vector3d ref = Tr_velo_to_cam.leftCols<3>() * Eigen::Vector3d(x, y, z) +
                                Tr_velo_to_cam.col(3);
    const Eigen::Vector3d rect = R0_rect * ref;
    return {rect.x(), rect.y(), rect.z()};
  }

  Point3 velo_to_cam(const LidarPoint& p) const { return velo_to_cam(p.x, p.y, p.z); }

  // Inverse of velo_to_cam; Tr_velo_to_cam is a rigid transform.
  Eigen::Vector3d cam_to_velo(const Point3& p) const {
    const Eigen::Vector3d ref = R0_rect.transpose() * Eigen::Vector3d(p.x, p.y, p.z);
    const Eigen::Matrix3d rot = Tr_velo_to_cam.leftCols<3>();
    return rot.transpose() * (ref - Tr_velo_to_cam.col(3));
  }

  // Pixel coordinates of a camera-frame point; nullopt when the point is not
  // strictly in front of the camera.
  std::optional<std::array<double, 2>> project(const Point3& p) const {
    if (!(p.z > 0.0)) return std::nullopt;
    const Eigen::Vector3d img = P2.leftCols<3>() * Eigen::Vector3d(p.x, p.y, p.z) + P2.col(3);
    if (!(img.z() > 0.0)) return std::nullopt;
    return std::array<double, 2>{img.x() / img.z(), img.y() / img.z()};
  }

  bool in_image(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u < static_cast<double>(image.width) &&
           v < static_cast<double>(image.height);
  }
};

inline std::vector<Point3> to_camera_frame(const PointCloud& cloud, const Calibration& calib) {
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(calib.velo_to_cam(p));
  return out;
}

struct ProjectedPoint {
  std::size_t index = 0;
  double u = 0.0;
  double v = 0.0;
};

// Projects camera-frame points; keeps only those with positive depth whose
// pixel lies inside the image. u, v stay real-valued.
inline std::vector<ProjectedPoint> project_points(std::span<const Point3> points,
                                                  const Calibration& calib) {
  std::vector<ProjectedPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto px = calib.project(points[i]);
    if (!px) continue;
    const auto [u, v] = *px;
    if (calib.in_image(u, v)) out.push_back({i, u, v});
  }
  return out;
}

inline std::vector<ProjectedPoint> project_points(const PointCloud& cloud,
                                                  const Calibration& calib) {
  const auto cam = to_camera_frame(cloud, calib);
  return project_points(std::span<const Point3>(cam), calib);
}

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double t = std::remainder(theta, kTwoPi);
  if (t <= -std::numbers::pi) t += kTwoPi;
  return t;
}

// Class ids used by the pipeline. Unknown KITTI types map to kOther.
enum ClassId : int {
  kPedestrian = 0,
  kPersonSitting = 1,
  kCyclist = 2,
  kCar = 3,
  kDontCare = 4,
  kOther = 5,
};

inline ClassId class_from_name(std::string_view name) {
  if (name == "Pedestrian") return kPedestrian;
  if (name == "Person_sitting") return kPersonSitting;
  if (name == "Cyclist") return kCyclist;
  if (name == "Car") return kCar;
  if (name == "DontCare") return kDontCare;
  return kOther;
}

// Oriented 3D box in the camera frame. (cx, cy, cz) is the volumetric
// center; theta rotates about the vertical axis (KITTI rotation_y).
struct Box3D {
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double l = 1.0;
  double w = 1.0;
  double h = 1.0;
  double theta = 0.0;
  int class_id = kPedestrian;
  double score = 0.0;

  friend bool operator==(const Box3D&, const Box3D&) = default;

  Point3 center() const { return {cx, cy, cz}; }
  double bottom() const { return cy + 0.5 * h; }
};

inline void validate(const Box3D& b) {
  if (!(b.l > 0.0 && b.w > 0.0 && b.h > 0.0)) {
    throw InvalidArgument("box dimensions must be positive");
  }
  if (!std::isfinite(b.cx) || !std::isfinite(b.cy) || !std::isfinite(b.cz) ||
      !std::isfinite(b.theta)) {
    throw InvalidArgument("box center and heading must be finite");
  }
  if (!(b.theta > -std::numbers::pi && b.theta <= std::numbers::pi)) {
    throw InvalidArgument("box heading must be in (-pi, pi]");
  }
}

/// Planar (BEV) distance of the box center from the sensor origin.
inline double planar_range(const Box3D& b) { return std::hypot(b.cx, b.cz); }

/// Same metric for a bare point.
inline double planar_range(const Point3& p) { return std::hypot(p.x, p.z); }

// Expresses a camera-frame point in the box's local axes
// (x along length, y down, z along width), relative to the center.
inline Point3 to_box_local(const Box3D& b, const Point3& p) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double dx = p.x - b.cx;
  const double dz = p.z - b.cz;
  return {c * dx - s * dz, p.y - b.cy, s * dx + c * dz};
}

/// Oriented containment test, closed on all faces.
inline bool contains(const Box3D& b, const Point3& p) {
  const Point3 q = to_box_local(b, p);
  return std::abs(q.x) <= 0.5 * b.l && std::abs(q.y) <= 0.5 * b.h && std::abs(q.z) <= 0.5 * b.w;
}

// Corner order follows the KITTI devkit: bottom face first (y = cy + h/2),
// then the top face, each counter-clockwise seen from above.
inline std::array<Point3, 8> box_corners_3d(const Box3D& b) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  const double hh = 0.5 * b.h;
  constexpr std::array<double, 8> xs{1, 1, -1, -1, 1, 1, -1, -1};
  constexpr std::array<double, 8> ys{1, 1, 1, 1, -1, -1, -1, -1};
  constexpr std::array<double, 8> zs{1, -1, -1, 1, 1, -1, -1, 1};
  std::array<Point3, 8> out{};
  for (std::size_t i = 0; i < 8; ++i) {
    const double lx = xs[i] * hl;
    const double lz = zs[i] * hw;
    out[i] = {b.cx + c * lx + s * lz, b.cy + ys[i] * hh, b.cz - s * lx + c * lz};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bird's-eye-view polygons
// ---------------------------------------------------------------------------

struct BevPoint {
  double x = 0.0;
  double z = 0.0;
};

// Footprint of a box on the (x, z) plane; vertices counter-clockwise in the
// (x, z) coordinate system.
struct BevPolygon {
  std::array<BevPoint, 4> vertices{};

  double area() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& p = vertices[i];
      const auto& q = vertices[(i + 1) % 4];
      acc += p.x * q.z - q.x * p.z;
    }
    return 0.5 * acc;
  }
};

inline BevPolygon bev_polygon(const Box3D& b) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  constexpr std::array<double, 4> xs{1, 1, -1, -1};
  constexpr std::array<double, 4> zs{-1, 1, 1, -1};
  BevPolygon poly;
  for (std::size_t i = 0; i < 4; ++i) {
    const double lx = xs[i] * hl;
    const double lz = zs[i] * hw;
    poly.vertices[i] = {b.cx + c * lx + s * lz, b.cz - s * lx + c * lz};
  }
  return poly;
}

namespace detail {

// Convex polygon with a small fixed capacity; clipping a quad by a quad
// never produces more than 8 vertices.
struct SmallPolygon {
  std::array<BevPoint, 16> pts{};
  std::size_t n = 0;

  void push(const BevPoint& p) { pts[n++] = p; }

  double area() const {
    if (n < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = pts[i];
      const auto& q = pts[(i + 1) % n];
      acc += p.x * q.z - q.x * p.z;
    }
    return 0.5 * acc;
  }
};

// Signed side of p w.r.t. the directed edge a->b; >= 0 means inside for a
// counter-clockwise clip polygon.
inline double side(const BevPoint& a, const BevPoint& b, const BevPoint& p) {
  return (b.x - a.x) * (p.z - a.z) - (b.z - a.z) * (p.x - a.x);
}

}  // namespace detail

constexpr double kAreaEpsilon = 1e-12;

/// Area of the intersection of two convex counter-clockwise quads
/// (Sutherland-Hodgman). Areas below kAreaEpsilon are reported as zero.
inline double intersection_area(const BevPolygon& subject, const BevPolygon& clip) {
  detail::SmallPolygon cur;
  for (const auto& v : subject.vertices) cur.push(v);

  for (std::size_t e = 0; e < 4 && cur.n > 0; ++e) {
    const BevPoint& a = clip.vertices[e];
    const BevPoint& b = clip.vertices[(e + 1) % 4];
    detail::SmallPolygon next;
    for (std::size_t i = 0; i < cur.n; ++i) {
      const BevPoint& p = cur.pts[i];
      const BevPoint& q = cur.pts[(i + 1) % cur.n];
      const double sp = detail::side(a, b, p);
      const double sq = detail::side(a, b, q);
      const bool p_in = sp >= 0.0;
      const bool q_in = sq >= 0.0;
      if (p_in) next.push(p);
      if (p_in != q_in) {
        const double t = sp / (sp - sq);
        next.push({p.x + t * (q.x - p.x), p.z + t * (q.z - p.z)});
      }
    }
    cur = next;
  }
  const double area = cur.area();
  return area < kAreaEpsilon ? 0.0 : area;
}

/// Bird's-eye-view IoU of two boxes' footprints, in [0, 1].
inline double bev_iou(const Box3D& a, const Box3D& b) {
  const double reach = 0.5 * (std::hypot(a.l, a.w) + std::hypot(b.l, b.w));
  if (std::abs(a.cx - b.cx) > reach || std::abs(a.cz - b.cz) > reach) return 0.0;

  // Clip in a canonical order so the result is bitwise symmetric.
  const auto key = [](const Box3D& x) { return std::tie(x.cx, x.cz, x.l, x.w, x.theta); };
  const bool swap = key(b) < key(a);
  const BevPolygon pa = bev_polygon(swap ? b : a);
  const BevPolygon pb = bev_polygon(swap ? a : b);
  const double inter = intersection_area(pa, pb);
  if (inter <= 0.0) return 0.0;
  const double uni = a.l * a.w + b.l * b.w - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Euclidean distance between two box centers.
inline double center_distance(const Box3D& a, const Box3D& b) {
  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  const double dz = a.cz - b.cz;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace lrpd

#endif  // LRPD_GEOMETRY_HPP
