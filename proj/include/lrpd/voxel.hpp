#ifndef LRPD_VOXEL_HPP
#define LRPD_VOXEL_HPP

// ROI cropping and the 64 x 64 x 9 BEV voxel encoding handed to an external
// refinement network.
//
// Tensor layout (serialize_tensor): float32 little-endian, C order,
// shape [channel=2][x=64][z=64][height=9]; channel 0 is the maximum height
// above the grid floor, channel 1 the normalized density.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lrpd/geometry.hpp"

namespace lrpd {

// ---------------------------------------------------------------------------
// Image ROI
// ---------------------------------------------------------------------------

struct Roi2D {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;

  double width() const { return right - left; }
  double height() const { return bottom - top; }
  friend bool operator==(const Roi2D&, const Roi2D&) = default;
};

inline constexpr double kRoiScale = 1.5;

/// Tight pixel rectangle around the projected box corners that lie in front
/// of the camera. Throws when no corner does.
inline Roi2D corner_extent(const Box3D& box, const Calibration& calib) {
  Roi2D r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (const auto& c : box_corners_3d(box)) {
    const auto px = calib.project(c);
    if (!px) continue;
    any = true;
    r.left = std::min(r.left, (*px)[0]);
    r.right = std::max(r.right, (*px)[0]);
    r.top = std::min(r.top, (*px)[1]);
    r.bottom = std::max(r.bottom, (*px)[1]);
  }
  if (!any) throw InvalidArgument("box lies entirely behind the camera");
  return r;
}

inline Roi2D scale_roi(const Roi2D& r, double factor) {
  const double cu = 0.5 * (r.left + r.right);
  const double cv = 0.5 * (r.top + r.bottom);
  const double hw = 0.5 * factor * r.width();
  const double hh = 0.5 * factor * r.height();
  return {cu - hw, cv - hh, cu + hw, cv + hh};
}

// Clamps to the image rectangle [0, width] x [0, height] in continuous pixel
// coordinates.
inline Roi2D clamp_roi(const Roi2D& r, ImageSize image) {
  const double w = image.width;
  const double h = image.height;
  Roi2D out{std::clamp(r.left, 0.0, w), std::clamp(r.top, 0.0, h), std::clamp(r.right, 0.0, w),
            std::clamp(r.bottom, 0.0, h)};
  out.right = std::max(out.right, out.left);
  out.bottom = std::max(out.bottom, out.top);
  return out;
}

/// Image crop rectangle for a proposal: corner extent scaled by 1.5 about its
/// center, then clamped to the image.
inline Roi2D image_roi(const Box3D& box, const Calibration& calib, double scale = kRoiScale) {
  return clamp_roi(scale_roi(corner_extent(box, calib), scale), calib.image);
}

// ---------------------------------------------------------------------------
// Point crop
// ---------------------------------------------------------------------------

struct CropExtent {
  double x = 4.0;
  double y = 3.0;  // vertical
  double z = 4.0;

  friend bool operator==(const CropExtent&, const CropExtent&) = default;
};

/// Points inside the axis-aligned box of the given side lengths centered on
/// `center`; bounds are half-open [c - e/2, c + e/2).
inline std::vector<Point3> crop_cloud(std::span<const Point3> points, const Point3& center,
                                      const CropExtent& extent) {
  if (!(extent.x > 0.0 && extent.y > 0.0 && extent.z > 0.0)) throw InvalidArgument("crop extent must be > 0");
  const auto inside = [](double v, double c, double e) { return v >= c - 0.5 * e && v < c + 0.5 * e; };
  std::vector<Point3> out;
  for (const auto& p : points) {
    if (inside(p.x, center.x, extent.x) && inside(p.y, center.y, extent.y) && inside(p.z, center.z, extent.z)) {
      out.push_back(p);
    }
  }
  return out;
}

inline std::vector<Point3> crop_cloud(std::span<const Point3> points, const Box3D& box, double extent) {
  return crop_cloud(points, box.center(), CropExtent{extent, extent, extent});
}

// ---------------------------------------------------------------------------
// Voxel grid
// ---------------------------------------------------------------------------

enum class DensityNormalization { kMaxCount, kPointsInGrid };

inline std::string_view to_string(DensityNormalization d) {
  return d == DensityNormalization::kMaxCount ? "max_count" : "points_in_grid";
}

struct VoxelGridConfig {
  CropExtent extent;  // 4 m x 3 m x 4 m
  DensityNormalization density = DensityNormalization::kMaxCount;
};

class VoxelGrid {
 public:
  static constexpr std::size_t kNx = 64;
  static constexpr std::size_t kNz = 64;
  static constexpr std::size_t kNh = 9;
  static constexpr std::size_t kCells = kNx * kNz * kNh;

  VoxelGrid(const Point3& center, const CropExtent& extent)
      : center_(center), extent_(extent), max_height_(kCells, 0.0), density_(kCells, 0.0), counts_(kCells, 0) {}

  static std::size_t index(std::size_t ix, std::size_t iz, std::size_t ih) { return (ix * kNz + iz) * kNh + ih; }

  // Height above the grid floor of the highest point in the cell; 0 (the
  // floor) for empty cells.
  double max_height(std::size_t ix, std::size_t iz, std::size_t ih) const { return max_height_[index(ix, iz, ih)]; }
  double density(std::size_t ix, std::size_t iz, std::size_t ih) const { return density_[index(ix, iz, ih)]; }
  std::uint32_t count(std::size_t ix, std::size_t iz, std::size_t ih) const { return counts_[index(ix, iz, ih)]; }

  const std::vector<double>& max_heights() const { return max_height_; }
  const std::vector<double>& densities() const { return density_; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }

  const Point3& center() const { return center_; }
  const CropExtent& extent() const { return extent_; }

  // Minimum corner (x, z) and the floor in camera coordinates (largest y).
  Point3 origin() const {
    return {center_.x - 0.5 * extent_.x, center_.y + 0.5 * extent_.y, center_.z - 0.5 * extent_.z};
  }
  std::array<double, 3> cell_size() const {
    return {extent_.x / kNx, extent_.y / kNh, extent_.z / kNz};
  }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

  // Records one point of the given height in cell i.
  void add(std::size_t i, double height) {
    if (counts_[i] == 0 || height > max_height_[i]) max_height_[i] = height;
    ++counts_[i];
  }

  void normalize(double denom) {
    if (!(denom > 0.0)) return;
    for (std::size_t i = 0; i < kCells; ++i) density_[i] = counts_[i] / denom;
  }

 private:
  Point3 center_;
  CropExtent extent_;
  std::vector<double> max_height_;
  std::vector<double> density_;
  std::vector<std::uint32_t> counts_;
};

/// Encodes the points around `center` into the 64 x 64 x 9 grid. Points
/// outside the grid volume are ignored. "Up" is -y, so a point's height is
/// (floor y) - y.
inline VoxelGrid voxelize(std::span<const Point3> points, const Point3& center, const VoxelGridConfig& cfg = {}) {
  const auto& e = cfg.extent;
  if (!(e.x > 0.0 && e.y > 0.0 && e.z > 0.0)) throw InvalidArgument("grid extent must be > 0");
  VoxelGrid g(center, e);
  const double x0 = center.x - 0.5 * e.x;
  const double z0 = center.z - 0.5 * e.z;
  const double floor_y = center.y + 0.5 * e.y;
  std::size_t in_grid = 0;
  for (const auto& p : points) {
    const double fx = (p.x - x0) / e.x;
    const double fz = (p.z - z0) / e.z;
    const double height = floor_y - p.y;
    const double fh = height / e.y;
    if (!(fx >= 0.0 && fx < 1.0 && fz >= 0.0 && fz < 1.0 && fh >= 0.0 && fh < 1.0)) continue;
    const auto ix = std::min(static_cast<std::size_t>(fx * VoxelGrid::kNx), VoxelGrid::kNx - 1);
    const auto iz = std::min(static_cast<std::size_t>(fz * VoxelGrid::kNz), VoxelGrid::kNz - 1);
    const auto ih = std::min(static_cast<std::size_t>(fh * VoxelGrid::kNh), VoxelGrid::kNh - 1);
    g.add(VoxelGrid::index(ix, iz, ih), height);
    ++in_grid;
  }
  const std::uint32_t max_count = *std::max_element(g.counts().begin(), g.counts().end());
  g.normalize(cfg.density == DensityNormalization::kMaxCount ? static_cast<double>(max_count)
                                                             : static_cast<double>(in_grid));
  return g;
}

/// Flat little-endian float32 tensor [2][64][64][9].
inline std::vector<std::byte> serialize_tensor(const VoxelGrid& g) {
  std::vector<std::byte> out(2 * VoxelGrid::kCells * sizeof(float));
  auto put = [&](std::size_t slot, double v) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(out.data() + slot * sizeof(float), &bits, sizeof(float));
  };
  for (std::size_t i = 0; i < VoxelGrid::kCells; ++i) {
    put(i, g.max_heights()[i]);
    put(VoxelGrid::kCells + i, g.densities()[i]);
  }
  return out;
}

inline nlohmann::ordered_json tensor_sidecar(const VoxelGrid& g, DensityNormalization density) {
  nlohmann::ordered_json j;
  const auto o = g.origin();
  const auto cs = g.cell_size();
  j["dtype"] = "float32";
  j["byte_order"] = "little";
  j["shape"] = {2, VoxelGrid::kNx, VoxelGrid::kNz, VoxelGrid::kNh};
  j["axes"] = {"channel", "x", "z", "height"};
  j["channels"] = {"max_height", "density"};
  j["origin"] = {o.x, o.y, o.z};
  j["cell_size"] = {cs[0], cs[1], cs[2]};
  j["extent"] = {g.extent().x, g.extent().y, g.extent().z};
  j["density_normalization"] = to_string(density);
  j["height_reference"] = "meters above the grid floor (camera y = origin[1]), up = -y";
  return j;
}

}  // namespace lrpd

#endif  // LRPD_VOXEL_HPP
