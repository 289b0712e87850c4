#ifndef LRPD_STATS_HPP
#define LRPD_STATS_HPP

// Per-range dataset statistics: LiDAR returns inside each ground-truth box,
// 2D box area and instance-mask pixels per object.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrpd/eval.hpp"
#include "lrpd/geometry.hpp"
#include "lrpd/kitti_io.hpp"
#include "lrpd/proposal.hpp"

namespace lrpd {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Linear-interpolated percentile of sorted values (q in [0, 1]).
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline Summary summarize(std::vector<double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.median = percentile_sorted(values, 0.5);
  s.p10 = percentile_sorted(values, 0.1);
  s.p90 = percentile_sorted(values, 0.9);
  s.min = values.front();
  s.max = values.back();
  return s;
}

struct BinStats {
  std::string range;
  Summary points;       // LiDAR returns inside the oriented 3D box
  Summary box_pixels;   // 2D label box area
  Summary mask_pixels;  // pixels of the associated instance mask
};

struct DatasetStats {
  std::vector<BinStats> bins;
  std::size_t objects = 0;
  std::size_t frames = 0;
  std::size_t frames_with_masks = 0;
  bool has_mask_stats = false;
};

// Associates mask instances with label boxes: an instance goes to the still
// unclaimed box holding the largest share (>= 50%) of its pixel centers.
inline std::vector<int> associate_masks(const InstanceMaskSet& masks, std::span<const LabelRecord> labels) {
  std::vector<int> owner(masks.instances.size(), -1);
  std::vector<bool> taken(labels.size(), false);
  const auto width = static_cast<std::uint64_t>(masks.image.width);
  for (std::size_t k = 0; k < masks.instances.size(); ++k) {
    const auto& inst = masks.instances[k];
    const auto total = inst.pixel_count();
    if (total == 0 || width == 0) continue;
    double best_share = 0.0;
    for (std::size_t li = 0; li < labels.size(); ++li) {
      if (taken[li]) continue;
      const auto& bb = labels[li].bbox;
      std::uint64_t inside = 0;
      for (const auto& run : inst.rle) {
        for (auto p = run.start; p < run.start + run.length; ++p) {
          const double u = static_cast<double>(p % width) + 0.5;
          const double v = static_cast<double>(p / width) + 0.5;
          if (u >= bb[0] && u <= bb[2] && v >= bb[1] && v <= bb[3]) ++inside;
        }
      }
      const double share = static_cast<double>(inside) / static_cast<double>(total);
      if (share >= 0.5 && share > best_share) {
        best_share = share;
        owner[k] = static_cast<int>(li);
      }
    }
    if (owner[k] >= 0) taken[static_cast<std::size_t>(owner[k])] = true;
  }
  return owner;
}

/// Statistics over every label of `class_name` in frames that carry labels.
inline DatasetStats dataset_stats(std::span<const Frame> frames, const RangeBins& bins,
                                  const std::string& class_name = "Pedestrian") {
  bins.validate();
  std::vector<std::vector<double>> pts(bins.size()), box_px(bins.size()), mask_px(bins.size());
  DatasetStats out;
  out.frames = frames.size();
  for (const auto& f : frames) {
    if (!f.labels) continue;
    const auto cam = to_camera_frame(f.cloud, f.calib);
    const auto& labels = *f.labels;
    std::vector<int> mask_of_label(labels.size(), -1);
    if (f.masks) {
      ++out.frames_with_masks;
      const auto owner = associate_masks(*f.masks, labels);
      for (std::size_t k = 0; k < owner.size(); ++k) {
        if (owner[k] >= 0) mask_of_label[static_cast<std::size_t>(owner[k])] = static_cast<int>(k);
      }
    }
    for (std::size_t li = 0; li < labels.size(); ++li) {
      const auto& rec = labels[li];
      if (rec.type != class_name) continue;
      const Box3D box = label_to_box(rec);
      const auto bin = bins.bin_of(planar_range(box));
      if (!bin) continue;
      ++out.objects;
      const auto n = std::count_if(cam.begin(), cam.end(), [&](const Point3& p) { return contains(box, p); });
      pts[*bin].push_back(static_cast<double>(n));
      box_px[*bin].push_back((rec.bbox[2] - rec.bbox[0]) * (rec.bbox[3] - rec.bbox[1]));
      if (f.masks) {
        const int k = mask_of_label[li];
        mask_px[*bin].push_back(
            k >= 0 ? static_cast<double>(f.masks->instances[static_cast<std::size_t>(k)].pixel_count()) : 0.0);
      }
    }
  }
  out.has_mask_stats = out.frames_with_masks > 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    out.bins.push_back({bins.label(i), summarize(pts[i]), summarize(box_px[i]), summarize(mask_px[i])});
  }
  return out;
}

/// Mean l, w, h over every label of the class; nullopt when there is none.
inline std::optional<MeanBoxConfig> mean_box_from_labels(std::span<const LabelRecord> labels,
                                                         const std::string& class_name = "Pedestrian") {
  double l = 0.0, w = 0.0, h = 0.0;
  std::size_t n = 0;
  for (const auto& r : labels) {
    if (r.type != class_name) continue;
    l += r.length;
    w += r.width;
    h += r.height;
    ++n;
  }
  if (n == 0) return std::nullopt;
  const auto d = static_cast<double>(n);
  return MeanBoxConfig{l / d, w / d, h / d};
}

inline nlohmann::ordered_json to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["p10"] = s.p10;
  j["p90"] = s.p90;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

inline nlohmann::ordered_json to_json(const DatasetStats& st) {
  nlohmann::ordered_json j;
  j["frames"] = st.frames;
  j["frames_with_masks"] = st.frames_with_masks;
  j["objects"] = st.objects;
  j["bins"] = nlohmann::ordered_json::array();
  for (const auto& b : st.bins) {
    nlohmann::ordered_json jb;
    jb["range"] = b.range;
    jb["points_per_object"] = to_json(b.points);
    jb["box_pixels_per_object"] = to_json(b.box_pixels);
    if (st.has_mask_stats) jb["mask_pixels_per_object"] = to_json(b.mask_pixels);
    j["bins"].push_back(std::move(jb));
  }
  return j;
}

inline std::string to_csv(const DatasetStats& st) {
  std::string out = "range,quantity,count,mean,median,p10,p90,min,max\n";
  const auto row = [&](const std::string& range, const char* what, const Summary& s) {
    out += range + ',' + what + ',' + std::to_string(s.count);
    for (const double v : {s.mean, s.median, s.p10, s.p90, s.min, s.max}) {
      out += ',';
      detail::append_exact(out, v);
    }
    out += '\n';
  };
  for (const auto& b : st.bins) {
    row(b.range, "points", b.points);
    row(b.range, "box_pixels", b.box_pixels);
    if (st.has_mask_stats) row(b.range, "mask_pixels", b.mask_pixels);
  }
  return out;
}

}  // namespace lrpd

#endif  // LRPD_STATS_HPP
