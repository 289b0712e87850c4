#ifndef LRPD_KITTI_IO_HPP
#define LRPD_KITTI_IO_HPP

// Readers and writers for the KITTI object-benchmark files (labels,
// calibration, velodyne scans) and a JSON + run-length instance mask format.
//
// Directory layout used by load_frame():
//   <root>/velodyne/<id>.bin
//   <root>/calib/<id>.txt
//   <root>/label_2/<id>.txt   (optional)
//   <root>/masks/<id>.json    (optional)

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lrpd/error.hpp"
#include "lrpd/geometry.hpp"

namespace lrpd {

// ---------------------------------------------------------------------------
// Text helpers (locale independent)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

inline std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> to_int(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline void append_fixed(std::string& out, double v, int precision) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::fixed, precision);
  out.append(buf.data(), res.ptr);
}

// Shortest representation that parses back to the same double.
inline void append_exact(std::string& out, double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

}  // namespace detail

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::byte> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::byte> data(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error("short read on " + path.string());
  return data;
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

inline void write_file(const std::filesystem::path& path, std::span<const std::byte> contents) {
  write_file(path, std::string_view(reinterpret_cast<const char*>(contents.data()), contents.size()));
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

struct LabelRecord {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{};  // left, top, right, bottom
  double height = 0.0;           // dims in KITTI order: h, w, l
  double width = 0.0;
  double length = 0.0;
  std::array<double, 3> location{};  // bottom-face center, camera frame
  double rotation_y = 0.0;
  std::optional<double> score;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;

  double bbox_height() const { return bbox[3] - bbox[1]; }
};

inline std::vector<LabelRecord> parse_label_file(std::string_view text) {
  static constexpr std::array<const char*, 16> kFields{
      "type",   "truncated", "occluded",   "alpha",      "bbox_left",  "bbox_top",
      "bbox_right", "bbox_bottom", "height", "width",     "length",     "location_x",
      "location_y", "location_z",  "rotation_y", "score"};

  std::vector<LabelRecord> records;
  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto tok = detail::split_ws(lines[ln]);
    if (tok.empty()) continue;
    const std::size_t line_no = ln + 1;
    if (tok.size() != 15 && tok.size() != 16) {
      throw ParseError("expected 15 or 16 fields, got " + std::to_string(tok.size()), line_no,
                       tok.size() < 15 ? kFields[std::min<std::size_t>(tok.size(), 15)] : "score");
    }
    const auto num = [&](std::size_t i) {
      const auto v = detail::to_double(tok[i]);
      if (!v) throw ParseError("not a number: '" + std::string(tok[i]) + "'", line_no, kFields[i]);
      return *v;
    };
    LabelRecord r;
    r.type = std::string(tok[0]);
    r.truncated = num(1);
    const auto occ = detail::to_int(tok[2]);
    if (!occ || *occ < -1 || *occ > 3) {
      throw ParseError("occlusion must be an integer in {-1,0,1,2,3}", line_no, kFields[2]);
    }
    r.occluded = static_cast<int>(*occ);
    r.alpha = num(3);
    for (std::size_t i = 0; i < 4; ++i) r.bbox[i] = num(4 + i);
    r.height = num(8);
    r.width = num(9);
    r.length = num(10);
    for (std::size_t i = 0; i < 3; ++i) r.location[i] = num(11 + i);
    r.rotation_y = num(14);
    if (tok.size() == 16) r.score = num(15);

    if (!(r.bbox[2] > r.bbox[0])) throw ParseError("bbox right must exceed left", line_no, "bbox_right");
    if (!(r.bbox[3] > r.bbox[1])) throw ParseError("bbox bottom must exceed top", line_no, "bbox_bottom");
    records.push_back(std::move(r));
  }
  return records;
}

// Standard fields are written with two decimals like the KITTI devkit; the
// optional score keeps full precision. DontCare rows keep their integer
// sentinels (-1, -10, -1000) the way KITTI files spell them.
inline std::string write_label_file(std::span<const LabelRecord> records) {
  std::string out;
  for (const auto& r : records) {
    const bool dont_care = r.type == "DontCare";
    const auto field = [&](double v) {
      out += ' ';
      if (dont_care && (v == -1.0 || v == -10.0 || v == -1000.0)) {
        out += std::to_string(static_cast<int>(v));
      } else {
        detail::append_fixed(out, v, 2);
      }
    };
    out += r.type;
    field(r.truncated);
    out += ' ';
    out += std::to_string(r.occluded);
    field(r.alpha);
    for (double v : r.bbox) field(v);
    field(r.height);
    field(r.width);
    field(r.length);
    for (double v : r.location) field(v);
    field(r.rotation_y);
    if (r.score) {
      out += ' ';
      detail::append_exact(out, *r.score);
    }
    out += '\n';
  }
  return out;
}

// Label (bottom-face center) -> volumetric-center box.
inline Box3D label_to_box(const LabelRecord& r) {
  Box3D b;
  b.cx = r.location[0];
  b.cy = r.location[1] - 0.5 * r.height;
  b.cz = r.location[2];
  b.l = r.length;
  b.w = r.width;
  b.h = r.height;
  b.theta = normalize_angle(r.rotation_y);
  b.class_id = class_from_name(r.type);
  b.score = r.score.value_or(1.0);
  return b;
}

// ---------------------------------------------------------------------------
// Velodyne scans
// ---------------------------------------------------------------------------

inline PointCloud read_velodyne(std::span<const std::byte> bytes) {
  if (bytes.size() % 16 != 0) {
    throw ParseError("velodyne byte length " + std::to_string(bytes.size()) +
                     " is not a multiple of 16");
  }
  PointCloud cloud(bytes.size() / 16);
  if (!bytes.empty()) std::memcpy(cloud.data(), bytes.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& p : cloud) {
      for (float* f : {&p.x, &p.y, &p.z, &p.reflectance}) {
        *f = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(*f)));
      }
    }
  }
  return cloud;
}

inline std::vector<std::byte> write_velodyne(const PointCloud& cloud) {
  static_assert(sizeof(LidarPoint) == 16);
  std::vector<std::byte> out(cloud.size() * 16);
  if (!cloud.empty()) std::memcpy(out.data(), cloud.data(), out.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < out.size(); i += 4) std::reverse(out.begin() + i, out.begin() + i + 4);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

inline constexpr ImageSize kKittiImageSize{1242, 375};

// Parses a KITTI calib file. Required keys: P2, R0_rect, Tr_velo_to_cam.
// The image size is not part of the KITTI format; an optional
// "image_size: W H" line overrides `fallback`.
inline Calibration parse_calib(std::string_view text, ImageSize fallback = kKittiImageSize) {
  std::map<std::string, std::pair<std::vector<std::string_view>, std::size_t>, std::less<>> entries;
  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = lines[ln];
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      if (!detail::split_ws(line).empty()) throw ParseError("expected 'key: values'", ln + 1);
      continue;
    }
    const auto key_tok = detail::split_ws(line.substr(0, colon));
    if (key_tok.size() != 1) throw ParseError("malformed key", ln + 1);
    entries[std::string(key_tok[0])] = {detail::split_ws(line.substr(colon + 1)), ln + 1};
  }

  const auto values = [&](const char* key, std::size_t arity) {
    const auto it = entries.find(key);
    if (it == entries.end()) throw ParseError(std::string("missing calibration key ") + key);
    const auto& [tok, line_no] = it->second;
    if (tok.size() != arity) {
      throw ParseError("expected " + std::to_string(arity) + " values, got " +
                           std::to_string(tok.size()), line_no, key);
    }
    std::vector<double> out;
    for (const auto t : tok) {
      const auto v = detail::to_double(t);
      if (!v) throw ParseError("not a number: '" + std::string(t) + "'", line_no, key);
      out.push_back(*v);
    }
    return out;
  };

  Calibration c;
  const auto p2 = values("P2", 12);
  const auto r0 = values("R0_rect", 9);
  const auto tr = values("Tr_velo_to_cam", 12);
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 4; ++k) {
      c.P2(r, k) = p2[static_cast<std::size_t>(r * 4 + k)];
      c.Tr_velo_to_cam(r, k) = tr[static_cast<std::size_t>(r * 4 + k)];
    }
    for (int k = 0; k < 3; ++k) c.R0_rect(r, k) = r0[static_cast<std::size_t>(r * 3 + k)];
  }
  c.image = fallback;
  if (entries.contains("image_size")) {
    const auto dims = values("image_size", 2);
    c.image = {static_cast<int>(dims[0]), static_cast<int>(dims[1])};
  }
  c.validate();
  return c;
}

inline std::string write_calib(const Calibration& c) {
  std::string out;
  const auto row = [&](const char* key, const auto& m) {
    out += key;
    out += ':';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        out += ' ';
        detail::append_exact(out, m(r, k));
      }
    }
    out += '\n';
  };
  row("P2", c.P2);
  row("R0_rect", c.R0_rect);
  row("Tr_velo_to_cam", c.Tr_velo_to_cam);
  out += "image_size: " + std::to_string(c.image.width) + ' ' + std::to_string(c.image.height) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Instance masks
// ---------------------------------------------------------------------------

// Half-open run [start, start + length) over row-major pixel indices.
struct MaskRun {
  std::uint64_t start = 0;
  std::uint64_t length = 0;

  friend bool operator==(const MaskRun&, const MaskRun&) = default;
};

struct MaskInstance {
  int instance_id = 0;
  std::string cls = "Pedestrian";
  double score = 1.0;
  std::vector<MaskRun> rle;

  friend bool operator==(const MaskInstance&, const MaskInstance&) = default;

  std::uint64_t pixel_count() const {
    std::uint64_t n = 0;
    for (const auto& r : rle) n += r.length;
    return n;
  }
};

struct InstanceMaskSet {
  ImageSize image;
  std::vector<MaskInstance> instances;

  friend bool operator==(const InstanceMaskSet&, const InstanceMaskSet&) = default;
};

// Builds sorted, merged runs from an arbitrary list of pixel indices.
inline std::vector<MaskRun> runs_from_pixels(std::vector<std::uint64_t> pixels) {
  std::sort(pixels.begin(), pixels.end());
  pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
  std::vector<MaskRun> runs;
  for (const auto p : pixels) {
    if (!runs.empty() && runs.back().start + runs.back().length == p) {
      ++runs.back().length;
    } else {
      runs.push_back({p, 1});
    }
  }
  return runs;
}

// Throws InvalidArgument unless runs are sorted, non-empty, in bounds and
// disjoint (within and across instances), and ids are unique.
inline void validate(const InstanceMaskSet& set) {
  if (set.image.width <= 0 || set.image.height <= 0) {
    throw InvalidArgument("mask image dimensions must be positive");
  }
  const auto total = static_cast<std::uint64_t>(set.image.width) *
                     static_cast<std::uint64_t>(set.image.height);
  std::set<int> ids;
  std::vector<std::pair<MaskRun, int>> all;
  for (const auto& inst : set.instances) {
    const std::string tag = "instance " + std::to_string(inst.instance_id);
    if (!ids.insert(inst.instance_id).second) throw InvalidArgument("duplicate " + tag);
    if (!(inst.score >= 0.0 && inst.score <= 1.0)) throw InvalidArgument(tag + ": score outside [0,1]");
    std::uint64_t prev_end = 0;
    for (std::size_t i = 0; i < inst.rle.size(); ++i) {
      const auto& r = inst.rle[i];
      if (r.length == 0) throw InvalidArgument(tag + ": zero-length run");
      if (r.start > total || r.length > total - r.start) throw InvalidArgument(tag + ": run out of image bounds");
      if (i > 0 && r.start < prev_end) throw InvalidArgument(tag + ": runs overlap or are unsorted");
      prev_end = r.start + r.length;
      all.emplace_back(r, inst.instance_id);
    }
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first.start < b.first.start; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].first.start < all[i - 1].first.start + all[i - 1].first.length) {
      throw InvalidArgument("instances " + std::to_string(all[i - 1].second) + " and " +
                            std::to_string(all[i].second) + " overlap");
    }
  }
}

inline InstanceMaskSet parse_masks(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid mask JSON: ") + e.what());
  }
  InstanceMaskSet set;
  try {
    set.image = {j.at("image_width").get<int>(), j.at("image_height").get<int>()};
    for (const auto& ji : j.at("instances")) {
      MaskInstance inst;
      inst.instance_id = ji.at("instance_id").get<int>();
      inst.cls = ji.at("class").get<std::string>();
      inst.score = ji.at("score").get<double>();
      for (const auto& run : ji.at("rle")) {
        if (!run.is_array() || run.size() != 2) throw ParseError("rle entries must be [start, length]");
        inst.rle.push_back({run[0].get<std::uint64_t>(), run[1].get<std::uint64_t>()});
      }
      set.instances.push_back(std::move(inst));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("mask schema: ") + e.what());
  }
  try {
    validate(set);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return set;
}

inline std::string write_masks(const InstanceMaskSet& set) {
  nlohmann::ordered_json j;
  j["image_width"] = set.image.width;
  j["image_height"] = set.image.height;
  j["instances"] = nlohmann::ordered_json::array();
  for (const auto& inst : set.instances) {
    nlohmann::ordered_json ji;
    ji["instance_id"] = inst.instance_id;
    ji["class"] = inst.cls;
    ji["score"] = inst.score;
    auto rle = nlohmann::ordered_json::array();
    for (const auto& r : inst.rle) rle.push_back({r.start, r.length});
    ji["rle"] = std::move(rle);
    j["instances"].push_back(std::move(ji));
  }
  return j.dump() + "\n";
}

/// Instance covering pixel (u, v), first-listed instance wins.
inline std::optional<int> decode_pixel(const InstanceMaskSet& set, int u, int v) {
  if (u < 0 || v < 0 || u >= set.image.width || v >= set.image.height) return std::nullopt;
  const auto idx = static_cast<std::uint64_t>(v) * static_cast<std::uint64_t>(set.image.width) +
                   static_cast<std::uint64_t>(u);
  for (const auto& inst : set.instances) {
    const auto it = std::upper_bound(inst.rle.begin(), inst.rle.end(), idx,
                                     [](std::uint64_t p, const MaskRun& r) { return p < r.start; });
    if (it != inst.rle.begin()) {
      const auto& r = *std::prev(it);
      if (idx < r.start + r.length) return inst.instance_id;
    }
  }
  return std::nullopt;
}

// Dense id map for repeated lookups; -1 marks background.
class MaskRaster {
 public:
  explicit MaskRaster(const InstanceMaskSet& set)
      : image_(set.image),
        ids_(static_cast<std::size_t>(std::max(0, set.image.width)) *
                 static_cast<std::size_t>(std::max(0, set.image.height)),
             -1) {
    for (const auto& inst : set.instances) {
      for (const auto& r : inst.rle) {
        const auto end = std::min<std::uint64_t>(r.start + r.length, ids_.size());
        for (auto p = r.start; p < end; ++p) {
          if (ids_[p] < 0) ids_[p] = inst.instance_id;
        }
      }
    }
  }

  std::optional<int> at(int u, int v) const {
    if (u < 0 || v < 0 || u >= image_.width || v >= image_.height) return std::nullopt;
    const int id = ids_[static_cast<std::size_t>(v) * static_cast<std::size_t>(image_.width) +
                        static_cast<std::size_t>(u)];
    if (id < 0) return std::nullopt;
    return id;
  }

 private:
  ImageSize image_;
  std::vector<int> ids_;
};

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

struct Frame {
  std::string frame_id;
  PointCloud cloud;
  Calibration calib;
  std::optional<InstanceMaskSet> masks;
  std::optional<std::vector<LabelRecord>> labels;

  void validate() const {
    calib.validate();
    if (masks && masks->image != calib.image) {
      throw InvalidArgument("frame " + frame_id + ": mask dimensions differ from calibration");
    }
  }
};

struct DatasetLayout {
  std::filesystem::path root;

  std::filesystem::path velodyne(std::string_view id) const { return root / "velodyne" / (std::string(id) + ".bin"); }
  std::filesystem::path calib(std::string_view id) const { return root / "calib" / (std::string(id) + ".txt"); }
  std::filesystem::path labels(std::string_view id) const { return root / "label_2" / (std::string(id) + ".txt"); }
  std::filesystem::path masks(std::string_view id) const { return root / "masks" / (std::string(id) + ".json"); }
};

struct FrameRequirements {
  bool cloud = true;
  bool masks = false;
  bool labels = false;
};

// Loads one frame. Missing required assets throw Error naming the frame and
// the file; optional assets are loaded when present. When masks exist and
// the calibration has no image_size line, the mask dimensions are used.
inline Frame load_frame(const DatasetLayout& layout, const std::string& id,
                        FrameRequirements req = {}) {
  const auto need = [&](const std::filesystem::path& p, bool required) {
    if (std::filesystem::exists(p)) return true;
    if (required) throw Error("frame " + id + ": missing " + p.string());
    return false;
  };
  Frame f;
  f.frame_id = id;
  try {
    std::optional<InstanceMaskSet> masks;
    if (need(layout.masks(id), req.masks)) masks = parse_masks(read_text_file(layout.masks(id)));
    need(layout.calib(id), true);
    f.calib = parse_calib(read_text_file(layout.calib(id)),
                          masks ? masks->image : kKittiImageSize);
    f.masks = std::move(masks);
    if (need(layout.velodyne(id), req.cloud)) f.cloud = read_velodyne(read_binary_file(layout.velodyne(id)));
    if (need(layout.labels(id), req.labels)) f.labels = parse_label_file(read_text_file(layout.labels(id)));
    f.validate();
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.rfind("frame ", 0) == 0) throw;
    throw Error("frame " + id + ": " + what);
  }
  return f;
}

// Writes every present component of a frame in the layout above.
inline void save_frame(const DatasetLayout& layout, const Frame& f) {
  write_file(layout.calib(f.frame_id), write_calib(f.calib));
  write_file(layout.velodyne(f.frame_id), std::span<const std::byte>(write_velodyne(f.cloud)));
  if (f.labels) write_file(layout.labels(f.frame_id), write_label_file(*f.labels));
  if (f.masks) write_file(layout.masks(f.frame_id), write_masks(*f.masks));
}

// Reads a split file (one frame id per line); blank lines are skipped.
inline std::vector<std::string> parse_split(std::string_view text) {
  std::vector<std::string> ids;
  for (const auto line : detail::split_lines(text)) {
    const auto tok = detail::split_ws(line);
    if (!tok.empty()) ids.emplace_back(tok[0]);
  }
  return ids;
}

}  // namespace lrpd

#endif  // LRPD_KITTI_IO_HPP
