#ifndef LRPD_PIPELINE_HPP
#define LRPD_PIPELINE_HPP

// Batch commands behind the lrpd tool. Stages hand off through files under
// the output directory:
//
//   proposals/<id>.jsonl       one proposal per line
//   proposals_summary.json     survivor histogram and per-frame errors
//   augmented/<id>.jsonl       labeled copies with regression targets
//   augment_summary.json
//   voxels/<id>.bin            N concatenated [2][64][64][9] float32 tensors
//   voxels/<id>.json           layout plus one entry per tensor
//   eval_report.json/.csv
//   stats.json/.csv
//
// Frames are processed by a worker pool; every output is ordered by frame id
// and record index, so results do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lrpd/augment.hpp"
#include "lrpd/config.hpp"
#include "lrpd/error.hpp"
#include "lrpd/eval.hpp"
#include "lrpd/kitti_io.hpp"
#include "lrpd/proposal.hpp"
#include "lrpd/stats.hpp"
#include "lrpd/synthetic.hpp"
#include "lrpd/voxel.hpp"

namespace lrpd {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

struct PipelineConfig {
  fs::path root;
  std::optional<fs::path> split;
  fs::path out = "out";
  std::uint64_t seed = 0;
  int jobs = 1;

  MeanBoxConfig mean_box;
  double nms_iou = 0.5;

  AugmentConfig augment;
  AugmentMode mode = AugmentMode::kCombined;

  VoxelGridConfig voxel;
  std::string voxel_input = "proposals";  // or "augmented"

  EvalConfig eval;
  std::optional<fs::path> predictions;

  SyntheticCorpusConfig synth;

  void validate() const {
    try {
      mean_box.validate();
      augment.validate();
      eval.bins.validate();
      eval.criterion.validate();
      eval.f1_criterion.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw ConfigError("proposal.nms_iou must be in (0, 1]");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (!(voxel.extent.x > 0.0 && voxel.extent.y > 0.0 && voxel.extent.z > 0.0)) {
      throw ConfigError("voxel extents must be > 0");
    }
    if (voxel_input != "proposals" && voxel_input != "augmented") {
      throw ConfigError("voxel.input must be proposals or augmented");
    }
    if (synth.frames < 0 || synth.min_pedestrians < 0 || synth.max_pedestrians < synth.min_pedestrians ||
        !(synth.min_range > 0.0 && synth.max_range > synth.min_range)) {
      throw ConfigError("invalid [synth] settings");
    }
  }
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "seed", "jobs", "dataset.root", "dataset.split", "output.dir",
      "proposal.mean_l", "proposal.mean_w", "proposal.mean_h", "proposal.nms_iou",
      "augment.mode", "augment.copies", "augment.displacement_range", "augment.positive_iou",
      "augment.close_negative_min_iou", "augment.grounding_min_range", "augment.pillar_radius",
      "voxel.extent_x", "voxel.extent_y", "voxel.extent_z", "voxel.density", "voxel.input",
      "eval.predictions", "eval.bins", "eval.criterion", "eval.threshold", "eval.f1_criterion",
      "eval.f1_threshold", "eval.difficulties", "eval.interpolation",
      "synth.frames", "synth.min_pedestrians", "synth.max_pedestrians", "synth.min_range", "synth.max_range"};
  return keys;
}

inline MatchCriterion::Mode criterion_mode(const std::string& key, const std::string& s) {
  if (s == "bev_iou") return MatchCriterion::Mode::kBevIou;
  if (s == "euclidean_3d") return MatchCriterion::Mode::kEuclidean3d;
  throw ConfigError(key + ": expected bev_iou or euclidean_3d, got '" + s + "'");
}

}  // namespace detail

/// Builds a validated PipelineConfig; unknown keys are rejected.
inline PipelineConfig config_from(const ConfigFile& f) {
  for (const auto& [k, v] : f.values()) {
    if (!detail::known_config_keys().count(k)) throw ConfigError("unknown config key: " + k);
  }
  PipelineConfig c;
  if (auto v = f.get_int("seed")) {
    if (*v < 0) throw ConfigError("seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = f.get_int("jobs")) c.jobs = static_cast<int>(*v);
  if (auto v = f.get_string("dataset.root")) c.root = *v;
  if (auto v = f.get_string("dataset.split")) c.split = fs::path(*v);
  if (auto v = f.get_string("output.dir")) c.out = *v;

  if (auto v = f.get_double("proposal.mean_l")) c.mean_box.l = *v;
  if (auto v = f.get_double("proposal.mean_w")) c.mean_box.w = *v;
  if (auto v = f.get_double("proposal.mean_h")) c.mean_box.h = *v;
  if (auto v = f.get_double("proposal.nms_iou")) c.nms_iou = *v;

  if (auto v = f.get_string("augment.mode")) {
    const auto m = parse_augment_mode(*v);
    if (!m) throw ConfigError("unknown augmentation mode: " + *v);
    c.mode = *m;
  }
  if (auto v = f.get_int("augment.copies")) c.augment.copies_per_proposal = static_cast<int>(*v);
  if (auto v = f.get_double("augment.displacement_range")) c.augment.displacement_range = *v;
  if (auto v = f.get_double("augment.positive_iou")) c.augment.positive_iou = *v;
  if (auto v = f.get_double("augment.close_negative_min_iou")) c.augment.close_negative_min_iou = *v;
  if (auto v = f.get_double("augment.grounding_min_range")) c.augment.grounding_min_range = *v;
  if (auto v = f.get_double("augment.pillar_radius")) c.augment.pillar_radius = *v;

  if (auto v = f.get_double("voxel.extent_x")) c.voxel.extent.x = *v;
  if (auto v = f.get_double("voxel.extent_y")) c.voxel.extent.y = *v;
  if (auto v = f.get_double("voxel.extent_z")) c.voxel.extent.z = *v;
  if (auto v = f.get_string("voxel.density")) {
    if (*v == "max_count") {
      c.voxel.density = DensityNormalization::kMaxCount;
    } else if (*v == "points_in_grid") {
      c.voxel.density = DensityNormalization::kPointsInGrid;
    } else {
      throw ConfigError("voxel.density must be max_count or points_in_grid");
    }
  }
  if (auto v = f.get_string("voxel.input")) c.voxel_input = *v;

  if (auto v = f.get_string("eval.predictions")) c.predictions = fs::path(*v);
  if (auto v = f.get_double_array("eval.bins")) {
    c.eval.bins.edges = *v;
    // An open last bin unless the edges already end at inf.
    if (c.eval.bins.edges.empty() || !std::isinf(c.eval.bins.edges.back())) {
      c.eval.bins.edges.push_back(std::numeric_limits<double>::infinity());
    }
  }
  if (auto v = f.get_string("eval.criterion")) {
    c.eval.criterion.mode = detail::criterion_mode("eval.criterion", *v);
    c.eval.criterion.threshold = c.eval.criterion.mode == MatchCriterion::Mode::kBevIou ? 0.5 : 1.0;
  }
  if (auto v = f.get_double("eval.threshold")) c.eval.criterion.threshold = *v;
  if (auto v = f.get_string("eval.f1_criterion")) {
    c.eval.f1_criterion.mode = detail::criterion_mode("eval.f1_criterion", *v);
    c.eval.f1_criterion.threshold = c.eval.f1_criterion.mode == MatchCriterion::Mode::kBevIou ? 0.5 : 1.0;
  }
  if (auto v = f.get_double("eval.f1_threshold")) c.eval.f1_criterion.threshold = *v;
  if (auto v = f.get_string_array("eval.difficulties")) {
    c.eval.difficulties.clear();
    for (const auto& n : *v) {
      const auto d = DifficultyFilter::preset(n);
      if (!d) throw ConfigError("unknown difficulty preset: " + n);
      c.eval.difficulties.push_back(*d);
    }
  }
  if (auto v = f.get_int("eval.interpolation")) {
    if (*v == 40) {
      c.eval.interpolation = Interpolation::k40Point;
    } else if (*v == 11) {
      c.eval.interpolation = Interpolation::k11Point;
    } else {
      throw ConfigError("eval.interpolation must be 40 or 11");
    }
  }

  if (auto v = f.get_int("synth.frames")) c.synth.frames = static_cast<int>(*v);
  if (auto v = f.get_int("synth.min_pedestrians")) c.synth.min_pedestrians = static_cast<int>(*v);
  if (auto v = f.get_int("synth.max_pedestrians")) c.synth.max_pedestrians = static_cast<int>(*v);
  if (auto v = f.get_double("synth.min_range")) c.synth.min_range = *v;
  if (auto v = f.get_double("synth.max_range")) c.synth.max_range = *v;

  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Frame pool
// ---------------------------------------------------------------------------

template <class T>
struct FrameResult {
  std::string frame_id;
  std::optional<T> value;
  std::string error;
};

/// Runs fn(id) for every id on up to `jobs` threads; results keep id order.
template <class T>
std::vector<FrameResult<T>> for_each_frame(const std::vector<std::string>& ids, int jobs,
                                           const std::function<T(const std::string&)>& fn) {
  std::vector<FrameResult<T>> out(ids.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      out[i].frame_id = ids[i];
      try {
        out[i].value = fn(ids[i]);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), std::max<std::size_t>(ids.size(), 1));
  if (n == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return out;
}

/// Frame ids of the run, sorted and unique: the split file when given,
/// otherwise every calib/<id>.txt under the dataset root.
inline std::vector<std::string> resolve_frames(const PipelineConfig& c) {
  std::vector<std::string> ids;
  if (c.split) {
    if (!fs::exists(*c.split)) throw Error("split file not found: " + c.split->string());
    ids = parse_split(read_text_file(*c.split));
  } else {
    const auto dir = c.root / "calib";
    if (!fs::is_directory(dir)) throw Error("dataset root has no calib directory: " + c.root.string());
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") ids.push_back(e.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// Record formats
// ---------------------------------------------------------------------------

inline ojson box_json(const Box3D& b) {
  return ojson{{"cx", b.cx}, {"cy", b.cy}, {"cz", b.cz}, {"l", b.l}, {"w", b.w}, {"h", b.h}, {"theta", b.theta}};
}

inline Box3D box_from_json(const nlohmann::json& j) {
  Box3D b;
  b.cx = j.at("cx").get<double>();
  b.cy = j.at("cy").get<double>();
  b.cz = j.at("cz").get<double>();
  b.l = j.at("l").get<double>();
  b.w = j.at("w").get<double>();
  b.h = j.at("h").get<double>();
  b.theta = j.at("theta").get<double>();
  validate(b);
  return b;
}

inline ojson proposal_json(const std::string& frame_id, const Proposal& p) {
  ojson j;
  j["frame_id"] = frame_id;
  j["instance_id"] = p.instance_id;
  j["inlier_count"] = p.inlier_count;
  j["box_inlier_count"] = p.box_inlier_count;
  j["source_point_index"] = p.source_point_index;
  j["box"] = box_json(p.box);
  return j;
}

inline Proposal proposal_from_json(const nlohmann::json& j) {
  Proposal p;
  p.box = box_from_json(j.at("box"));
  p.instance_id = j.at("instance_id").get<int>();
  p.inlier_count = j.at("inlier_count").get<int>();
  p.box_inlier_count = j.value("box_inlier_count", p.inlier_count);
  p.source_point_index = j.value("source_point_index", std::size_t{0});
  return p;
}

inline ojson target_json(const RegressionTarget& t) {
  return ojson{{"objectness", t.objectness}, {"dx", t.dx}, {"dy", t.dy}, {"dz", t.dz},      {"dl", t.dl},
               {"dw", t.dw},                 {"dh", t.dh}, {"s_theta", t.s_theta},          {"c_theta", t.c_theta}};
}

inline std::string to_jsonl(const std::vector<ojson>& records) {
  std::string s;
  for (const auto& r : records) {
    s += r.dump();
    s += '\n';
  }
  return s;
}

/// Parses a JSON-lines file; errors name the line.
inline std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::vector<nlohmann::json> out;
  const std::string text = read_text_file(path);
  int line_no = 0;
  for (const auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.filename().string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

inline std::vector<Box3D> pedestrian_boxes(const std::optional<std::vector<LabelRecord>>& labels) {
  std::vector<Box3D> out;
  if (!labels) return out;
  for (const auto& r : *labels) {
    if (class_from_name(r.type) == kPedestrian) out.push_back(label_to_box(r));
  }
  return out;
}

// Collects per-frame failures into the summary; true when any frame failed.
template <class T>
bool report_errors(const std::vector<FrameResult<T>>& results, ojson& summary, std::ostream& log) {
  summary["errors"] = ojson::array();
  for (const auto& r : results) {
    if (r.value) continue;
    summary["errors"].push_back(ojson{{"frame_id", r.frame_id}, {"message", r.error}});
    log << "error: " << r.error << '\n';
  }
  return !summary["errors"].empty();
}

inline void write_json(const fs::path& path, const ojson& j) { write_file(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Proposal generation with per-instance NMS for every frame.
inline int cmd_propose(const PipelineConfig& c, std::ostream& log) {
  const auto ids = resolve_frames(c);
  struct Out {
    FrameProposals fp;
    std::string jsonl;
  };
  const auto results = for_each_frame<Out>(ids, c.jobs, [&](const std::string& id) {
    const auto frame = load_frame({c.root}, id, {.cloud = true, .masks = true, .labels = false});
    Out o;
    o.fp = propose(frame, c.mean_box, c.nms_iou);
    std::vector<ojson> recs;
    for (const auto& p : o.fp.kept) recs.push_back(proposal_json(id, p));
    o.jsonl = to_jsonl(recs);
    return o;
  });
  ProposalStats stats;
  for (const auto& r : results) {
    if (!r.value) continue;
    write_file(c.out / "proposals" / (r.frame_id + ".jsonl"), r.value->jsonl);
    accumulate(stats, r.value->fp);
  }
  ojson s;
  s["frames"] = ids.size();
  s["instances"] = stats.instances;
  s["proposals_before_nms"] = stats.proposals_before_nms;
  s["proposals_after_nms"] = stats.proposals_after_nms;
  ojson hist = ojson::object();
  int one_to_five = 0;
  for (const auto& [n, count] : stats.survivors_per_instance) {
    hist[std::to_string(n)] = count;
    if (n >= 1 && n <= 5) one_to_five += count;
  }
  s["survivors_per_instance"] = hist;
  s["fraction_1_to_5"] = stats.instances > 0 ? static_cast<double>(one_to_five) / stats.instances : 0.0;
  const bool failed = report_errors(results, s, log);
  write_json(c.out / "proposals_summary.json", s);
  log << "propose: " << ids.size() << " frames, " << stats.proposals_after_nms << " proposals\n";
  return failed ? kExitData : kExitOk;
}

/// Displacement / grounding augmentation of the proposals of every frame.
inline int cmd_augment(const PipelineConfig& c, std::ostream& log) {
  const auto ids = resolve_frames(c);
  struct Out {
    std::string jsonl;
    std::map<std::string, int> labels;
    int proposals = 0;
    int records = 0;
    int grounded = 0;
  };
  const auto results = for_each_frame<Out>(ids, c.jobs, [&](const std::string& id) {
    const auto path = c.out / "proposals" / (id + ".jsonl");
    if (!fs::exists(path)) throw Error("frame " + id + ": no proposals (run propose first): " + path.string());
    const auto frame = load_frame({c.root}, id, {.cloud = true, .masks = false, .labels = false});
    const auto cam = to_camera_frame(frame.cloud, frame.calib);
    const auto gts = pedestrian_boxes(frame.labels);
    Out o;
    std::vector<ojson> recs;
    const auto lines = read_jsonl(path);
    for (std::size_t k = 0; k < lines.size(); ++k) {
      Proposal p;
      try {
        p = proposal_from_json(lines[k]);
      } catch (const std::exception& e) {
        throw ParseError(std::string("proposal record: ") + e.what(), static_cast<int>(k + 1));
      }
      ++o.proposals;
      for (const auto& lp : augment(p, cam, gts, c.augment, c.mode, derive_seed(c.seed, id, k))) {
        ojson j;
        j["frame_id"] = id;
        j["proposal_index"] = k;
        j["copy_index"] = lp.copy_index;
        j["instance_id"] = lp.proposal.instance_id;
        j["inlier_count"] = lp.proposal.inlier_count;
        j["label"] = to_string(lp.label);
        j["max_iou"] = lp.max_iou;
        j["gt_index"] = lp.gt_index;
        j["grounded"] = lp.grounded;
        j["box"] = box_json(lp.proposal.box);
        if (lp.gt_index >= 0) {
          const int obj = lp.label == AugmentLabel::kPositive ? 1 : 0;
          j["target"] = target_json(encode_target(lp.proposal.box, gts[static_cast<std::size_t>(lp.gt_index)], obj));
        } else {
          j["target"] = nullptr;
        }
        recs.push_back(std::move(j));
        ++o.labels[std::string(to_string(lp.label))];
        o.grounded += lp.grounded ? 1 : 0;
      }
    }
    o.records = static_cast<int>(recs.size());
    o.jsonl = to_jsonl(recs);
    return o;
  });
  ojson s;
  s["mode"] = c.mode == AugmentMode::kRandom ? "random" : c.mode == AugmentMode::kGrounding ? "grounding" : "combined";
  s["seed"] = c.seed;
  s["frames"] = ids.size();
  int proposals = 0, records = 0, grounded = 0;
  std::map<std::string, int> labels{{"positive", 0}, {"close_negative", 0}, {"negative", 0}};
  for (const auto& r : results) {
    if (!r.value) continue;
    write_file(c.out / "augmented" / (r.frame_id + ".jsonl"), r.value->jsonl);
    proposals += r.value->proposals;
    records += r.value->records;
    grounded += r.value->grounded;
    for (const auto& [k, v] : r.value->labels) labels[k] += v;
  }
  s["proposals"] = proposals;
  s["records"] = records;
  s["grounded"] = grounded;
  s["labels"] = labels;
  const bool failed = report_errors(results, s, log);
  write_json(c.out / "augment_summary.json", s);
  log << "augment: " << records << " records from " << proposals << " proposals\n";
  return failed ? kExitData : kExitOk;
}

/// Point crop and voxel tensors for every proposal (or augmented record).
inline int cmd_voxelize(const PipelineConfig& c, std::ostream& log) {
  const auto ids = resolve_frames(c);
  struct Out {
    std::vector<std::byte> tensors;
    ojson sidecar;
  };
  const auto results = for_each_frame<Out>(ids, c.jobs, [&](const std::string& id) {
    const auto path = c.out / c.voxel_input / (id + ".jsonl");
    if (!fs::exists(path)) throw Error("frame " + id + ": missing input " + path.string());
    const auto frame = load_frame({c.root}, id, {.cloud = true, .masks = false, .labels = false});
    const auto cam = to_camera_frame(frame.cloud, frame.calib);
    Out o;
    o.sidecar["frame_id"] = id;
    o.sidecar["input"] = c.voxel_input;
    o.sidecar["records"] = ojson::array();
    const auto lines = read_jsonl(path);
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const Box3D box = box_from_json(lines[k].at("box"));
      const auto crop = crop_cloud(cam, box.center(), c.voxel.extent);
      const auto grid = voxelize(crop, box.center(), c.voxel);
      const auto bytes = serialize_tensor(grid);
      o.tensors.insert(o.tensors.end(), bytes.begin(), bytes.end());
      ojson r;
      r["index"] = k;
      r["points"] = crop.size();
      const auto org = grid.origin();
      r["origin"] = {org.x, org.y, org.z};
      try {
        const auto roi = image_roi(box, frame.calib);
        r["image_roi"] = {roi.left, roi.top, roi.right, roi.bottom};
      } catch (const InvalidArgument&) {
        r["image_roi"] = nullptr;
      }
      o.sidecar["records"].push_back(std::move(r));
    }
    auto layout = tensor_sidecar(VoxelGrid({0, 0, 0}, c.voxel.extent), c.voxel.density);
    layout.erase("origin");  // per record
    o.sidecar["count"] = lines.size();
    o.sidecar["tensor"] = layout;
    return o;
  });
  std::size_t tensors = 0;
  ojson s;
  for (const auto& r : results) {
    if (!r.value) continue;
    write_file(c.out / "voxels" / (r.frame_id + ".bin"), std::span<const std::byte>(r.value->tensors));
    write_json(c.out / "voxels" / (r.frame_id + ".json"), r.value->sidecar);
    tensors += r.value->sidecar["count"].get<std::size_t>();
  }
  const bool failed = report_errors(results, s, log);
  log << "voxelize: " << tensors << " tensors\n";
  return failed ? kExitData : kExitOk;
}

/// KITTI-format predictions against the dataset labels.
inline int cmd_evaluate(const PipelineConfig& c, std::ostream& log) {
  if (!c.predictions) throw ConfigError("evaluate needs a predictions directory (eval.predictions)");
  if (!fs::is_directory(*c.predictions)) throw Error("predictions directory not found: " + c.predictions->string());
  const auto ids = resolve_frames(c);
  std::set<std::string> pred_ids;
  for (const auto& e : fs::directory_iterator(*c.predictions)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") pred_ids.insert(e.path().stem().string());
  }
  const DatasetLayout gt{c.root};
  const auto results = for_each_frame<EvalFrame>(ids, c.jobs, [&](const std::string& id) {
    if (!fs::exists(gt.labels(id))) throw Error("frame " + id + ": no ground-truth labels");
    if (!pred_ids.count(id)) throw Error("frame " + id + ": no prediction file");
    try {
      const auto g = parse_label_file(read_text_file(gt.labels(id)));
      const auto d = parse_label_file(read_text_file(*c.predictions / (id + ".txt")));
      return eval_frame(id, g, d);
    } catch (const Error& e) {
      throw Error("frame " + id + ": " + e.what());
    }
  });
  std::vector<EvalFrame> frames;
  std::vector<std::string> warnings;
  for (const auto& r : results) {
    if (r.value) {
      frames.push_back(*r.value);
    } else {
      warnings.push_back(r.error + " (skipped)");
    }
  }
  const std::set<std::string> split_ids(ids.begin(), ids.end());
  for (const auto& p : pred_ids) {
    if (!split_ids.count(p)) warnings.push_back("frame " + p + ": prediction without ground truth in the split (skipped)");
  }
  auto rep = evaluate(frames, c.eval);
  rep.warnings = warnings;
  auto j = to_json(rep);
  j["frames_skipped"] = ids.size() - frames.size();
  j["warning_count"] = warnings.size();
  write_json(c.out / "eval_report.json", j);
  write_file(c.out / "eval_report.csv", to_csv(rep));
  for (const auto& w : warnings) log << "warning: " << w << '\n';
  log << "evaluate: " << frames.size() << " frames, " << warnings.size() << " warnings\n";
  return kExitOk;
}

/// Per-range point / pixel statistics of the labeled objects.
inline int cmd_stats(const PipelineConfig& c, std::ostream& log) {
  const auto ids = resolve_frames(c);
  const auto results = for_each_frame<Frame>(ids, c.jobs, [&](const std::string& id) {
    return load_frame({c.root}, id, {.cloud = true, .masks = false, .labels = true});
  });
  std::vector<Frame> frames;
  std::vector<LabelRecord> all_labels;
  for (const auto& r : results) {
    if (!r.value) continue;
    frames.push_back(*r.value);
    all_labels.insert(all_labels.end(), r.value->labels->begin(), r.value->labels->end());
  }
  const auto st = dataset_stats(frames, c.eval.bins);
  auto j = to_json(st);
  if (const auto mb = mean_box_from_labels(all_labels)) {
    j["mean_box"] = ojson{{"l", mb->l}, {"w", mb->w}, {"h", mb->h}};
  } else {
    j["mean_box"] = nullptr;
  }
  const bool failed = report_errors(results, j, log);
  write_json(c.out / "stats.json", j);
  write_file(c.out / "stats.csv", to_csv(st));
  log << "stats: " << st.objects << " objects in " << frames.size() << " frames\n";
  return failed ? kExitData : kExitOk;
}

/// Writes a reproducible synthetic corpus (with split.txt) under c.root.
inline int cmd_synth(const PipelineConfig& c, std::ostream& log) {
  std::vector<std::string> ids;
  for (int i = 0; i < c.synth.frames; ++i) ids.push_back(random_scene_spec(c.synth, c.seed, i).frame_id);
  const auto results = for_each_frame<int>(ids, c.jobs, [&](const std::string& id) {
    const int index = std::stoi(id);
    const auto spec = random_scene_spec(c.synth, c.seed, index);
    const auto sf = generate_synthetic_frame(spec, derive_seed(c.seed, id, 1));
    save_frame({c.root}, sf.frame);
    return 0;
  });
  std::string split;
  for (const auto& id : ids) split += id + "\n";
  write_file(c.root / "split.txt", split);
  ojson s;
  const bool failed = report_errors(results, s, log);
  log << "synth: " << ids.size() << " frames under " << c.root.string() << '\n';
  return failed ? kExitData : kExitOk;
}

}  // namespace lrpd

#endif  // LRPD_PIPELINE_HPP
