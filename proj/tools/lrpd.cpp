// lrpd: command-line front end for the pedestrian detection pipeline.
//
//   lrpd synth     --root DIR [--seed N]
//   lrpd propose   --config run.toml
//   lrpd augment   --config run.toml --mode combined
//   lrpd voxelize  --config run.toml
//   lrpd evaluate  --config run.toml --predictions DIR
//   lrpd stats     --config run.toml
//   lrpd selfcheck
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrpd/pipeline.hpp"
#include "lrpd/selfcheck.hpp"

namespace {

struct Flags {
  std::string config;
  std::string split;
  std::string mode;
  std::string out;
  std::string root;
  std::string predictions;
  std::optional<long long> seed;
  std::optional<int> jobs;
  std::vector<std::string> overrides;
};

lrpd::PipelineConfig build_config(const Flags& f) {
  auto file = f.config.empty() ? lrpd::ConfigFile{} : lrpd::ConfigFile::load(f.config);
  for (const auto& o : f.overrides) file.apply_override(o);
  if (!f.root.empty()) file.set("dataset.root", '"' + f.root + '"');
  if (!f.split.empty()) file.set("dataset.split", '"' + f.split + '"');
  if (!f.out.empty()) file.set("output.dir", '"' + f.out + '"');
  if (!f.mode.empty()) file.set("augment.mode", '"' + f.mode + '"');
  if (!f.predictions.empty()) file.set("eval.predictions", '"' + f.predictions + '"');
  if (f.seed) file.set("seed", std::to_string(*f.seed));
  if (f.jobs) file.set("jobs", std::to_string(*f.jobs));
  return lrpd::config_from(file);
}

int run_selfcheck() {
  bool ok = true;
  for (const auto& r : lrpd::run_selfcheck()) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.pass;
  }
  return ok ? lrpd::kExitOk : lrpd::kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-range pedestrian detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "TOML-style run configuration");
  app.add_option("--split", f.split, "file listing frame ids, one per line");
  app.add_option("--mode", f.mode, "augmentation mode: random, grounding, combined");
  app.add_option("--seed", f.seed, "global seed");
  app.add_option("--jobs", f.jobs, "worker threads");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--root", f.root, "dataset root (KITTI layout)");
  app.add_option("--predictions", f.predictions, "directory of KITTI-format predictions (evaluate)");
  app.add_option("--set", f.overrides, "config override, section.key=value (repeatable)");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "write a synthetic corpus to the dataset root"},
      {"propose", "mask-driven proposals with per-instance NMS"},
      {"augment", "displacement / grounding augmentation with targets"},
      {"voxelize", "point crops and voxel tensors per proposal"},
      {"evaluate", "range-binned AP and best-F1 report"},
      {"stats", "per-range point and pixel statistics"},
      {"selfcheck", "run the built-in oracle checks"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? lrpd::kExitOk : lrpd::kExitUsage;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    if (cmd == "selfcheck") return run_selfcheck();
    const auto cfg = build_config(f);
    if (cmd != "synth" && cfg.root.empty()) throw lrpd::ConfigError("no dataset root (--root or dataset.root)");
    if (cmd == "synth") {
      if (cfg.root.empty()) throw lrpd::ConfigError("synth needs --root");
      return lrpd::cmd_synth(cfg, std::cerr);
    }
    if (cmd == "propose") return lrpd::cmd_propose(cfg, std::cerr);
    if (cmd == "augment") return lrpd::cmd_augment(cfg, std::cerr);
    if (cmd == "voxelize") return lrpd::cmd_voxelize(cfg, std::cerr);
    if (cmd == "evaluate") return lrpd::cmd_evaluate(cfg, std::cerr);
    if (cmd == "stats") return lrpd::cmd_stats(cfg, std::cerr);
  } catch (const lrpd::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return lrpd::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lrpd::kExitData;
  }
  return lrpd::kExitUsage;
}
