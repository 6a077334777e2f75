// markersim: generate | run | train | report
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "markersim/bench.hpp"
#include "markersim/errors.hpp"
#include "markersim/report.hpp"
#include "markersim/scene_io.hpp"

namespace fs = std::filesystem;
using namespace markersim;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

HarnessConfig load_harness(const std::string& path) {
  return path.empty() ? HarnessConfig{} : parse_harness_config(read_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marker search benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("generate", "Generate the scenario suite (manifest + scenes)");
  std::optional<int> combos;
  std::optional<int> variants;
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--config", config_path, "Harness config file (JSON)");
  gen->add_option("--seed", seed, "Master seed");
  gen->add_option("--combos", combos, "Total marker-start combinations (split across maps)");
  gen->add_option("--variants", variants, "Perceptual variants per combination");

  auto* run = app.add_subcommand("run", "Run methods over a suite");
  std::string manifest;
  std::string methods;
  std::string checkpoint;
  std::optional<int> workers;
  std::optional<int> step_budget;
  bool force = false;
  run->add_option("--manifest", manifest, "Suite manifest (manifest.jsonl)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--config", config_path, "Harness config file (JSON)");
  run->add_option("--methods", methods, "Comma-separated subset of Spiral2D,Spiral3D,Zigzag2D,Zigzag3D,E2ERL");
  run->add_option("--checkpoint", checkpoint, "Policy checkpoint for E2ERL");
  run->add_option("--workers", workers, "Worker threads");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--step-budget", step_budget, "Maximum steps per episode");
  run->add_flag("--force", force, "Rerun episodes that already have records");

  auto* tr = app.add_subcommand("train", "Train the exploration policy");
  std::optional<int> updates;
  std::optional<int> horizon;
  tr->add_option("--out", out_dir, "Output directory")->required();
  tr->add_option("--config", config_path, "Training config file (JSON)");
  tr->add_option("--updates", updates, "Total PPO updates");
  tr->add_option("--horizon", horizon, "Environment steps per rollout");
  tr->add_option("--seed", seed, "Training seed");

  auto* rep = app.add_subcommand("report", "Compute metric tables from episode records");
  std::string records;
  std::string report_manifest;
  bool nonsunny = false;
  rep->add_option("--records", records, "Run or records directory")->required();
  rep->add_option("--manifest", report_manifest, "Suite manifest (default: from run_meta.json)");
  rep->add_option("--out", out_dir, "Report output directory (default: <records>/report)");
  rep->add_option("--config", config_path, "Harness config file (JSON)");
  rep->add_flag("--severity-nonsunny", nonsunny, "Average severity over non-sunny episodes only");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      HarnessConfig h = load_harness(config_path);
      if (seed) h.seed = *seed;
      if (combos) h.combos = *combos;
      if (variants) h.variants = *variants;
      std::cout << generate_suite_files(h.suite(), out_dir) << '\n';
      return 0;
    }
    if (*run) {
      HarnessConfig h = load_harness(config_path);
      RunConfig rc = h.run;
      rc.manifest = manifest;
      rc.out_dir = out_dir;
      if (!methods.empty()) {
        rc.methods.clear();
        for (const auto& m : split_list(methods)) rc.methods.push_back(method_from_string(m));
      }
      if (!checkpoint.empty()) rc.checkpoint = checkpoint;
      if (workers) rc.workers = *workers;
      if (seed) rc.master_seed = *seed;
      if (step_budget) rc.episode.step_budget = *step_budget;
      rc.force = force;
      const RunSummary s = run_benchmark(rc, std::cout);
      return s.errors.empty() ? 0 : 3;
    }
    if (*tr) {
      rl::TrainConfig tc = config_path.empty() ? rl::TrainConfig{} : rl::parse_train_config(read_file(config_path));
      if (updates) tc.total_updates = *updates;
      if (horizon) tc.horizon = *horizon;
      if (seed) tc.seed = *seed;
      const TrainOutcome t = train_to_dir(tc, out_dir);
      std::cout << "updates " << t.result.log.size() << ", final stage " << t.result.final_stage
                << ", final covered_fraction " << format_double(t.final_covered_fraction) << '\n';
      std::cout << "checkpoint " << t.checkpoint.string() << '\n';
      if (t.result.diverged) {
        std::cerr << "training diverged: " << t.result.message << "; last good checkpoint "
                  << t.checkpoint.string() << '\n';
        return 4;
      }
      return 0;
    }
    if (*rep) {
      FactorConfig fc;
      if (!config_path.empty()) fc.sunny_counts_as_zero = load_harness(config_path).sunny_severity_as_zero;
      if (nonsunny) fc.sunny_counts_as_zero = false;
      const fs::path dir = records;
      const fs::path out = out_dir.empty() ? dir / "report" : fs::path(out_dir);
      std::optional<fs::path> m;
      if (!report_manifest.empty()) m = report_manifest;
      return run_report(dir, m, out, fc, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
