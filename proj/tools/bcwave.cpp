#include "bcwave/checks.hpp"
#include "bcwave/parallel.hpp"
#include "bcwave/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace bcwave;

namespace {

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  if (dynamic_cast<const ProvenanceError*>(&e) || dynamic_cast<const IntegrityError*>(&e)) return 4;
  return 1;
}

void print_report(const StageReport& r) {
  std::printf("%-12s %s %8.2f s\n", stage_name(r.stage).c_str(), r.resumed ? "resumed" : "done   ", r.seconds);
}

struct StageArgs {
  std::string config;
  std::string dir;
  bool fresh = false;
};

void add_stage_options(CLI::App* cmd, StageArgs& args) {
  cmd->add_option("-c,--config", args.config, "Pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-d,--dir", args.dir, "Artifact directory (defaults to the config's output)");
  cmd->add_flag("--fresh", args.fresh, "Recompute instead of resuming");
}

fs::path artifact_dir(const StageArgs& args, const PipelineConfig& config) {
  return args.dir.empty() ? fs::path(config.output) : fs::path(args.dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary Control reconstruction of wave speeds from Neumann-to-Dirichlet data"};
  app.require_subcommand(1);
  std::optional<unsigned> threads;
  bool serial = false;
  app.add_option("--threads", threads, "Maximum worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--serial", serial, "Run single-threaded");

  StageArgs stage_args;
  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  const char* help[] = {"Record N-to-D traces for every basis source", "Assemble the connecting operator from traces",
                        "Solve the cap control problems on the reconstruction grid",
                        "Estimate the coordinate transform from caps and traces",
                        "Fit splines and differentiate to estimate the wave speed"};
  for (Stage s : kAllStages) {
    CLI::App* cmd = app.add_subcommand(stage_name(s), help[static_cast<int>(s)]);
    add_stage_options(cmd, stage_args);
    stage_cmds.emplace_back(cmd, s);
  }
  CLI::App* run = app.add_subcommand("run", "Run every stage, resuming where outputs are current");
  add_stage_options(run, stage_args);

  std::string plot_dir;
  CLI::App* plots = app.add_subcommand("plots", "Write plot data for a finished run");
  plots->add_option("-d,--dir", plot_dir, "Artifact directory")->required();

  bool full = false;
  CLI::App* check = app.add_subcommand("check", "Run the oracle checks");
  check->add_flag("--full", full, "Include the end-to-end reconstructions (slow)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the configuration exit code.
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (serial) {
    set_thread_limit(1);
  } else if (threads) {
    set_thread_limit(*threads);
  }

  try {
    for (auto& [cmd, stage] : stage_cmds) {
      if (!cmd->parsed()) continue;
      const PipelineConfig config = PipelineConfig::load(stage_args.config);
      print_report(run_stage(config, artifact_dir(stage_args, config), stage, {stage_args.fresh}));
      return 0;
    }
    if (run->parsed()) {
      const PipelineConfig config = PipelineConfig::load(stage_args.config);
      for (const auto& r : run_pipeline(config, artifact_dir(stage_args, config), {stage_args.fresh})) print_report(r);
      return 0;
    }
    if (plots->parsed()) {
      for (const auto& p : emit_plots(plot_dir)) std::cout << p.string() << "\n";
      return 0;
    }
    if (check->parsed()) {
      bool ok = true;
      for (const auto& c : run_checks(full ? CheckLevel::full : CheckLevel::quick)) {
        std::cout << c.line() << std::endl;
        ok = ok && c.passed;
      }
      return ok ? 0 : 3;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
