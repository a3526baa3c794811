#pragma once

#include "bcwave/basis.hpp"
#include "bcwave/forward.hpp"
#include "bcwave/medium.hpp"
#include "bcwave/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bcwave {

struct MediumSpec {
  std::string kind = "constant";  ///< constant | layered | lens | file
  double c = 1.0;                 ///< constant
  double c0 = 1.0, gradient = 0.0;  ///< layered
  std::string path;               ///< file: SpeedField header

  bool operator==(const MediumSpec&) const = default;
};

/// One experiment. Scalar keys follow the symbols of the method: T, t0, ls, lr, dts, dxs, a,
/// dxr, dtr, h, alpha. alpha is relative to trace(K) / N.
struct PipelineConfig {
  MediumSpec medium;
  double T = 1.0, t0 = 0.1;
  double ls = 3.0, lr = 4.5;
  double dts = 0.025, dxs = 0.025, a = 1381.6;
  double dxr = 0.0125, dtr = 0.0025;
  // Reconstruction grid.
  double y_min = -0.5, y_max = 0.5, y_step = 0.025;
  double s_min = 0.025, s_max = 0.675, s_step = 0.025;
  double h = 0.05, alpha = 1e-3;
  std::optional<double> spline_lambda;
  // Forward solver.
  double dx = 0.00625, cfl = 0.4;
  std::string output = "artifacts";

  bool operator==(const PipelineConfig&) const = default;

  /// Throws ConfigError on inconsistent fields.
  void validate() const;
  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  BasisParams basis_params() const;
  ReceiverLattice receiver_lattice() const;
  std::vector<double> ys() const;
  std::vector<double> ss() const;
};

/// Analytic speed for constant, layered and lens media; the bilinear field for files.
SpeedFunction medium_speed(const MediumSpec& spec);

/// Simulation grid for the configuration and the medium sampled on it.
struct ForwardSetup {
  SimGrid grid;
  SpeedField field;
};
ForwardSetup forward_setup(const PipelineConfig& config);

enum class Stage { simulate, connect, caps, reconstruct, speed };
inline constexpr Stage kAllStages[] = {Stage::simulate, Stage::connect, Stage::caps, Stage::reconstruct, Stage::speed};
std::string stage_name(Stage s);
Stage parse_stage(const std::string& name);

struct StageReport {
  Stage stage;
  bool resumed = false;
  double seconds = 0.0;
};

struct RunOptions {
  /// Discard existing stage outputs instead of resuming from them.
  bool fresh = false;
};

/// Runs one stage in dir, resuming when its manifest matches the configuration, the upstream
/// manifest and its own outputs. A manifest that exists but does not match raises
/// ProvenanceError. Failures also leave dir/error.json.
StageReport run_stage(const PipelineConfig& config, const std::filesystem::path& dir, Stage stage,
                      const RunOptions& options = {});

/// simulate -> connect -> caps -> reconstruct -> speed.
std::vector<StageReport> run_pipeline(const PipelineConfig& config, const std::filesystem::path& dir,
                                      const RunOptions& options = {});

/// Writes plot data under dir/plots in four bundles: model, coordinates, comparison, slices.
/// Returns the files written.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir);

}  // namespace bcwave
