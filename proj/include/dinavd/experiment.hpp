#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dinavd/config.hpp"
#include "dinavd/csv.hpp"

namespace dinavd {

/// Failure in one named stage of an experiment (config, instance, integrate,
/// solve, diagnose, write).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ArtifactPaths {
  std::vector<std::filesystem::path> files;
};

/// Builds the instance, runs the configured system, and writes
/// trajectory.csv or iterates.csv, diagnostics.csv and summary.txt into
/// cfg.output_dir.
ArtifactPaths run_experiment(const ExperimentConfig& cfg);

/// Recomputes diagnostics.csv and summary.txt from a trajectory.csv written
/// by a smooth continuous run; cfg supplies the problem and parameters.
ArtifactPaths diagnose_trajectory(const ExperimentConfig& cfg, const std::filesystem::path& trajectory_csv,
                                  const std::filesystem::path& out_dir);

/// Writes the panel series of both illustrations (quadratic in 1-D and the
/// ill-conditioned 2-D quadratic, AVD vs DIN-AVD) into out_dir.
ArtifactPaths reproduce_illustrations(const std::filesystem::path& out_dir);

/// Runs every discrete config on their shared problem and aligns gap against
/// iteration and time into out_dir/comparison.csv.
Table compare_solvers(const std::vector<ExperimentConfig>& cfgs, const std::filesystem::path& out_dir);

}  // namespace dinavd
