#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dinavd/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::string> out;
  std::optional<double> alpha, beta, t_end, step;
  std::optional<std::uint64_t> seed;

  dinavd::ConfigOverrides overrides() const {
    dinavd::ConfigOverrides o;
    o.alpha = alpha;
    o.beta = beta;
    o.t_end = t_end;
    o.step = step;
    o.seed = seed;
    o.output_dir = out;
    return o;
  }
};

void add_overrides(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--alpha", c.alpha, "Viscous damping coefficient");
  cmd->add_option("--beta", c.beta, "Hessian damping coefficient");
  cmd->add_option("--t-end", c.t_end, "Final time (discrete runs: iterations = (t_end - t0) / h)");
  cmd->add_option("--step", c.step, "Integration step (discrete runs: h)");
  cmd->add_option("--seed", c.seed, "Problem instance seed");
}

dinavd::ExperimentConfig load(const std::string& path, const Common& c) {
  dinavd::ExperimentConfig cfg;
  try {
    cfg = dinavd::load_experiment_config(path);
    dinavd::apply_overrides(cfg, c.overrides());
  } catch (const dinavd::StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw dinavd::StageError("config", e.what());
  }
  return cfg;
}

void print(const dinavd::ArtifactPaths& paths) {
  for (const auto& p : paths.files) std::cout << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inertial dynamics with Hessian damping: simulation, solvers and diagnostics"};
  app.require_subcommand(1);

  Common sim, sol, diag, cmp;
  std::string csv_path;
  std::vector<std::string> compare_configs;
  std::string reproduce_out = "out/illustrations";

  auto* simulate = app.add_subcommand("simulate", "Integrate a continuous system");
  simulate->add_option("--config", sim.config, "Experiment file")->required()->check(CLI::ExistingFile);
  add_overrides(simulate, sim);

  auto* solve = app.add_subcommand("solve", "Run a discrete solver (ifb_avd, fista, fb)");
  solve->add_option("--config", sol.config, "Experiment file")->required()->check(CLI::ExistingFile);
  add_overrides(solve, sol);

  auto* diagnose = app.add_subcommand("diagnose", "Recompute diagnostics from a trajectory.csv");
  diagnose->add_option("--config", diag.config, "Experiment file the trajectory came from")
      ->required()
      ->check(CLI::ExistingFile);
  diagnose->add_option("--csv", csv_path, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  add_overrides(diagnose, diag);

  auto* reproduce = app.add_subcommand("reproduce", "Write the illustration panel series");
  reproduce->add_option("--out", reproduce_out, "Output directory")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Align gap curves of several discrete runs");
  compare->add_option("--config", compare_configs, "Experiment files (one per solver)")
      ->required()
      ->check(CLI::ExistingFile);
  add_overrides(compare, cmp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate || *solve) {
      const Common& c = *simulate ? sim : sol;
      const auto cfg = load(c.config, c);
      if (dinavd::is_discrete(cfg.system) != static_cast<bool>(*solve)) {
        throw dinavd::StageError("config", "system '" + dinavd::to_string(cfg.system) + "' needs the '" +
                                               (dinavd::is_discrete(cfg.system) ? "solve" : "simulate") +
                                               "' subcommand");
      }
      print(dinavd::run_experiment(cfg));
    } else if (*diagnose) {
      const auto cfg = load(diag.config, diag);
      print(dinavd::diagnose_trajectory(cfg, csv_path, cfg.output_dir));
    } else if (*reproduce) {
      print(dinavd::reproduce_illustrations(reproduce_out));
    } else if (*compare) {
      std::vector<dinavd::ExperimentConfig> cfgs;
      for (const auto& path : compare_configs) cfgs.push_back(load(path, cmp));
      const std::string out = cmp.out ? *cmp.out : cfgs.front().output_dir;
      const auto table = dinavd::compare_solvers(cfgs, out);
      std::cout << out << "/comparison.csv (" << table.rows.size() << " rows)\n";
    }
  } catch (const dinavd::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: [internal] " << e.what() << '\n';
    return 3;
  }
  return 0;
}
