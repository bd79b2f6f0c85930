#include "dinavd/experiment.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace dinavd {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using SummaryLines = std::vector<std::pair<std::string, std::string>>;

template <class F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::string window_str(std::pair<double, double> w) {
  return "[" + format_double(w.first) + ", " + format_double(w.second) + "]";
}

CompositeProblem build_instance(const ExperimentConfig& cfg) {
  return staged("instance", [&] { return make_instance(cfg.problem.id, cfg.problem.seed); });
}

Vector resolve_x0(const Vector& given, int dim) { return given.size() ? given : Vector::Ones(dim); }
Vector resolve_v0(const Vector& given, int dim) { return given.size() ? given : Vector::Zero(dim); }

Perturbation build_perturbation(const PerturbationChoice& ps, int dim) {
  if (ps.name == "power") return power_perturbation(dim, ps.coeffs[0], ps.coeffs[1]);
  if (ps.name == "constant") return constant_perturbation(dim, ps.coeffs[0]);
  return constant_perturbation(dim, 0.0);
}

DiagnosticsOptions diagnostics_options(const ExperimentConfig& cfg, const CompositeProblem& c) {
  DiagnosticsOptions o;
  o.min_value = c.known_opt_value;
  o.xstar = c.minimizer;
  o.lambda = cfg.diagnostics.lambda;
  o.rate_window = cfg.diagnostics.rate_window;
  if (cfg.diagnostics.wants("little_o")) {
    o.little_o_head = cfg.diagnostics.little_o_head;
    o.little_o_tail = cfg.diagnostics.little_o_tail;
  }
  return o;
}

void write_summary(const fs::path& path, const SummaryLines& lines) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& [k, v] : lines) out << k << " = " << v << '\n';
}

void add_problem_lines(SummaryLines& s, const ExperimentConfig& cfg, const CompositeProblem& c) {
  s.emplace_back("schema_version", std::to_string(kConfigSchemaVersion));
  s.emplace_back("problem", cfg.problem.id);
  s.emplace_back("seed", std::to_string(cfg.problem.seed));
  s.emplace_back("system", to_string(cfg.system));
  s.emplace_back("min_value", c.known_opt_value ? format_double(*c.known_opt_value) : "unknown");
}

void add_dynamics_lines(SummaryLines& s, const DynamicsParams& p) {
  s.emplace_back("alpha", format_double(p.alpha));
  s.emplace_back("beta", format_double(p.beta));
  s.emplace_back("t0", format_double(p.t0));
  s.emplace_back("t_end", format_double(p.t_end));
  s.emplace_back("step", format_double(p.step));
  s.emplace_back("sample_every", std::to_string(p.effective_sample_every()));
}

void add_diagnostics_lines(SummaryLines& s, const ExperimentConfig& cfg, const DiagnosticsReport& r) {
  const auto& want = cfg.diagnostics;
  if (!r.times.empty()) {
    s.emplace_back("final_t", format_double(r.times.back()));
    s.emplace_back("final_gap", format_double(r.t2_gap.back() / (r.times.back() * r.times.back())));
  }
  if (want.wants("lyapunov") || want.wants("energy")) s.emplace_back("audit_tol", format_double(r.audit_tol));
  if (want.wants("lyapunov")) {
    s.emplace_back("violations_W0", std::to_string(r.violations.count("W0") ? r.violations.at("W0").size() : 0));
    s.emplace_back("violations_Wbeta",
                   std::to_string(r.violations.count("Wbeta") ? r.violations.at("Wbeta").size() : 0));
  }
  if (want.wants("energy")) {
    if (r.violations.count("E_scaled")) {
      s.emplace_back("violations_E_scaled", std::to_string(r.violations.at("E_scaled").size()));
    } else {
      s.emplace_back("violations_E_scaled", "n/a");
    }
  }
  if (want.wants("rate")) {
    if (auto it = r.fitted_slopes.find("value_gap"); it != r.fitted_slopes.end()) {
      s.emplace_back("slope_window", window_str(it->second.window));
      s.emplace_back("slope", format_double(it->second.fit.slope));
      s.emplace_back("slope_r2", format_double(it->second.fit.r2));
      s.emplace_back("slope_samples", std::to_string(it->second.fit.used));
      s.emplace_back("slope_excluded_floor", std::to_string(it->second.fit.excluded_floor));
    } else {
      s.emplace_back("slope", "n/a");
    }
  }
  if (want.wants("tail")) {
    for (const auto& [name, ri] : r.tail.integrals) {
      s.emplace_back("integral_" + name, format_double(ri.total));
      s.emplace_back("integral_" + name + "_last_decade", format_double(ri.last_decade_increment));
    }
  }
  if (want.wants("little_o")) {
    s.emplace_back("little_o_ratio", r.little_o_ratio ? format_double(*r.little_o_ratio) : "n/a");
  }
  for (const auto& n : r.notices) s.emplace_back("notice", n);
}

Trajectory integrate(const ExperimentConfig& cfg, const CompositeProblem& c, DynamicsParams p) {
  p.x0 = resolve_x0(p.x0, c.dim());
  p.v0 = resolve_v0(p.v0, c.dim());
  const bool smooth_system = cfg.system != SystemTag::gdinavd;
  if (smooth_system && c.nonsmooth) {
    throw StageError("integrate", "system '" + to_string(cfg.system) + "' needs a smooth problem; '" + c.label +
                                      "' has a nonsmooth part (use gdinavd)");
  }
  return staged("integrate", [&] {
    switch (cfg.system) {
      case SystemTag::avd: return integrate_avd(c.smooth, p);
      case SystemTag::dinavd2: return integrate_dinavd_2nd(c.smooth, p);
      case SystemTag::dinavd1: return integrate_dinavd_1st(c.smooth, p);
      case SystemTag::perturbed:
        return integrate_perturbed(c.smooth, p, build_perturbation(*cfg.perturbation, c.dim()));
      case SystemTag::gdinavd: return integrate_gdinavd(c, p);
      default: throw Error("system '" + to_string(cfg.system) + "' is discrete; use solve");
    }
  });
}

IterateHistory solve(const ExperimentConfig& cfg, const CompositeProblem& c) {
  const auto& p = std::get<AlgoParams>(cfg.params);
  const Vector x0 = resolve_x0(cfg.x0, c.dim());
  return staged("solve", [&] {
    switch (cfg.system) {
      case SystemTag::ifb_avd:
        return run_ifb_avd(c, p, x0, ifb_initial_y(c, p, x0, resolve_v0(cfg.v0, c.dim())));
      case SystemTag::fista: return run_fista(c, p, x0);
      case SystemTag::fb: return run_forward_backward(c, p, x0);
      default: throw Error("system '" + to_string(cfg.system) + "' is continuous; use simulate");
    }
  });
}

DynamicsParams ifb_as_dynamics(const AlgoParams& a, const Vector& x0, const Vector& v0) {
  DynamicsParams p;
  p.alpha = a.alpha;
  p.beta = a.beta;
  p.t0 = a.t0;
  p.step = a.h;
  p.t_end = a.t0 + static_cast<double>(a.iterations) * a.h;
  p.x0 = x0;
  p.v0 = v0;
  return p;
}

// Gap-only report for baselines that have no continuous-time counterpart here.
DiagnosticsReport baseline_diagnostics(const IterateHistory& h, std::optional<double> opt) {
  DiagnosticsReport r;
  const std::size_t n = h.size();
  r.times = h.ts;
  r.W0.assign(n, kNaN);
  r.Wbeta.assign(n, kNaN);
  r.E_lambda.assign(n, kNaN);
  r.E_scaled.assign(n, kNaN);
  r.t_resid.assign(n, kNaN);
  r.t2_gap.assign(n, kNaN);
  if (opt) {
    for (std::size_t i = 0; i < n; ++i) r.t2_gap[i] = h.ts[i] * h.ts[i] * (h.objectives[i] - *opt);
  }
  return r;
}

}  // namespace

ArtifactPaths run_experiment(const ExperimentConfig& cfg) {
  staged("config", [&] { validate(cfg); });
  const CompositeProblem c = build_instance(cfg);
  const fs::path out = cfg.output_dir;
  ArtifactPaths paths;
  SummaryLines summary;
  add_problem_lines(summary, cfg, c);

  if (!is_discrete(cfg.system)) {
    const Trajectory traj = integrate(cfg, c, std::get<DynamicsParams>(cfg.params));
    const DiagnosticsReport rep = staged("diagnose", [&] { return make_diagnostics(traj, diagnostics_options(cfg, c)); });
    add_dynamics_lines(summary, traj.params);
    summary.emplace_back("samples", std::to_string(traj.size()));
    add_diagnostics_lines(summary, cfg, rep);
    staged("write", [&] {
      write_trajectory_csv(out / "trajectory.csv", traj);
      write_diagnostics_csv(out / "diagnostics.csv", rep);
      write_summary(out / "summary.txt", summary);
    });
    paths.files = {out / "trajectory.csv", out / "diagnostics.csv", out / "summary.txt"};
    return paths;
  }

  const IterateHistory hist = solve(cfg, c);
  const auto& ap = std::get<AlgoParams>(cfg.params);
  DiagnosticsReport rep;
  if (cfg.system == SystemTag::ifb_avd) {
    const DynamicsParams dp = ifb_as_dynamics(ap, resolve_x0(cfg.x0, c.dim()), resolve_v0(cfg.v0, c.dim()));
    rep = staged("diagnose", [&] {
      return make_diagnostics(trajectory_from_ifb(c, hist, dp), diagnostics_options(cfg, c));
    });
  } else {
    rep = baseline_diagnostics(hist, c.known_opt_value);
  }
  summary.emplace_back("alpha", format_double(ap.alpha));
  summary.emplace_back("beta", format_double(ap.beta));
  summary.emplace_back("h", format_double(ap.h));
  summary.emplace_back("t0", format_double(ap.t0));
  summary.emplace_back("iterations", std::to_string(ap.iterations));
  summary.emplace_back("final_objective", format_double(hist.objectives.back()));
  summary.emplace_back("best_objective", format_double(hist.best_so_far.back()));
  if (c.known_opt_value) summary.emplace_back("best_gap", format_double(hist.final_gap(*c.known_opt_value)));
  if (cfg.system == SystemTag::ifb_avd) {
    add_diagnostics_lines(summary, cfg, rep);
  }
  staged("write", [&] {
    write_iterates_csv(out / "iterates.csv", hist);
    write_diagnostics_csv(out / "diagnostics.csv", rep);
    write_summary(out / "summary.txt", summary);
  });
  paths.files = {out / "iterates.csv", out / "diagnostics.csv", out / "summary.txt"};
  return paths;
}

ArtifactPaths diagnose_trajectory(const ExperimentConfig& cfg, const fs::path& trajectory_csv, const fs::path& out_dir) {
  staged("config", [&] {
    validate(cfg);
    if (is_discrete(cfg.system)) throw Error("diagnose works on continuous trajectories, not '" + to_string(cfg.system) + "'");
  });
  const CompositeProblem c = build_instance(cfg);
  if (c.nonsmooth) {
    throw StageError("diagnose", "'" + c.label + "' has a nonsmooth part; gradients cannot be rebuilt from the CSV");
  }
  Trajectory traj = staged("read", [&] { return read_trajectory_csv(trajectory_csv); });
  if (!traj.xs.empty() && traj.xs.front().size() != c.dim()) {
    throw StageError("read", "trajectory dimension does not match problem '" + c.label + "'");
  }
  traj.system = to_string(cfg.system);
  traj.params = std::get<DynamicsParams>(cfg.params);
  if (cfg.system == SystemTag::avd) traj.params.beta = 0.0;
  for (const Vector& x : traj.xs) traj.grads.push_back(c.smooth.gradient(x));

  const DiagnosticsReport rep = staged("diagnose", [&] { return make_diagnostics(traj, diagnostics_options(cfg, c)); });
  SummaryLines summary;
  add_problem_lines(summary, cfg, c);
  add_dynamics_lines(summary, traj.params);
  summary.emplace_back("samples", std::to_string(traj.size()));
  add_diagnostics_lines(summary, cfg, rep);
  staged("write", [&] {
    write_diagnostics_csv(out_dir / "diagnostics.csv", rep);
    write_summary(out_dir / "summary.txt", summary);
  });
  return {{out_dir / "diagnostics.csv", out_dir / "summary.txt"}};
}

ArtifactPaths reproduce_illustrations(const fs::path& out_dir) {
  ArtifactPaths paths;
  auto emit = [&](const std::string& name, const Table& t) {
    staged("write", [&] { write_table_csv(out_dir / name, t); });
    paths.files.push_back(out_dir / name);
  };

  DynamicsParams p;
  p.alpha = 3.1;
  p.beta = 1.0;
  p.t0 = 1.0;
  p.t_end = 20.0;
  p.step = 1e-3;

  // Figure 1: 1-D quadratic, x(1) = 1, x'(1) = -3.
  {
    const CompositeProblem c = make_instance("quad1d");
    p.x0 = Vector::Ones(1);
    p.v0 = Vector::Constant(1, -3.0);
    const Trajectory avd = staged("integrate", [&] { return integrate_avd(c.smooth, p); });
    const Trajectory din = staged("integrate", [&] { return integrate_dinavd_2nd(c.smooth, p); });
    Table ax{{"t", "x"}, {}}, dx{{"t", "x"}, {}}, bx{{"t", "x_avd", "x_dinavd"}, {}};
    Table ap{{"t", "phi"}, {}}, dp{{"t", "phi"}, {}}, bp{{"t", "phi_avd", "phi_dinavd"}, {}};
    for (std::size_t i = 0; i < avd.size(); ++i) {
      const double t = avd.times[i];
      ax.rows.push_back({t, avd.xs[i][0]});
      dx.rows.push_back({t, din.xs[i][0]});
      bx.rows.push_back({t, avd.xs[i][0], din.xs[i][0]});
      ap.rows.push_back({t, avd.phi_vals[i]});
      dp.rows.push_back({t, din.phi_vals[i]});
      bp.rows.push_back({t, avd.phi_vals[i], din.phi_vals[i]});
    }
    emit("i1_avd_x.csv", ax);
    emit("i1_dinavd_x.csv", dx);
    emit("i1_both_x.csv", bx);
    emit("i1_avd_phi.csv", ap);
    emit("i1_dinavd_phi.csv", dp);
    emit("i1_both_phi.csv", bp);
    staged("write", [&] {
      write_trajectory_csv(out_dir / "i1_avd_trajectory.csv", avd);
      write_trajectory_csv(out_dir / "i1_dinavd_trajectory.csv", din);
    });
    paths.files.push_back(out_dir / "i1_avd_trajectory.csv");
    paths.files.push_back(out_dir / "i1_dinavd_trajectory.csv");
  }

  // Figure 2: ill-conditioned 2-D quadratic from (1, 1) at rest.
  {
    const CompositeProblem c = make_instance("illcond2d");
    p.x0 = Vector::Ones(2);
    p.v0 = Vector::Zero(2);
    const Trajectory avd = staged("integrate", [&] { return integrate_avd(c.smooth, p); });
    const Trajectory din = staged("integrate", [&] { return integrate_dinavd_2nd(c.smooth, p); });
    Table axy{{"t", "x", "y"}, {}}, dxy{{"t", "x", "y"}, {}};
    Table bxy{{"t", "x_avd", "y_avd", "x_dinavd", "y_dinavd"}, {}};
    Table ap{{"t", "phi"}, {}}, dp{{"t", "phi"}, {}}, bp{{"t", "phi_avd", "phi_dinavd"}, {}};
    for (std::size_t i = 0; i < avd.size(); ++i) {
      const double t = avd.times[i];
      axy.rows.push_back({t, avd.xs[i][0], avd.xs[i][1]});
      dxy.rows.push_back({t, din.xs[i][0], din.xs[i][1]});
      bxy.rows.push_back({t, avd.xs[i][0], avd.xs[i][1], din.xs[i][0], din.xs[i][1]});
      ap.rows.push_back({t, avd.phi_vals[i]});
      dp.rows.push_back({t, din.phi_vals[i]});
      bp.rows.push_back({t, avd.phi_vals[i], din.phi_vals[i]});
    }
    emit("i2_avd_xy.csv", axy);
    emit("i2_dinavd_xy.csv", dxy);
    emit("i2_both_xy.csv", bxy);
    emit("i2_avd_phi.csv", ap);
    emit("i2_dinavd_phi.csv", dp);
    emit("i2_both_phi.csv", bp);
    staged("write", [&] {
      write_trajectory_csv(out_dir / "i2_avd_trajectory.csv", avd);
      write_trajectory_csv(out_dir / "i2_dinavd_trajectory.csv", din);
    });
    paths.files.push_back(out_dir / "i2_avd_trajectory.csv");
    paths.files.push_back(out_dir / "i2_dinavd_trajectory.csv");
  }
  return paths;
}

Table compare_solvers(const std::vector<ExperimentConfig>& cfgs, const fs::path& out_dir) {
  if (cfgs.empty()) throw StageError("config", "compare_solvers: no configs given");
  for (const auto& cfg : cfgs) {
    if (cfg.problem.id != cfgs.front().problem.id || cfg.problem.seed != cfgs.front().problem.seed) {
      throw StageError("config", "compare_solvers: mismatched problems ('" + cfgs.front().problem.id + "' seed " +
                                     std::to_string(cfgs.front().problem.seed) + " vs '" + cfg.problem.id +
                                     "' seed " + std::to_string(cfg.problem.seed) + ")");
    }
    if (!is_discrete(cfg.system)) {
      throw StageError("config", "compare_solvers: '" + to_string(cfg.system) + "' is not a discrete solver");
    }
  }
  const CompositeProblem c = build_instance(cfgs.front());
  if (!c.known_opt_value) throw StageError("instance", "compare_solvers: problem has no reference optimum");

  std::vector<IterateHistory> runs;
  std::map<std::string, int> seen;
  Table table;
  table.columns.push_back("k");
  std::size_t rows = 0;
  for (const auto& cfg : cfgs) {
    runs.push_back(solve(cfg, c));
    std::string label = to_string(cfg.system);
    if (const int n = seen[label]++; n > 0) label += "_" + std::to_string(n + 1);
    table.columns.push_back(label + "_gap");
    table.columns.push_back(label + "_t");
    rows = std::max(rows, runs.back().size());
  }
  for (std::size_t k = 0; k < rows; ++k) {
    std::vector<double> row{static_cast<double>(k)};
    for (const auto& h : runs) {
      if (k < h.size()) {
        row.push_back(h.best_so_far[k] - *c.known_opt_value);
        row.push_back(h.ts[k]);
      } else {
        row.push_back(kNaN);
        row.push_back(kNaN);
      }
    }
    table.rows.push_back(std::move(row));
  }
  staged("write", [&] { write_table_csv(out_dir / "comparison.csv", table); });
  return table;
}

}  // namespace dinavd
