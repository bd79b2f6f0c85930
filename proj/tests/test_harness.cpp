#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dinavd/experiment.hpp"
#include "dinavd/lyapunov.hpp"

using namespace dinavd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "dinavd_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_summary(const fs::path& p) {
  std::map<std::string, std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos && line.rfind("notice", 0) != 0) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return i;
  }
  FAIL("missing column " << name);
  return 0;
}

const char* kI1 = R"(schema_version = 1
[problem]
id = "quad1d"
[system]
kind = "dinavd2"
[params]
alpha = 3.1
beta = 1.0
t0 = 1.0
t_end = 20.0
step = 1e-3
x0 = [1.0]
v0 = [-3.0]
[diagnostics]
analyses = ["lyapunov", "energy", "rate", "tail"]
lambda = 2.0
)";

ExperimentConfig discrete(const std::string& kind, long iters, const fs::path& out, const std::string& id = "lasso") {
  std::string text = "[problem]\nid = \"" + id + "\"\n[system]\nkind = \"" + kind + "\"\n[params]\niterations = " +
                     std::to_string(iters) + "\n";
  if (kind == "ifb_avd") text += "alpha = 3.1\nbeta = 1.0\nh = 0.01\n";
  auto cfg = parse_experiment_config(text);
  cfg.output_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("config parse errors carry line and field context") {
  CHECK_THROWS_WITH_AS(parse_experiment_config("[problem]\nid = \"quad1d\"\n[system]\nkind = \"rk45\"\n"),
                       doctest::Contains("line 4"), ConfigError);
  try {
    parse_experiment_config("[problem]\nid = \"quad1d\"\n[system]\nkind = \"rk45\"\n");
  } catch (const ConfigError& e) {
    for (const auto& tag : system_tags()) CHECK(std::string(e.what()).find(tag) != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(parse_experiment_config("[problem]\nid = \"quad1d\"\nspeed = 3\n[system]\nkind = \"avd\"\n"),
                       doctest::Contains("problem.speed"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config("[problem]\nid = \"quad1d\"\nid = \"lasso\"\n"),
                       doctest::Contains("line 3"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config("[problem\nid = \"quad1d\"\n"), doctest::Contains("line 1"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config("[problem]\nid = quad1d\n"), doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config("schema_version = 7\n[problem]\nid = \"quad1d\"\n"),
                       doctest::Contains("schema_version"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("[system]\nkind = \"avd\"\n"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_experiment_config("[problem]\nid = \"quad1d\"\n[system]\nkind = \"dinavd2\"\n[params]\niterations = 5\n"),
      doctest::Contains("iterations"), ConfigError);
}

TEST_CASE("cross-field validation") {
  auto cfg = parse_experiment_config(kI1);
  CHECK_NOTHROW(validate(cfg));
  cfg.diagnostics.lambda = 2.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config("[problem]\nid = \"quad1d\"\n[system]\nkind = \"perturbed\"\n"),
                       doctest::Contains("perturbation"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("[problem]\nid = \"quad1d\"\n[system]\nkind = \"perturbed\"\n"
                                          "[perturbation]\nname = \"power\"\ncoeffs = [1.0]\n"),
                  ConfigError);
}

TEST_CASE("overrides map onto continuous and discrete parameters") {
  auto cfg = parse_experiment_config(kI1);
  ConfigOverrides o;
  o.alpha = 4.0;
  o.t_end = 50.0;
  o.step = 1e-2;
  o.seed = 9;
  o.output_dir = "elsewhere";
  apply_overrides(cfg, o);
  const auto& p = std::get<DynamicsParams>(cfg.params);
  CHECK(p.alpha == 4.0);
  CHECK(p.t_end == 50.0);
  CHECK(p.step == 1e-2);
  CHECK(cfg.problem.seed == 9);
  CHECK(cfg.output_dir == "elsewhere");

  auto d = discrete("ifb_avd", 100, "x");
  ConfigOverrides od;
  od.step = 0.05;
  od.t_end = 11.0;
  apply_overrides(d, od);
  const auto& a = std::get<AlgoParams>(d.params);
  CHECK(a.h == 0.05);
  CHECK(a.iterations == 200);
}

TEST_CASE("I1 run writes three files with zero Lyapunov violations") {
  auto cfg = parse_experiment_config(kI1);
  const auto dir = scratch("i1");
  cfg.output_dir = dir.string();
  const auto paths = run_experiment(cfg);
  REQUIRE(paths.files.size() == 3);
  for (const auto& f : paths.files) CHECK(fs::exists(f));
  const auto s = read_summary(dir / "summary.txt");
  CHECK(s.at("violations_W0") == "0");
  CHECK(s.at("violations_Wbeta") == "0");
  CHECK(s.at("violations_E_scaled") == "0");
  CHECK(s.count("slope"));
  CHECK(slurp(dir / "trajectory.csv").rfind("t,x_0,v_0,phi,grad_norm\n", 0) == 0);
  CHECK(slurp(dir / "diagnostics.csv").rfind("t,W0,Wbeta,E_lambda,E_scaled,t2_gap,t_resid\n", 0) == 0);
}

TEST_CASE("summary quantities are recomputable from the CSVs") {
  auto cfg = parse_experiment_config(kI1);
  const auto dir = scratch("recompute");
  cfg.output_dir = dir.string();
  run_experiment(cfg);
  const auto s = read_summary(dir / "summary.txt");
  const Table traj = read_table_csv(dir / "trajectory.csv");
  const Table diag = read_table_csv(dir / "diagnostics.csv");
  REQUIRE(traj.rows.size() == diag.rows.size());

  std::vector<double> t, w0, wb, t2gap;
  for (std::size_t i = 0; i < traj.rows.size(); ++i) {
    const auto& r = traj.rows[i];
    const double x = r[1], v = r[2], phi = r[3];
    REQUIRE(diag.rows[i][0] == r[0]);
    REQUIRE(std::abs(diag.rows[i][column(diag, "W0")] - (phi + 0.5 * v * v)) <= 1e-15);
    REQUIRE(std::abs(diag.rows[i][column(diag, "Wbeta")] - (phi + 0.5 * (v + x) * (v + x))) <= 1e-15);
    REQUIRE(diag.rows[i][column(diag, "t2_gap")] == r[0] * r[0] * phi);
    t.push_back(r[0]);
    w0.push_back(diag.rows[i][column(diag, "W0")]);
    wb.push_back(diag.rows[i][column(diag, "Wbeta")]);
    t2gap.push_back(phi);
  }
  const double tol = std::stod(s.at("audit_tol"));
  CHECK(tol == audit_tolerance(1e-3, std::min(w0.front(), wb.front())));
  CHECK(audit_monotone(w0, tol).size() == std::stoul(s.at("violations_W0")));
  const auto fit = fit_rate(t, t2gap, {2.0, 20.0});
  CHECK(format_double(fit.slope) == s.at("slope"));
  CHECK(format_double(traj.rows.back()[3]) == s.at("final_gap"));
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  auto cfg = parse_experiment_config(kI1);
  const auto a = scratch("det_a"), b = scratch("det_b");
  cfg.output_dir = a.string();
  run_experiment(cfg);
  cfg.output_dir = b.string();
  run_experiment(cfg);
  for (const char* f : {"trajectory.csv", "diagnostics.csv", "summary.txt"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto la = scratch("det_la"), lb = scratch("det_lb");
  run_experiment(discrete("ifb_avd", 2000, la));
  run_experiment(discrete("ifb_avd", 2000, lb));
  CHECK(slurp(la / "iterates.csv") == slurp(lb / "iterates.csv"));
}

TEST_CASE("diagnose reproduces the diagnostics of a run") {
  auto cfg = parse_experiment_config(kI1);
  const auto run = scratch("diag_run"), again = scratch("diag_again");
  cfg.output_dir = run.string();
  run_experiment(cfg);
  diagnose_trajectory(cfg, run / "trajectory.csv", again);
  CHECK(slurp(run / "diagnostics.csv") == slurp(again / "diagnostics.csv"));
  CHECK(slurp(run / "summary.txt") == slurp(again / "summary.txt"));
}

TEST_CASE("lasso IFB-AVD preset reaches the reference optimum") {
  const auto dir = scratch("lasso_ifb");
  const auto cfg = discrete("ifb_avd", 10000, dir);
  run_experiment(cfg);
  const Table it = read_table_csv(dir / "iterates.csv");
  CHECK(it.columns == std::vector<std::string>{"k", "t_k", "obj", "best", "prox_resid_norm"});
  const double fstar = *make_instance("lasso").known_opt_value;
  CHECK(it.rows.back()[column(it, "best")] - fstar <= 1e-6);
  CHECK(fs::exists(dir / "diagnostics.csv"));
}

TEST_CASE("stage-tagged errors") {
  auto cfg = parse_experiment_config("[problem]\nid = \"abs1d\"\n[system]\nkind = \"dinavd2\"\n");
  cfg.output_dir = scratch("stage").string();
  try {
    run_experiment(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "integrate");
    CHECK(std::string(e.what()).rfind("[integrate]", 0) == 0);
  }
  auto blow = parse_experiment_config(
      "[problem]\nid = \"illcond2d\"\n[system]\nkind = \"dinavd2\"\n[params]\nstep = 0.01\nt_end = 5.0\n");
  blow.output_dir = cfg.output_dir;
  CHECK_THROWS_WITH_AS(run_experiment(blow), doctest::Contains("[integrate]"), StageError);
}

TEST_CASE("compare_solvers tables") {
  const auto dir = scratch("compare");
  const auto one = compare_solvers({discrete("fista", 50, dir)}, dir);
  CHECK(one.columns == std::vector<std::string>{"k", "fista_gap", "fista_t"});
  CHECK(one.rows.size() == 51);
  CHECK(fs::exists(dir / "comparison.csv"));

  CHECK_THROWS_AS(compare_solvers({discrete("fista", 5, dir), discrete("fb", 5, dir, "boxqp")}, dir), StageError);

  const auto trio = compare_solvers(
      {discrete("ifb_avd", 10000, dir), discrete("fista", 10000, dir), discrete("fb", 10000, dir)}, dir);
  const auto& last = trio.rows.back();
  for (const char* c : {"ifb_avd_gap", "fista_gap", "fb_gap"}) {
    CAPTURE(c);
    CHECK(last[column(trio, c)] <= 1e-4);
  }
  MESSAGE("lasso gaps at k = 1e4: ifb_avd " << last[1] << ", fista " << last[3] << ", fb " << last[5]);

  const auto box = compare_solvers({discrete("ifb_avd", 1000, dir, "boxqp"), discrete("fista", 1000, dir, "boxqp"),
                                    discrete("fb", 1000, dir, "boxqp")},
                                   dir);
  const auto& b = box.rows.back();
  MESSAGE("boxqp gaps at k = 1e3: ifb_avd " << b[1] << ", fista " << b[3] << ", fb " << b[5]);
}

TEST_CASE("illustration series") {
  const auto dir = scratch("illustrations");
  const auto paths = reproduce_illustrations(dir);
  CHECK(paths.files.size() == 16);
  for (const auto& f : paths.files) CHECK(fs::exists(f));

  const Table avd = read_table_csv(dir / "i1_avd_x.csv");
  int sign_changes = 0;
  for (std::size_t i = 1; i < avd.rows.size(); ++i) sign_changes += (avd.rows[i][1] * avd.rows[i - 1][1] < 0.0);
  CHECK(sign_changes >= 2);
  CHECK(avd.rows.back()[0] == doctest::Approx(20.0));

  // Transversal oscillation: sign changes of y and total variation beyond the net change.
  const Table both = read_table_csv(dir / "i2_both_xy.csv");
  auto oscillation = [&](const std::string& col, int& flips) {
    const std::size_t c = column(both, col);
    double tv = 0.0;
    flips = 0;
    for (std::size_t i = 1; i < both.rows.size(); ++i) {
      tv += std::abs(both.rows[i][c] - both.rows[i - 1][c]);
      flips += (both.rows[i][c] * both.rows[i - 1][c] < 0.0);
    }
    return tv - std::abs(both.rows.back()[c] - both.rows.front()[c]);
  };
  int flips_avd = 0, flips_din = 0;
  const double osc_avd = oscillation("y_avd", flips_avd);
  const double osc_din = oscillation("y_dinavd", flips_din);
  CAPTURE(osc_avd);
  CAPTURE(osc_din);
  CHECK(flips_avd >= 100);
  CHECK(flips_din <= 2);
  CHECK(osc_din < 0.1 * osc_avd);

  // Fine-step reference for the DIN-AVD value at t = 20.
  DynamicsParams p;
  p.alpha = 3.1;
  p.beta = 1.0;
  p.x0 = Vector::Ones(1);
  p.v0 = Vector::Constant(1, -3.0);
  p.t_end = 20.0;
  p.step = 1e-5;
  const auto ref = integrate_dinavd_2nd(make_instance("quad1d").smooth, p);
  const Table din = read_table_csv(dir / "i1_dinavd_phi.csv");
  const double got = din.rows.back()[1];
  const double want = ref.phi_vals.back();
  CAPTURE(got);
  CAPTURE(want);
  CHECK(std::abs(got - want) <= 1e-6 * want);
}

#if defined(DINAVD_CLI)
TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  const std::string cli = DINAVD_CLI;
  const std::string configs = DINAVD_CONFIGS;
  auto run = [&](const std::string& args) {
    const int rc = std::system((cli + " " + args + " > " + (dir / "out.txt").string() + " 2> " +
                                (dir / "err.txt").string())
                                   .c_str());
    return rc;
  };
  CHECK(run("simulate --config " + configs + "/i1_dinavd.toml --out " + (dir / "ok").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "summary.txt"));

  {
    std::ofstream bad(dir / "bad.toml");
    bad << "[problem]\nid = \"quad1d\"\n[system]\nkind = \"rk45\"\n";
  }
  CHECK(run("simulate --config " + (dir / "bad.toml").string()) != 0);
  CHECK(slurp(dir / "err.txt").find("[config]") != std::string::npos);
  CHECK(run("solve --config " + configs + "/i1_dinavd.toml --out " + (dir / "x").string()) != 0);
  CHECK(run("simulate --config " + configs + "/i1_dinavd.toml --out " + (dir / "y").string() + " --step -1") != 0);
}
#endif
