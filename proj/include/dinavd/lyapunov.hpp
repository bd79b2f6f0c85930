#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dinavd/dynamics.hpp"

namespace dinavd {

/// Gaps below this are treated as converged to rounding level.
inline constexpr double kNumericalFloor = 1e-14;

/// W_theta(t) = Phi(x) + 0.5 |x' + theta grad(x)|^2 + theta (beta - theta) / 2 |grad(x)|^2,
/// beta taken from the trajectory parameters. theta outside [0, beta] throws.
std::vector<double> energy_W(const Trajectory& traj, double theta);
std::vector<double> energy_W(const Trajectory& traj, const SmoothFunction& f, double theta);

struct AnchoredEnergy {
  std::vector<double> e_lambda;
  /// (t / (t - beta))^(alpha - 2) E_lambda(t); NaN where t <= beta.
  std::vector<double> e_scaled;
};

/// E_lambda(t) = t (t - beta (lambda + 2 - alpha)) (Phi - min)
///             + 0.5 |lambda (x - x*) + t (x' + beta grad)|^2
///             + lambda (alpha - lambda - 1) / 2 |x - x*|^2.
/// Requires alpha >= 3 and lambda in [2, alpha - 1].
AnchoredEnergy energy_E(const Trajectory& traj, double min_value, double lambda, const Vector& xstar);
AnchoredEnergy energy_E(const Trajectory& traj, const SmoothFunction& f, double lambda, const Vector& xstar);

struct Violation {
  std::size_t index;
  double increment;
};

/// Indices i where series[i+1] - series[i] > tol.
std::vector<Violation> audit_monotone(const std::vector<double>& series, double tol);

/// Step-scaled audit tolerance c h^2 (1 + |W(t0)|), c calibrated so a
/// monotone series sampled at h = 1e-3 passes at 1e-8 relative.
double audit_tolerance(double step, double initial_value);
inline constexpr double kAuditConstant = 1e-2;

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t used = 0;
  /// In-window samples dropped for sitting below kNumericalFloor.
  std::size_t excluded_floor = 0;
};

/// Least-squares slope of log(gap) against log(t) over [t_lo, t_hi].
RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& gaps, std::pair<double, double> window);

struct RunningIntegral {
  std::vector<double> values;  ///< trapezoidal running integral, one per sample
  double total = 0.0;
  /// Growth over [t_end / 10, t_end].
  double last_decade_increment = 0.0;
};

struct TailIntegrals {
  std::map<std::string, RunningIntegral> integrals;
  std::vector<std::string> notices;
};

/// Running integrals of t^2 |grad|^2, t (Phi - min), t |x'|^2 and |x'|^2 / t.
/// The t (Phi - min) integral is omitted (with a notice) when min_value is unknown.
TailIntegrals tail_integrals(const Trajectory& traj, std::optional<double> min_value);
TailIntegrals tail_integrals(const Trajectory& traj, const SmoothFunction& f);

/// sup over tail of q divided by sup over head of q.
double sup_ratio(const std::vector<double>& times, const std::vector<double>& q, std::pair<double, double> head,
                 std::pair<double, double> tail);

/// sup_tail t^2 (Phi - min) / sup_head t^2 (Phi - min). Throws when every head
/// gap is below kNumericalFloor.
double little_o_check(const Trajectory& traj, double min_value, std::pair<double, double> head,
                      std::pair<double, double> tail);
double little_o_check(const Trajectory& traj, const SmoothFunction& f, std::pair<double, double> head,
                      std::pair<double, double> tail);

/// t |x' + beta grad(x)| per sample.
std::vector<double> scaled_velocity_residual(const Trajectory& traj);

/// Phi - min per sample, clipped at 0.
std::vector<double> value_gaps(const Trajectory& traj, double min_value);

struct DiagnosticsOptions {
  std::optional<double> lambda;
  std::optional<Vector> xstar;
  std::optional<double> min_value;
  std::optional<double> audit_tol;  ///< defaults to audit_tolerance(step, min(|W0(t0)|, |Wbeta(t0)|))
  std::optional<std::pair<double, double>> rate_window;  ///< defaults to the last decade
  std::optional<std::pair<double, double>> little_o_head;
  std::optional<std::pair<double, double>> little_o_tail;
};

struct SlopeEntry {
  std::pair<double, double> window;
  RateFit fit;
};

struct DiagnosticsReport {
  std::vector<double> times;
  std::vector<double> W0;
  std::vector<double> Wbeta;
  std::vector<double> E_lambda;  ///< NaN-filled when unavailable
  std::vector<double> E_scaled;
  std::vector<double> u_dot0_norms;
  std::vector<double> u_dot_beta_norms;
  std::vector<double> t2_gap;
  std::vector<double> t_resid;
  double audit_tol = 0.0;
  std::map<std::string, std::vector<Violation>> violations;
  TailIntegrals tail;
  std::map<std::string, SlopeEntry> fitted_slopes;
  std::optional<double> little_o_ratio;
  std::vector<std::string> notices;
};

/// Evaluates everything the options allow; analyses whose preconditions fail
/// are skipped with a notice rather than aborting the report.
DiagnosticsReport make_diagnostics(const Trajectory& traj, const DiagnosticsOptions& opts);

}  // namespace dinavd
