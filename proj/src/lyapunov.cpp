#include "dinavd/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dinavd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string window_str(std::pair<double, double> w) {
  std::ostringstream os;
  os << "[" << w.first << ", " << w.second << "]";
  return os.str();
}

void require_velocities(const Trajectory& traj, const char* who) {
  if (traj.vs.size() != traj.size() || traj.grads.size() != traj.size()) {
    throw Error(std::string(who) + ": trajectory lacks velocities or gradients");
  }
}

RunningIntegral running_trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
  RunningIntegral ri;
  ri.values.assign(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    ri.values[i] = ri.values[i - 1] + 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  }
  ri.total = ri.values.empty() ? 0.0 : ri.values.back();
  if (!t.empty()) {
    const auto start = std::lower_bound(t.begin(), t.end(), t.back() / 10.0) - t.begin();
    ri.last_decade_increment = ri.total - ri.values[static_cast<std::size_t>(start)];
  }
  return ri;
}

double sup_in(const std::vector<double>& times, const std::vector<double>& q, std::pair<double, double> w,
              const char* name) {
  double sup = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= w.first && times[i] <= w.second) {
      sup = std::max(sup, q[i]);
      any = true;
    }
  }
  if (!any) throw Error(std::string("sup_ratio: no samples inside ") + name + " window " + window_str(w));
  return sup;
}

}  // namespace

std::vector<double> energy_W(const Trajectory& traj, double theta) {
  require_velocities(traj, "energy_W");
  const double beta = traj.params.beta;
  if (!(theta >= 0.0 && theta <= beta)) {
    throw Error("energy_W: theta = " + num(theta) + " outside [0, beta] = [0, " + num(beta) +
                "]");
  }
  std::vector<double> w(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vector& g = traj.grads[i];
    w[i] = traj.phi_vals[i] + 0.5 * (traj.vs[i] + theta * g).squaredNorm() +
           0.5 * theta * (beta - theta) * g.squaredNorm();
  }
  return w;
}

std::vector<double> energy_W(const Trajectory& traj, const SmoothFunction&, double theta) {
  return energy_W(traj, theta);
}

AnchoredEnergy energy_E(const Trajectory& traj, double min_value, double lambda, const Vector& xstar) {
  require_velocities(traj, "energy_E");
  const double alpha = traj.params.alpha;
  const double beta = traj.params.beta;
  if (alpha < 3.0) throw Error("energy_E: requires alpha >= 3, got " + num(alpha));
  if (!(lambda >= 2.0 && lambda <= alpha - 1.0)) {
    throw Error("energy_E: lambda = " + num(lambda) + " outside [2, alpha - 1] = [2, " +
                num(alpha - 1.0) + "]");
  }
  AnchoredEnergy out;
  out.e_lambda.resize(traj.size());
  out.e_scaled.resize(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    const Vector dx = traj.xs[i] - xstar;
    const double gap = traj.phi_vals[i] - min_value;
    const double e = t * (t - beta * (lambda + 2.0 - alpha)) * gap +
                     0.5 * (lambda * dx + t * (traj.vs[i] + beta * traj.grads[i])).squaredNorm() +
                     0.5 * lambda * (alpha - lambda - 1.0) * dx.squaredNorm();
    out.e_lambda[i] = e;
    out.e_scaled[i] = t > beta ? std::pow(t / (t - beta), alpha - 2.0) * e : kNaN;
  }
  return out;
}

AnchoredEnergy energy_E(const Trajectory& traj, const SmoothFunction& f, double lambda, const Vector& xstar) {
  if (!f.min_value) throw Error("energy_E: min value of Phi unknown");
  return energy_E(traj, *f.min_value, lambda, xstar);
}

std::vector<Violation> audit_monotone(const std::vector<double>& series, double tol) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    const double inc = series[i + 1] - series[i];
    if (inc > tol) out.push_back({i, inc});
  }
  return out;
}

double audit_tolerance(double step, double initial_value) {
  return kAuditConstant * step * step * (1.0 + std::abs(initial_value));
}

RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& gaps,
                 std::pair<double, double> window) {
  if (times.size() != gaps.size()) throw Error("fit_rate: times and gaps differ in length");
  RateFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.first || times[i] > window.second) continue;
    if (!(gaps[i] >= kNumericalFloor) || !std::isfinite(gaps[i])) {
      ++fit.excluded_floor;
      continue;
    }
    lx.push_back(std::log(times[i]));
    ly.push_back(std::log(gaps[i]));
  }
  fit.used = lx.size();
  if (fit.used < 10) {
    throw Error("fit_rate: only " + std::to_string(fit.used) + " usable samples in window " + window_str(window) +
                " (" + std::to_string(fit.excluded_floor) + " below the numerical floor 1e-14); need at least 10");
  }
  const double n = static_cast<double>(fit.used);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error("fit_rate: degenerate window (all samples at one time)");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

TailIntegrals tail_integrals(const Trajectory& traj, std::optional<double> min_value) {
  require_velocities(traj, "tail_integrals");
  const std::size_t n = traj.size();
  std::vector<double> t2g(n), tgap(n), tv(n), vt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = traj.times[i];
    const double v2 = traj.vs[i].squaredNorm();
    t2g[i] = t * t * traj.grad_norms[i] * traj.grad_norms[i];
    tgap[i] = min_value ? t * (traj.phi_vals[i] - *min_value) : 0.0;
    tv[i] = t * v2;
    vt[i] = v2 / t;
  }
  TailIntegrals out;
  out.integrals["t2_grad_sq"] = running_trapezoid(traj.times, t2g);
  if (min_value) {
    out.integrals["t_gap"] = running_trapezoid(traj.times, tgap);
  } else {
    out.notices.push_back("tail_integrals: min value unknown, t (Phi - min) integral omitted");
  }
  out.integrals["t_speed_sq"] = running_trapezoid(traj.times, tv);
  out.integrals["speed_sq_over_t"] = running_trapezoid(traj.times, vt);
  return out;
}

TailIntegrals tail_integrals(const Trajectory& traj, const SmoothFunction& f) {
  return tail_integrals(traj, f.min_value);
}

double sup_ratio(const std::vector<double>& times, const std::vector<double>& q, std::pair<double, double> head,
                 std::pair<double, double> tail) {
  if (head.first > head.second || tail.first > tail.second || head.second > tail.first) {
    throw Error("sup_ratio: windows must be ordered, head " + window_str(head) + " before tail " + window_str(tail));
  }
  const double h = sup_in(times, q, head, "head");
  const double t = sup_in(times, q, tail, "tail");
  if (!(h > 0.0)) throw Error("sup_ratio: head supremum is zero");
  return t / h;
}

std::vector<double> value_gaps(const Trajectory& traj, double min_value) {
  std::vector<double> g(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) g[i] = std::max(0.0, traj.phi_vals[i] - min_value);
  return g;
}

double little_o_check(const Trajectory& traj, double min_value, std::pair<double, double> head,
                      std::pair<double, double> tail) {
  const std::vector<double> gaps = value_gaps(traj, min_value);
  double head_max = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] >= head.first && traj.times[i] <= head.second) head_max = std::max(head_max, gaps[i]);
  }
  if (head_max < kNumericalFloor) {
    throw Error("little_o_check: value gap over head window " + window_str(head) +
                " is already at the numerical floor (max " + num(head_max) + "); widen the windows");
  }
  std::vector<double> q(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) q[i] = traj.times[i] * traj.times[i] * gaps[i];
  return sup_ratio(traj.times, q, head, tail);
}

double little_o_check(const Trajectory& traj, const SmoothFunction& f, std::pair<double, double> head,
                      std::pair<double, double> tail) {
  if (!f.min_value) throw Error("little_o_check: min value of Phi unknown");
  return little_o_check(traj, *f.min_value, head, tail);
}

std::vector<double> scaled_velocity_residual(const Trajectory& traj) {
  require_velocities(traj, "scaled_velocity_residual");
  std::vector<double> out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out[i] = traj.times[i] * (traj.vs[i] + traj.params.beta * traj.grads[i]).norm();
  }
  return out;
}

DiagnosticsReport make_diagnostics(const Trajectory& traj, const DiagnosticsOptions& opts) {
  require_velocities(traj, "make_diagnostics");
  DiagnosticsReport r;
  const std::size_t n = traj.size();
  const double alpha = traj.params.alpha;
  const double beta = traj.params.beta;
  r.times = traj.times;
  r.W0 = energy_W(traj, 0.0);
  r.Wbeta = energy_W(traj, beta);
  r.E_lambda.assign(n, kNaN);
  r.E_scaled.assign(n, kNaN);
  r.t2_gap.assign(n, kNaN);
  r.t_resid = scaled_velocity_residual(traj);
  r.u_dot0_norms.resize(n);
  r.u_dot_beta_norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.u_dot0_norms[i] = traj.vs[i].norm();
    r.u_dot_beta_norms[i] = (traj.vs[i] + beta * traj.grads[i]).norm();
  }

  // The smaller of the two initial energies sets the scale.
  const double w_scale = n ? std::min(std::abs(r.W0.front()), std::abs(r.Wbeta.front())) : 0.0;
  r.audit_tol = opts.audit_tol ? *opts.audit_tol : audit_tolerance(traj.params.step, w_scale);

  auto audit_from = [&](const std::string& name, const std::vector<double>& series, double t_start) {
    const std::size_t first = traj.first_index_at_or_after(t_start);
    std::vector<Violation> v;
    if (first < n) {
      const std::vector<double> tail(series.begin() + static_cast<std::ptrdiff_t>(first), series.end());
      v = audit_monotone(tail, r.audit_tol);
      for (auto& e : v) e.index += first;
    }
    r.violations[name] = std::move(v);
  };
  audit_from("W0", r.W0, traj.params.t0);
  audit_from("Wbeta", r.Wbeta, std::max(traj.params.t0, alpha * beta / 2.0));

  if (opts.min_value) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = traj.times[i];
      r.t2_gap[i] = t * t * (traj.phi_vals[i] - *opts.min_value);
    }
    const double lambda = opts.lambda.value_or(2.0);
    if (alpha >= 3.0 && opts.xstar) {
      try {
        AnchoredEnergy e = energy_E(traj, *opts.min_value, lambda, *opts.xstar);
        r.E_lambda = std::move(e.e_lambda);
        r.E_scaled = std::move(e.e_scaled);
        // Strictly after beta: the scaling factor is singular at t = beta.
        const double start = std::max(traj.params.t0, 2.0 * beta);
        audit_from("E_scaled", r.E_scaled, start > beta ? start : std::nextafter(beta, 1e300));
      } catch (const Error& e) {
        r.notices.push_back(e.what());
      }
    } else {
      r.notices.push_back("E_lambda skipped: requires alpha >= 3 and a known minimizer");
    }

    const std::pair<double, double> window =
        opts.rate_window ? *opts.rate_window : std::pair{traj.times.back() / 10.0, traj.times.back()};
    try {
      r.fitted_slopes["value_gap"] = {window, fit_rate(traj.times, value_gaps(traj, *opts.min_value), window)};
    } catch (const Error& e) {
      r.notices.push_back(e.what());
    }
    if (opts.little_o_head && opts.little_o_tail) {
      try {
        r.little_o_ratio = little_o_check(traj, *opts.min_value, *opts.little_o_head, *opts.little_o_tail);
      } catch (const Error& e) {
        r.notices.push_back(e.what());
      }
    }
  } else {
    r.notices.push_back("min value unknown: gap-based diagnostics skipped");
  }

  r.tail = tail_integrals(traj, opts.min_value);
  for (const auto& s : r.tail.notices) r.notices.push_back(s);
  return r;
}

}  // namespace dinavd
