#include "dinavd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dinavd/solvers.hpp"

namespace dinavd {

int DynamicsParams::effective_sample_every() const {
  if (sample_every > 0) return sample_every;
  return std::max(1, static_cast<int>(std::floor(0.01 / step)));
}

long DynamicsParams::step_count() const { return std::lround((t_end - t0) / step); }

std::size_t Trajectory::first_index_at_or_after(double t) const {
  return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
}

Vector first_order_initial_y(const Vector& x0, const Vector& v0, const Vector& grad0, double alpha, double beta,
                             double t0) {
  return -beta * (v0 + beta * grad0) + (1.0 - beta * alpha / t0) * x0;
}

Vector first_order_velocity(const Vector& x, const Vector& y, const Vector& grad, double alpha, double beta,
                            double t) {
  return -beta * grad + (1.0 / beta - alpha / t) * x - y / beta;
}

Perturbation power_perturbation(int dim, double coeff, double power) {
  Perturbation p;
  p.g = [dim, coeff, power](double t) -> Vector { return Vector::Constant(dim, coeff * std::pow(t, -power)); };
  if (coeff == 0.0 || power > 2.0) {
    p.declared_class = PerturbationClass::integrable_t_weighted;
  } else if (power > 1.0) {
    p.declared_class = PerturbationClass::integrable;
  }
  return p;
}

Perturbation constant_perturbation(int dim, double value) {
  Perturbation p;
  p.g = [dim, value](double) -> Vector { return Vector::Constant(dim, value); };
  p.declared_class = value == 0.0 ? PerturbationClass::integrable_t_weighted : PerturbationClass::none;
  return p;
}

namespace {

DynamicsParams validated(const DynamicsParams& p, int dim, const char* who) {
  const std::string name(who);
  if (!(p.alpha > 0.0)) throw Error(name + ": alpha must be positive");
  if (!(p.beta >= 0.0)) throw Error(name + ": beta must be nonnegative");
  if (!(p.t0 > 0.0)) throw Error(name + ": t0 must be positive (the damping alpha/t is singular at 0)");
  if (!(p.t_end > p.t0)) throw Error(name + ": t_end must exceed t0");
  if (!(p.step > 0.0) || !(p.step < p.t_end - p.t0)) throw Error(name + ": step must lie in (0, t_end - t0)");
  if (p.x0.size() != dim) {
    throw Error(name + ": x0 has dimension " + std::to_string(p.x0.size()) + ", expected " + std::to_string(dim));
  }
  DynamicsParams q = p;
  if (q.v0.size() == 0) q.v0 = Vector::Zero(dim);
  if (q.v0.size() != dim) throw Error(name + ": v0 dimension mismatch");
  return q;
}

// Classical fixed-step RK4 on a stacked state. `sample(t, z)` is called at t0,
// every `every` steps, and at the final step.
template <class Rhs, class Sample>
void rk4_run(const DynamicsParams& p, Vector z, Rhs&& rhs, Sample&& sample) {
  const long n = p.step_count();
  const long every = p.effective_sample_every();
  const double h = p.step;
  sample(p.t0, z);
  for (long i = 0; i < n; ++i) {
    const double t = p.t0 + static_cast<double>(i) * h;
    const Vector k1 = rhs(t, z);
    const Vector k2 = rhs(t + 0.5 * h, z + (0.5 * h) * k1);
    const Vector k3 = rhs(t + 0.5 * h, z + (0.5 * h) * k2);
    const Vector k4 = rhs(t + h, z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t_next = p.t0 + static_cast<double>(i + 1) * h;
    if (!z.allFinite()) {
      throw IntegrationError("non-finite state at t = " + std::to_string(t_next), t_next);
    }
    if ((i + 1) % every == 0 || i + 1 == n) sample(t_next, z);
  }
}

void push_sample(Trajectory& tr, const SmoothFunction& f, double t, const Vector& x, const Vector& v) {
  Vector g = f.gradient(x);
  tr.times.push_back(t);
  tr.xs.push_back(x);
  tr.vs.push_back(v);
  tr.phi_vals.push_back(f.value(x));
  tr.grad_norms.push_back(g.norm());
  tr.grads.push_back(std::move(g));
}

Trajectory second_order(const SmoothFunction& f, const DynamicsParams& params, bool use_hessian,
                        const Perturbation* forcing, const char* system) {
  const int d = f.dim;
  const DynamicsParams p = validated(params, d, system);
  if (use_hessian && !f.has_hvp()) {
    throw Error(std::string(system) +
                ": Hessian-vector product unavailable for this function; use the first-order form (dinavd1)");
  }
  const double alpha = p.alpha;
  const double beta = p.beta;

  auto rhs = [&](double t, const Vector& z) -> Vector {
    const auto x = z.head(d);
    const auto v = z.tail(d);
    Vector dz(2 * d);
    Vector acc = -(alpha / t) * v - f.gradient(x);
    if (use_hessian) acc -= beta * f.hvp(x, v);
    if (forcing) acc += forcing->g(t);
    dz.head(d) = v;
    dz.tail(d) = acc;
    return dz;
  };

  Trajectory tr;
  tr.system = system;
  tr.params = p;
  Vector z(2 * d);
  z << p.x0, p.v0;
  rk4_run(p, std::move(z), rhs,
          [&](double t, const Vector& s) { push_sample(tr, f, t, s.head(d), s.tail(d)); });
  return tr;
}

}  // namespace

Trajectory integrate_avd(const SmoothFunction& f, const DynamicsParams& p) {
  DynamicsParams q = p;
  q.beta = 0.0;
  return second_order(f, q, false, nullptr, "avd");
}

Trajectory integrate_dinavd_2nd(const SmoothFunction& f, const DynamicsParams& p) {
  return second_order(f, p, true, nullptr, "dinavd2");
}

Trajectory integrate_perturbed(const SmoothFunction& f, const DynamicsParams& p, const Perturbation& g) {
  if (!g.g) throw Error("perturbed: perturbation g is empty");
  return second_order(f, p, true, &g, "perturbed");
}

Trajectory integrate_dinavd_1st(const SmoothFunction& f, const DynamicsParams& params) {
  const int d = f.dim;
  const DynamicsParams p = validated(params, d, "dinavd1");
  if (!(p.beta > 0.0)) throw Error("dinavd1: beta must be positive (the first-order reformulation is singular at 0)");
  const double alpha = p.alpha;
  const double beta = p.beta;

  auto rhs = [&](double t, const Vector& z) -> Vector {
    const Vector x = z.head(d);
    const auto y = z.tail(d);
    Vector dz(2 * d);
    dz.head(d) = -beta * f.gradient(x) + (1.0 / beta - alpha / t) * x - y / beta;
    dz.tail(d) = (1.0 / beta - alpha / t + alpha * beta / (t * t)) * x - y / beta;
    return dz;
  };

  Trajectory tr;
  tr.system = "dinavd1";
  tr.params = p;
  Vector z(2 * d);
  z << p.x0, first_order_initial_y(p.x0, p.v0, f.gradient(p.x0), alpha, beta, p.t0);
  rk4_run(p, std::move(z), rhs, [&](double t, const Vector& s) {
    const Vector x = s.head(d);
    const Vector y = s.tail(d);
    const Vector g = f.gradient(x);
    push_sample(tr, f, t, x, first_order_velocity(x, y, g, alpha, beta, t));
    tr.aux.push_back(y);
  });
  return tr;
}

Trajectory integrate_gdinavd(const CompositeProblem& c, const DynamicsParams& params) {
  const int d = c.dim();
  const DynamicsParams p = validated(params, d, "gdinavd");
  if (!c.nonsmooth || !c.nonsmooth->prox) throw Error("gdinavd: problem has no proxable part");
  if (!(p.beta > 0.0)) throw Error("gdinavd: beta must be positive");

  AlgoParams ap;
  ap.alpha = p.alpha;
  ap.beta = p.beta;
  ap.h = p.step;
  ap.t0 = p.t0;
  ap.iterations = p.step_count();

  IterateHistory hist;
  try {
    hist = run_ifb_avd(c, ap, p.x0, ifb_initial_y(c, ap, p.x0, p.v0));
  } catch (const SolverError& e) {
    const double t = p.t0 + static_cast<double>(e.iteration()) * p.step;
    throw IntegrationError(std::string("gdinavd: ") + e.what(), t);
  }

  return trajectory_from_ifb(c, hist, p);
}

Trajectory trajectory_from_ifb(const CompositeProblem& c, const IterateHistory& hist, const DynamicsParams& p) {
  Trajectory tr;
  tr.system = "gdinavd";
  tr.params = p;
  const std::size_t n = hist.size();
  const auto every = static_cast<std::size_t>(p.effective_sample_every());
  for (std::size_t k = 0; k < n; ++k) {
    if (k % every != 0 && k + 1 != n) continue;
    const double t = hist.ts[k];
    const Vector& x = hist.xs[k];
    const Vector& y = hist.ys[k];
    Vector g = c.smooth.gradient(x) + hist.prox_residuals[k];
    // Velocity from the first line of the system in the rescaled convention.
    tr.vs.push_back(-p.beta * g + (1.0 / p.beta - p.alpha / t) * x + y);
    tr.times.push_back(t);
    tr.xs.push_back(x);
    tr.phi_vals.push_back(hist.objectives[k]);
    tr.grad_norms.push_back(g.norm());
    tr.grads.push_back(std::move(g));
    tr.aux.push_back(y);
  }
  return tr;
}

}  // namespace dinavd
