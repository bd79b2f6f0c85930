#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dinavd/problem.hpp"

namespace dinavd {

/// Cauchy data and grid controls for the continuous systems.
struct DynamicsParams {
  double alpha = 3.0;
  double beta = 1.0;
  double t0 = 1.0;
  Vector x0;
  Vector v0;  ///< initial velocity x'(t0)
  double t_end = 20.0;
  double step = 1e-3;
  /// Keep every n-th step. 0 selects max(1, floor(0.01 / step)).
  int sample_every = 0;

  int effective_sample_every() const;
  long step_count() const;
};

/// State of the Hessian-free reformulation.
struct FirstOrderState {
  Vector x;
  Vector y;
};

enum class PerturbationClass { none, integrable, integrable_t_weighted };

struct Perturbation {
  std::function<Vector(double)> g;
  PerturbationClass declared_class = PerturbationClass::none;
};

/// Sampled solution of one integration run.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> xs;
  std::vector<Vector> vs;
  /// Gradient at each sample; for nonsmooth runs the realized subgradient
  /// selection plus the smooth gradient.
  std::vector<Vector> grads;
  std::vector<double> phi_vals;
  std::vector<double> grad_norms;
  /// Auxiliary variable y for first-order runs, empty otherwise.
  std::vector<Vector> aux;
  std::string system;
  DynamicsParams params;

  std::size_t size() const { return times.size(); }
  /// Index of the first sample with time >= t (size() if none).
  std::size_t first_index_at_or_after(double t) const;
};

/// Non-finite state encountered; carries the time of failure.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// x'' + (alpha/t) x' + grad(x) = 0. params.beta is ignored.
Trajectory integrate_avd(const SmoothFunction& f, const DynamicsParams& p);

/// x'' + (alpha/t) x' + beta Hess(x) x' + grad(x) = 0, RK4 on (x, x').
Trajectory integrate_dinavd_2nd(const SmoothFunction& f, const DynamicsParams& p);

/// Hessian-free first-order form in (x, y); requires beta > 0.
Trajectory integrate_dinavd_1st(const SmoothFunction& f, const DynamicsParams& p);

/// Second-order form with a forcing term g(t) on the right-hand side.
Trajectory integrate_perturbed(const SmoothFunction& f, const DynamicsParams& p, const Perturbation& g);

/// Nonsmooth system realized by the inertial forward-backward recursion on the
/// grid t_k = t0 + k * step.
Trajectory integrate_gdinavd(const CompositeProblem& c, const DynamicsParams& p);

struct IterateHistory;

/// Views an inertial forward-backward history as a sampled trajectory of the
/// nonsmooth system: velocities from the first line of the system, gradients
/// as smooth gradient plus the recorded subgradient selection.
Trajectory trajectory_from_ifb(const CompositeProblem& c, const IterateHistory& hist, const DynamicsParams& p);

/// y(t0) = -beta (v0 + beta grad(x0)) + (1 - beta alpha / t0) x0.
Vector first_order_initial_y(const Vector& x0, const Vector& v0, const Vector& grad0, double alpha, double beta,
                             double t0);

/// x' = -beta grad(x) + (1/beta - alpha/t) x - y / beta.
Vector first_order_velocity(const Vector& x, const Vector& y, const Vector& grad, double alpha, double beta,
                            double t);

/// g(t) = coeff * t^(-power) in every coordinate.
Perturbation power_perturbation(int dim, double coeff, double power);
Perturbation constant_perturbation(int dim, double value);

}  // namespace dinavd
