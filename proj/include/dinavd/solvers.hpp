#pragma once

#include <optional>
#include <vector>

#include "dinavd/problem.hpp"

namespace dinavd {

struct AlgoParams {
  double alpha = 3.1;
  double beta = 1.0;
  double h = 0.01;
  long iterations = 1000;
  /// Offset of the time grid t_k = t0 + k h.
  double t0 = 1.0;
  /// Gradient Lipschitz constant for the baselines; falls back to the
  /// problem metadata when unset.
  std::optional<double> lipschitz;
};

/// Per-iterate record. Index k holds the k-th iterate, k = 0 being the
/// starting point.
struct IterateHistory {
  std::vector<long> ks;
  /// Time attached to iterate k: t0 + k h for IFB-AVD, k / sqrt(L) for FISTA
  /// and k / L for forward-backward.
  std::vector<double> ts;
  std::vector<Vector> xs;
  /// Auxiliary sequence; empty for the baselines.
  std::vector<Vector> ys;
  std::vector<double> objectives;
  std::vector<double> best_so_far;
  /// Residual (argument - x_k) / tau of the prox step that produced x_k, an
  /// element of the subdifferential of phi at x_k. Entry 0 is the subgradient
  /// used at the start (least-norm element, or zero when unavailable).
  std::vector<Vector> prox_residuals;

  std::size_t size() const { return ks.size(); }
  double final_gap(double opt) const { return best_so_far.back() - opt; }
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, long iteration) : Error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

/// Objective level above which a run is declared divergent.
inline constexpr double kDivergenceThreshold = 1e12;

/// Inertial forward-backward recursion with vanishing damping:
///   x+ = prox_{beta h phi}((1 + h (1/beta - alpha/t_k)) x - beta h grad(x) + h y)
///   y+ = beta/(beta+h) y - h/(beta+h) (1/beta - alpha/t_k + alpha beta/t_k^2) x+
/// with t_k = t0 + k h.
IterateHistory run_ifb_avd(const CompositeProblem& c, const AlgoParams& p, const Vector& x0, const Vector& y0);

/// Default auxiliary start mirroring the continuous Cauchy data (x0, v0):
///   y0 = v0 + beta s0 - (1/beta - alpha/t0) x0,  s0 = grad(x0) + xi0
/// where xi0 is the least-norm subgradient of phi at x0.
Vector ifb_initial_y(const CompositeProblem& c, const AlgoParams& p, const Vector& x0, const Vector& v0);

/// Accelerated proximal gradient with step 1/L.
IterateHistory run_fista(const CompositeProblem& c, const AlgoParams& p, const Vector& x0);

/// x+ = prox_{phi/L}(x - grad(x)/L).
IterateHistory run_forward_backward(const CompositeProblem& c, const AlgoParams& p, const Vector& x0);

}  // namespace dinavd
