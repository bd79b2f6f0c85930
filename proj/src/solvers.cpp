#include "dinavd/solvers.hpp"

#include <cmath>
#include <string>

namespace dinavd {

namespace {

void validate_start(const CompositeProblem& c, const Vector& x0) {
  if (x0.size() != c.dim()) {
    throw Error("solver: x0 has dimension " + std::to_string(x0.size()) + ", problem has " +
                std::to_string(c.dim()));
  }
}

Vector initial_subgradient(const CompositeProblem& c, const Vector& x0) {
  if (c.nonsmooth && c.nonsmooth->min_norm_subgradient) {
    if (auto g = c.nonsmooth->min_norm_subgradient(x0)) return *g;
    throw Error("solver: x0 lies outside the domain of " + c.nonsmooth->name);
  }
  return Vector::Zero(c.dim());
}

class Recorder {
 public:
  explicit Recorder(IterateHistory& h) : h_(h) {}

  void push(long k, double t, const Vector& x, const Vector* y, double objective, Vector residual) {
    if (!x.allFinite() || (y && !y->allFinite()) || std::isnan(objective)) {
      throw SolverError("non-finite iterate at iteration " + std::to_string(k), k);
    }
    if (objective > kDivergenceThreshold) {
      throw SolverError("divergence: objective " + std::to_string(objective) + " exceeds 1e12 at iteration " +
                            std::to_string(k),
                        k);
    }
    const double best = h_.best_so_far.empty() ? objective : std::min(h_.best_so_far.back(), objective);
    h_.ks.push_back(k);
    h_.ts.push_back(t);
    h_.xs.push_back(x);
    if (y) h_.ys.push_back(*y);
    h_.objectives.push_back(objective);
    h_.best_so_far.push_back(best);
    h_.prox_residuals.push_back(std::move(residual));
  }

 private:
  IterateHistory& h_;
};

// Like initial_subgradient, but zero when x0 is outside the domain.
Vector start_residual(const CompositeProblem& c, const Vector& x0) {
  if (c.nonsmooth && c.nonsmooth->min_norm_subgradient) {
    if (auto g = c.nonsmooth->min_norm_subgradient(x0)) return *g;
  }
  return Vector::Zero(c.dim());
}

double baseline_lipschitz(const CompositeProblem& c, const AlgoParams& p) {
  const std::optional<double> l = p.lipschitz ? p.lipschitz : c.smooth.lipschitz_grad;
  if (!l) throw Error("solver: Lipschitz constant L required (none given, none in problem metadata)");
  if (!(*l > 0.0)) throw Error("solver: Lipschitz constant L must be positive");
  return *l;
}

void reserve(IterateHistory& h, long n, bool with_y) {
  const auto sz = static_cast<std::size_t>(n + 1);
  h.ks.reserve(sz);
  h.ts.reserve(sz);
  h.xs.reserve(sz);
  if (with_y) h.ys.reserve(sz);
  h.objectives.reserve(sz);
  h.best_so_far.reserve(sz);
  h.prox_residuals.reserve(sz);
}

}  // namespace

Vector ifb_initial_y(const CompositeProblem& c, const AlgoParams& p, const Vector& x0, const Vector& v0) {
  validate_start(c, x0);
  if (v0.size() != x0.size()) throw Error("ifb_initial_y: v0 dimension mismatch");
  const Vector s0 = c.smooth.gradient(x0) + initial_subgradient(c, x0);
  return v0 + p.beta * s0 - (1.0 / p.beta - p.alpha / p.t0) * x0;
}

IterateHistory run_ifb_avd(const CompositeProblem& c, const AlgoParams& p, const Vector& x0, const Vector& y0) {
  validate_start(c, x0);
  if (y0.size() != x0.size()) throw Error("run_ifb_avd: y0 dimension mismatch");
  if (!(p.alpha > 0.0) || !(p.beta > 0.0) || !(p.h > 0.0) || !(p.t0 > 0.0) || p.iterations <= 0) {
    throw Error("run_ifb_avd: require alpha > 0, beta > 0, h > 0, t0 > 0, iterations > 0");
  }
  const double alpha = p.alpha;
  const double beta = p.beta;
  const double h = p.h;
  const double tau = beta * h;

  IterateHistory hist;
  reserve(hist, p.iterations, true);
  Recorder rec(hist);

  Vector x = x0;
  Vector y = y0;
  rec.push(0, p.t0, x, &y, c.value(x), start_residual(c, x0));

  for (long k = 0; k < p.iterations; ++k) {
    const double t = p.t0 + static_cast<double>(k) * h;
    const Vector arg = (1.0 + h * (1.0 / beta - alpha / t)) * x - tau * c.smooth.gradient(x) + h * y;
    x = c.prox(arg, tau);
    const double coupling = 1.0 / beta - alpha / t + alpha * beta / (t * t);
    y = (beta / (beta + h)) * y - (h / (beta + h)) * coupling * x;
    rec.push(k + 1, t + h, x, &y, c.value(x), (arg - x) / tau);
  }
  return hist;
}

IterateHistory run_fista(const CompositeProblem& c, const AlgoParams& p, const Vector& x0) {
  validate_start(c, x0);
  if (p.iterations <= 0) throw Error("run_fista: iterations must be positive");
  const double lip = baseline_lipschitz(c, p);
  const double step = 1.0 / lip;
  const double time_unit = std::sqrt(step);

  IterateHistory hist;
  reserve(hist, p.iterations, false);
  Recorder rec(hist);

  Vector x = x0;
  Vector x_prev = x0;
  Vector z = x0;
  double t = 1.0;
  rec.push(0, 0.0, x, nullptr, c.value(x), start_residual(c, x0));
  for (long k = 0; k < p.iterations; ++k) {
    const Vector arg = z - step * c.smooth.gradient(z);
    x_prev = x;
    x = c.prox(arg, step);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    rec.push(k + 1, static_cast<double>(k + 1) * time_unit, x, nullptr, c.value(x), (arg - x) / step);
  }
  return hist;
}

IterateHistory run_forward_backward(const CompositeProblem& c, const AlgoParams& p, const Vector& x0) {
  validate_start(c, x0);
  if (p.iterations <= 0) throw Error("run_forward_backward: iterations must be positive");
  const double lip = baseline_lipschitz(c, p);
  const double step = 1.0 / lip;

  IterateHistory hist;
  reserve(hist, p.iterations, false);
  Recorder rec(hist);

  Vector x = x0;
  rec.push(0, 0.0, x, nullptr, c.value(x), start_residual(c, x0));
  for (long k = 0; k < p.iterations; ++k) {
    const Vector arg = x - step * c.smooth.gradient(x);
    x = c.prox(arg, step);
    rec.push(k + 1, static_cast<double>(k + 1) * step, x, nullptr, c.value(x), (arg - x) / step);
  }
  return hist;
}

}  // namespace dinavd
