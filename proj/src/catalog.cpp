#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "dinavd/problem.hpp"
#include "dinavd/rng.hpp"

namespace dinavd {

namespace {

constexpr int kPowerIterations = 10000;
constexpr long kLassoReferenceIterations = 1000000;
constexpr long kBoxqpReferenceIterations = 100000;

struct ReferenceSolution {
  Vector x;
  double value = 0.0;
};

// Plain FISTA with constant step 1/L. Kept separate from the solver module
// so the stored optimum does not depend on the code it is used to check.
// Returns the best value seen and the last iterate; objective differences stop
// resolving near sqrt(eps) in x, the iterates do not.
ReferenceSolution reference_fista(const CompositeProblem& c, double lipschitz, long iterations) {
  const double step = 1.0 / lipschitz;
  Vector x = Vector::Zero(c.dim());
  Vector x_prev = x;
  Vector y = x;
  double t = 1.0;
  ReferenceSolution best{x, c.value(x)};
  for (long k = 0; k < iterations; ++k) {
    x_prev = x;
    x = c.prox(y - step * c.smooth.gradient(y), step);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    const double fx = c.value(x);
    if (fx < best.value) best.value = fx;
  }
  best.x = x;
  return best;
}

SmoothFunction quadratic(Matrix q, Vector lin, double constant) {
  SmoothFunction f;
  f.dim = static_cast<int>(q.rows());
  f.value = [q, lin, constant](const Vector& x) { return 0.5 * x.dot(q * x) - lin.dot(x) + constant; };
  f.gradient = [q, lin](const Vector& x) -> Vector { return q * x - lin; };
  f.hvp = [q](const Vector&, const Vector& v) -> Vector { return q * v; };
  return f;
}

SmoothFunction make_quad1d() {
  SmoothFunction f;
  f.dim = 1;
  f.value = [](const Vector& x) { return 0.5 * x[0] * x[0]; };
  f.gradient = [](const Vector& x) -> Vector { return x; };
  f.hvp = [](const Vector&, const Vector& v) -> Vector { return v; };
  f.lipschitz_grad = 1.0;
  f.strong_convexity = 1.0;
  f.minimizer = Vector::Zero(1);
  f.min_value = 0.0;
  return f;
}

SmoothFunction make_illcond2d() {
  SmoothFunction f;
  f.dim = 2;
  f.value = [](const Vector& x) { return 0.5 * (x[0] * x[0] + 1000.0 * x[1] * x[1]); };
  f.gradient = [](const Vector& x) -> Vector { return Eigen::Vector2d(x[0], 1000.0 * x[1]); };
  f.hvp = [](const Vector&, const Vector& v) -> Vector { return Eigen::Vector2d(v[0], 1000.0 * v[1]); };
  f.lipschitz_grad = 1000.0;
  f.strong_convexity = 1.0;
  f.minimizer = Vector::Zero(2);
  f.min_value = 0.0;
  return f;
}

SmoothFunction make_degenerate2d() {
  SmoothFunction f;
  f.dim = 2;
  f.value = [](const Vector& x) {
    const double s = x[0] + x[1];
    return 0.5 * s * s;
  };
  f.gradient = [](const Vector& x) -> Vector {
    const double s = x[0] + x[1];
    return Eigen::Vector2d(s, s);
  };
  f.hvp = [](const Vector&, const Vector& v) -> Vector {
    const double s = v[0] + v[1];
    return Eigen::Vector2d(s, s);
  };
  f.lipschitz_grad = 2.0;
  f.strong_convexity = 0.0;
  // argmin is the line x + y = 0; the origin is the representative.
  f.minimizer = Vector::Zero(2);
  f.min_value = 0.0;
  return f;
}

SmoothFunction make_quartic1d() {
  SmoothFunction f;
  f.dim = 1;
  f.value = [](const Vector& x) {
    const double x2 = x[0] * x[0];
    return 0.25 * x2 * x2;
  };
  f.gradient = [](const Vector& x) -> Vector { return Vector::Constant(1, x[0] * x[0] * x[0]); };
  f.hvp = [](const Vector& x, const Vector& v) -> Vector { return Vector::Constant(1, 3.0 * x[0] * x[0] * v[0]); };
  f.strong_convexity = 0.0;
  f.minimizer = Vector::Zero(1);
  f.min_value = 0.0;
  return f;
}

CompositeProblem make_abs1d() {
  SmoothFunction zero;
  zero.dim = 1;
  zero.value = [](const Vector&) { return 0.0; };
  zero.gradient = [](const Vector&) -> Vector { return Vector::Zero(1); };
  zero.hvp = [](const Vector&, const Vector&) -> Vector { return Vector::Zero(1); };
  zero.lipschitz_grad = 0.0;
  zero.strong_convexity = 0.0;
  zero.minimizer = Vector::Zero(1);
  zero.min_value = 0.0;

  CompositeProblem c;
  c.label = "abs1d";
  c.smooth = std::move(zero);
  c.nonsmooth = l1_norm(1, 1.0);
  c.known_opt_value = 0.0;
  c.minimizer = Vector::Zero(1);
  return c;
}

CompositeProblem make_boxqp(std::uint64_t seed) {
  constexpr int n = 10;
  Xoshiro256 rng(seed);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  Vector lin(n);
  for (int i = 0; i < n; ++i) lin[i] = 2.0 * rng.normal();
  const Matrix q = m.transpose() * m / n + 0.5 * Matrix::Identity(n, n);

  CompositeProblem c;
  c.label = "boxqp";
  c.smooth = quadratic(q, lin, 0.0);
  c.smooth.lipschitz_grad = power_iteration(q, kPowerIterations);
  c.smooth.strong_convexity = Eigen::SelfAdjointEigenSolver<Matrix>(q).eigenvalues().minCoeff();
  c.nonsmooth = box_indicator(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0));

  static std::mutex mu;
  static std::map<std::uint64_t, ReferenceSolution> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(seed);
  if (it == cache.end()) {
    it = cache.emplace(seed, reference_fista(c, *c.smooth.lipschitz_grad, kBoxqpReferenceIterations)).first;
  }
  c.known_opt_value = it->second.value;
  c.minimizer = it->second.x;
  return c;
}

}  // namespace

double power_iteration(const Matrix& sym, int iterations) {
  Vector v = Vector::Ones(sym.rows()).normalized();
  double lambda = 0.0;
  for (int k = 0; k < iterations; ++k) {
    const Vector w = sym * v;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / n;
  }
  return lambda;
}

CompositeProblem make_lasso(int rows, int cols, std::uint64_t seed, double weight) {
  if (rows <= 0 || cols <= 0) throw Error("make_lasso: dimensions must be positive");
  Xoshiro256 rng(seed);
  Matrix a(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = scale * rng.normal();
  Vector x_true = Vector::Zero(cols);
  for (int j = 0; j < cols; ++j) {
    if (rng.uniform() < 0.1) x_true[j] = rng.normal();
  }
  Vector b = a * x_true;
  for (int i = 0; i < rows; ++i) b[i] += 0.1 * rng.normal();

  const Matrix gram = a.transpose() * a;
  const Vector atb = a.transpose() * b;

  CompositeProblem c;
  c.label = "lasso";
  c.smooth.dim = cols;
  c.smooth.value = [a, b](const Vector& x) { return 0.5 * (a * x - b).squaredNorm(); };
  c.smooth.gradient = [gram, atb](const Vector& x) -> Vector { return gram * x - atb; };
  c.smooth.hvp = [gram](const Vector&, const Vector& v) -> Vector { return gram * v; };
  c.smooth.lipschitz_grad = power_iteration(gram, kPowerIterations);
  c.smooth.strong_convexity = 0.0;
  c.nonsmooth = l1_norm(cols, weight);

  using Key = std::tuple<int, int, std::uint64_t, double>;
  static std::mutex mu;
  static std::map<Key, ReferenceSolution> cache;
  std::lock_guard lock(mu);
  const Key key{rows, cols, seed, weight};
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, reference_fista(c, *c.smooth.lipschitz_grad, kLassoReferenceIterations)).first;
  }
  c.known_opt_value = it->second.value;
  c.minimizer = it->second.x;
  return c;
}

const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids{"quad1d", "illcond2d", "degenerate2d", "quartic1d",
                                            "abs1d",  "lasso",     "boxqp"};
  return ids;
}

CompositeProblem make_instance(std::string_view catalog_id, std::uint64_t seed) {
  if (catalog_id == "quad1d") return as_composite(make_quad1d(), "quad1d");
  if (catalog_id == "illcond2d") return as_composite(make_illcond2d(), "illcond2d");
  if (catalog_id == "degenerate2d") return as_composite(make_degenerate2d(), "degenerate2d");
  if (catalog_id == "quartic1d") return as_composite(make_quartic1d(), "quartic1d");
  if (catalog_id == "abs1d") return make_abs1d();
  if (catalog_id == "lasso") return make_lasso(20, 50, seed);
  if (catalog_id == "boxqp") return make_boxqp(seed);

  std::string msg = "unknown catalog id '" + std::string(catalog_id) + "'; valid ids:";
  for (const auto& id : catalog_ids()) msg += " " + id;
  throw Error(msg);
}

}  // namespace dinavd
