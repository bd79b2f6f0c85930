#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dinavd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised for invalid arguments and violated preconditions across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smooth convex objective with first-order oracle and optional Hessian-vector
/// product.
struct SmoothFunction {
  int dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  /// (x, v) -> Hessian(x) * v. Empty when the instance provides none.
  std::function<Vector(const Vector&, const Vector&)> hvp;
  std::optional<double> lipschitz_grad;
  std::optional<double> strong_convexity;
  std::optional<Vector> minimizer;
  std::optional<double> min_value;

  bool has_hvp() const { return static_cast<bool>(hvp); }
};

/// Returns c * f, with every oracle and piece of metadata rescaled.
SmoothFunction scaled(const SmoothFunction& f, double factor);

/// Proper lsc convex function accessed through its proximity operator.
struct ProxableFunction {
  int dim = 0;
  std::string name;
  /// May return +infinity outside the domain.
  std::function<double(const Vector&)> value;
  /// (v, tau) -> argmin_u tau * phi(u) + 0.5 * |u - v|^2
  std::function<Vector(const Vector&, double)> prox;
  /// Element of least norm in the subdifferential; nullopt outside the domain.
  std::function<std::optional<Vector>(const Vector&)> min_norm_subgradient;
  /// Tests r in subdiff phi(p) up to tol.
  std::function<bool(const Vector& p, const Vector& r, double tol)> in_subdifferential;
};

ProxableFunction zero_function(int dim);
ProxableFunction l1_norm(int dim, double weight);
ProxableFunction box_indicator(Vector lo, Vector hi);

/// min_x Psi(x) + phi(x) with Psi smooth and phi proxable.
struct CompositeProblem {
  std::string label;
  SmoothFunction smooth;
  std::optional<ProxableFunction> nonsmooth;
  std::optional<double> known_opt_value;
  /// Minimizer of the composite objective when known (exactly or by reference solve).
  std::optional<Vector> minimizer;

  int dim() const { return smooth.dim; }
  double value(const Vector& x) const;
  /// prox of the nonsmooth part, identity when it is absent.
  Vector prox(const Vector& v, double tau) const;
};

CompositeProblem as_composite(SmoothFunction f, std::string label);

/// Soft thresholding: componentwise shrinkage of v toward 0 by tau.
Vector prox_l1(const Vector& v, double tau);

/// Projection onto [lo, hi]; tau only has to be positive.
Vector prox_box(const Vector& v, double tau, const Vector& lo, const Vector& hi);

// ---------------------------------------------------------------------------
// Catalog

inline constexpr std::uint64_t kDefaultSeed = 20240521;

/// Valid ids for make_instance, in catalog order.
const std::vector<std::string>& catalog_ids();

/// Builds one of the fixed desk-scale instances. Unknown ids throw Error
/// listing the valid ones. Seed only affects lasso and boxqp.
CompositeProblem make_instance(std::string_view catalog_id, std::uint64_t seed = kDefaultSeed);

/// 0.5 |Ax - b|^2 + weight |x|_1 with A rows x cols drawn from seed.
/// The reference optimum is computed once per parameter set and cached.
CompositeProblem make_lasso(int rows, int cols, std::uint64_t seed, double weight = 0.1);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration from the
/// all-ones vector.
double power_iteration(const Matrix& sym, int iterations);

// ---------------------------------------------------------------------------
// Finite-difference derivative checks

/// Central-difference step used throughout: 1e-6 * (1 + |x|).
double fd_step(const Vector& x);

struct PointCheck {
  Vector point;
  double grad_error = 0.0;
  std::optional<double> hvp_error;
  bool passed = false;
};

struct DerivativeReport {
  std::vector<PointCheck> points;
  bool passed = true;
};

/// Relative errors are |analytic - fd| / max(1, |analytic|). The Hessian-vector
/// product is probed along a fixed pseudo-random unit direction per point.
DerivativeReport check_derivatives(const SmoothFunction& f, std::span<const Vector> points,
                                   double grad_tol = 1e-5, double hvp_tol = 1e-4);

}  // namespace dinavd
