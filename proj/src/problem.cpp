#include "dinavd/problem.hpp"

#include <cmath>
#include <limits>

#include "dinavd/rng.hpp"

namespace dinavd {

SmoothFunction scaled(const SmoothFunction& f, double factor) {
  if (!(factor > 0.0)) throw Error("scaled: factor must be positive");
  SmoothFunction g = f;
  g.value = [f, factor](const Vector& x) { return factor * f.value(x); };
  g.gradient = [f, factor](const Vector& x) -> Vector { return factor * f.gradient(x); };
  if (f.has_hvp()) {
    g.hvp = [f, factor](const Vector& x, const Vector& v) -> Vector { return factor * f.hvp(x, v); };
  }
  if (f.lipschitz_grad) g.lipschitz_grad = factor * *f.lipschitz_grad;
  if (f.strong_convexity) g.strong_convexity = factor * *f.strong_convexity;
  if (f.min_value) g.min_value = factor * *f.min_value;
  return g;
}

Vector prox_l1(const Vector& v, double tau) {
  if (!(tau > 0.0)) throw Error("prox_l1: step tau must be positive");
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]) - tau;
    out[i] = mag > 0.0 ? std::copysign(mag, v[i]) : 0.0;
  }
  return out;
}

Vector prox_box(const Vector& v, double tau, const Vector& lo, const Vector& hi) {
  if (!(tau > 0.0)) throw Error("prox_box: step tau must be positive");
  if (lo.size() != v.size() || hi.size() != v.size()) throw Error("prox_box: dimension mismatch");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (lo[i] > hi[i]) {
      throw Error("prox_box: empty box, lo > hi in coordinate " + std::to_string(i));
    }
  }
  return v.cwiseMax(lo).cwiseMin(hi);
}

ProxableFunction zero_function(int dim) {
  ProxableFunction phi;
  phi.dim = dim;
  phi.name = "zero";
  phi.value = [](const Vector&) { return 0.0; };
  phi.prox = [](const Vector& v, double tau) -> Vector {
    if (!(tau > 0.0)) throw Error("prox: step tau must be positive");
    return v;
  };
  phi.min_norm_subgradient = [dim](const Vector&) -> std::optional<Vector> { return Vector::Zero(dim); };
  phi.in_subdifferential = [](const Vector&, const Vector& r, double tol) {
    return r.allFinite() && r.lpNorm<Eigen::Infinity>() <= tol;
  };
  return phi;
}

ProxableFunction l1_norm(int dim, double weight) {
  if (!(weight > 0.0)) throw Error("l1_norm: weight must be positive");
  ProxableFunction phi;
  phi.dim = dim;
  phi.name = "l1";
  phi.value = [weight](const Vector& x) { return weight * x.lpNorm<1>(); };
  phi.prox = [weight](const Vector& v, double tau) { return prox_l1(v, tau * weight); };
  phi.min_norm_subgradient = [weight](const Vector& x) -> std::optional<Vector> {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = x[i] == 0.0 ? 0.0 : std::copysign(weight, x[i]);
    return g;
  };
  phi.in_subdifferential = [weight](const Vector& p, const Vector& r, double tol) {
    if (!r.allFinite()) return false;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] == 0.0) {
        if (std::abs(r[i]) > weight + tol) return false;
      } else if (std::abs(r[i] - std::copysign(weight, p[i])) > tol) {
        return false;
      }
    }
    return true;
  };
  return phi;
}

ProxableFunction box_indicator(Vector lo, Vector hi) {
  if (lo.size() != hi.size()) throw Error("box_indicator: dimension mismatch");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (lo[i] > hi[i]) throw Error("box_indicator: empty box, lo > hi in coordinate " + std::to_string(i));
  }
  ProxableFunction phi;
  phi.dim = static_cast<int>(lo.size());
  phi.name = "box";
  phi.value = [lo, hi](const Vector& x) {
    const bool inside = (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    return inside ? 0.0 : std::numeric_limits<double>::infinity();
  };
  phi.prox = [lo, hi](const Vector& v, double tau) { return prox_box(v, tau, lo, hi); };
  phi.min_norm_subgradient = [lo, hi](const Vector& x) -> std::optional<Vector> {
    const bool inside = (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    if (!inside) return std::nullopt;
    return Vector::Zero(x.size());
  };
  // Normal cone membership.
  phi.in_subdifferential = [lo, hi](const Vector& p, const Vector& r, double tol) {
    if (!r.allFinite()) return false;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
      if (lo[i] == hi[i]) continue;
      if (p[i] == lo[i]) {
        if (r[i] > tol) return false;
      } else if (p[i] == hi[i]) {
        if (r[i] < -tol) return false;
      } else if (std::abs(r[i]) > tol) {
        return false;
      }
    }
    return true;
  };
  return phi;
}

double CompositeProblem::value(const Vector& x) const {
  const double smooth_part = smooth.value(x);
  return nonsmooth ? smooth_part + nonsmooth->value(x) : smooth_part;
}

Vector CompositeProblem::prox(const Vector& v, double tau) const {
  if (!nonsmooth) {
    if (!(tau > 0.0)) throw Error("prox: step tau must be positive");
    return v;
  }
  return nonsmooth->prox(v, tau);
}

CompositeProblem as_composite(SmoothFunction f, std::string label) {
  CompositeProblem c;
  c.label = std::move(label);
  c.known_opt_value = f.min_value;
  c.minimizer = f.minimizer;
  c.smooth = std::move(f);
  return c;
}

double fd_step(const Vector& x) { return 1e-6 * (1.0 + x.norm()); }

DerivativeReport check_derivatives(const SmoothFunction& f, std::span<const Vector> points, double grad_tol,
                                   double hvp_tol) {
  DerivativeReport report;
  Xoshiro256 rng(0x5eedf00dULL);
  for (const Vector& x : points) {
    PointCheck pc;
    pc.point = x;
    const double h = fd_step(x);
    const Vector g = f.gradient(x);
    Vector g_fd(f.dim);
    for (int i = 0; i < f.dim; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g_fd[i] = (f.value(xp) - f.value(xm)) / (2.0 * h);
    }
    pc.grad_error = (g - g_fd).norm() / std::max(1.0, g.norm());
    bool ok = std::isfinite(pc.grad_error) && pc.grad_error < grad_tol;

    if (f.has_hvp()) {
      Vector dir(f.dim);
      for (int i = 0; i < f.dim; ++i) dir[i] = rng.normal();
      dir.normalize();
      const Vector hv = f.hvp(x, dir);
      const Vector hv_fd = (f.gradient(x + h * dir) - f.gradient(x - h * dir)) / (2.0 * h);
      pc.hvp_error = (hv - hv_fd).norm() / std::max(1.0, hv.norm());
      ok = ok && std::isfinite(*pc.hvp_error) && *pc.hvp_error < hvp_tol;
    }
    pc.passed = ok;
    report.passed = report.passed && ok;
    report.points.push_back(std::move(pc));
  }
  return report;
}

}  // namespace dinavd
