#include <doctest.h>

#include <cmath>
#include <vector>

#include "dinavd/problem.hpp"
#include "dinavd/rng.hpp"

using namespace dinavd;

namespace {

// Straight transcription of the reference xoshiro256** and splitmix64.
struct RefXoshiro {
  std::uint64_t s[4];
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  explicit RefXoshiro(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& w : s) {
      z += 0x9e3779b97f4a7c15ULL;
      std::uint64_t r = z;
      r = (r ^ (r >> 30)) * 0xbf58476d1ce4e5b9ULL;
      r = (r ^ (r >> 27)) * 0x94d049bb133111ebULL;
      w = r ^ (r >> 31);
    }
  }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

double grid_argmin(const std::function<double(double)>& g) {
  double best = -10.0, best_val = g(-10.0);
  for (long i = 1; i <= 200000; ++i) {
    const double u = -10.0 + 1e-4 * static_cast<double>(i);
    const double val = g(u);
    if (val < best_val) {
      best_val = val;
      best = u;
    }
  }
  return best;
}

std::vector<Vector> random_points(int dim, int n, std::uint64_t seed, double scale) {
  Xoshiro256 rng(seed);
  std::vector<Vector> pts;
  for (int i = 0; i < n; ++i) {
    Vector x(dim);
    for (int j = 0; j < dim; ++j) x[j] = scale * rng.normal();
    pts.push_back(x);
  }
  return pts;
}

// Independent accelerated proximal gradient for the lasso optimum.
double lasso_fista_value(const CompositeProblem& c, long iters) {
  const double L = *c.smooth.lipschitz_grad;
  Vector x = Vector::Zero(c.dim()), z = x;
  double tk = 1.0;
  for (long k = 0; k < iters; ++k) {
    const Vector v = z - c.smooth.gradient(z) / L;
    Vector xn = v.array().sign() * (v.array().abs() - 0.1 / L).max(0.0);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    z = xn + ((tk - 1.0) / tn) * (xn - x);
    x = xn;
    tk = tn;
  }
  return c.value(x);
}

}  // namespace

TEST_CASE("splitmix64 matches published reference outputs") {
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(s) == 0x06c45d188009454fULL);
}

TEST_CASE("xoshiro256** stream is bit-exact and uniform lies in [0, 1)") {
  Xoshiro256 a(kDefaultSeed);
  RefXoshiro b(kDefaultSeed);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next() == b.next());
  Xoshiro256 u(7);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = u.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    mean += x;
  }
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have unit variance") {
  Xoshiro256 r(11);
  double m = 0.0, m2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    m += x;
    m2 += x * x;
  }
  m /= n;
  CHECK(std::abs(m) < 0.01);
  CHECK(m2 / n - m * m == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("catalog values from the illustrations") {
  const auto q = make_instance("quad1d");
  CHECK(q.smooth.value(Vector::Ones(1)) == 0.5);
  CHECK(q.smooth.gradient(Vector::Zero(1)).norm() == 0.0);

  const auto ill = make_instance("illcond2d");
  Vector v(2);
  v << 1.0, 1.0;
  for (const auto& x : random_points(2, 5, 3, 2.0)) {
    const Vector hv = ill.smooth.hvp(x, v);
    CHECK(hv[0] == 1.0);
    CHECK(hv[1] == 1000.0);
  }
  CHECK(*ill.smooth.lipschitz_grad == 1000.0);
  CHECK(*ill.smooth.strong_convexity == 1.0);
}

TEST_CASE("catalog shapes") {
  const auto d = make_instance("degenerate2d");
  Vector x(2);
  x << 0.3, -0.3;
  CHECK(d.smooth.value(x) == 0.0);
  x << 1.0, 2.0;
  CHECK(d.smooth.value(x) == doctest::Approx(4.5));
  CHECK(*d.smooth.strong_convexity == 0.0);

  const auto q4 = make_instance("quartic1d");
  CHECK(q4.smooth.value(Vector::Constant(1, 2.0)) == doctest::Approx(4.0));
  CHECK(q4.smooth.gradient(Vector::Constant(1, 2.0))[0] == doctest::Approx(8.0));

  const auto a = make_instance("abs1d");
  REQUIRE(a.nonsmooth);
  CHECK(a.value(Vector::Constant(1, -1.5)) == 1.5);
  CHECK(*a.known_opt_value == 0.0);

  const auto l = make_instance("lasso");
  CHECK(l.dim() == 50);
  REQUIRE(l.nonsmooth);
  const auto bq = make_instance("boxqp");
  CHECK(bq.dim() == 10);
  CHECK(std::isinf(bq.value(Vector::Constant(10, 1.5))));
}

TEST_CASE("unknown catalog id names the valid ids") {
  try {
    make_instance("nope");
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    for (const auto& id : catalog_ids()) CHECK(msg.find(id) != std::string::npos);
  }
}

TEST_CASE("instances are deterministic in the seed") {
  const auto a = make_instance("lasso", 5);
  const auto b = make_instance("lasso", 5);
  const auto c = make_instance("lasso", 6);
  const Vector x = Vector::LinSpaced(50, -1.0, 1.0);
  CHECK(a.value(x) == b.value(x));
  CHECK(a.value(x) != c.value(x));
}

TEST_CASE("prox_l1 examples against the grid-search oracle") {
  CHECK(prox_l1(Vector::Constant(1, 3.0), 1.0)[0] == 2.0);
  CHECK(prox_l1(Vector::Constant(1, 0.5), 1.0)[0] == 0.0);
  CHECK(prox_l1(Vector::Constant(1, 0.0), 5.0)[0] == 0.0);
  CHECK(std::abs(grid_argmin([](double u) { return std::abs(u) + 0.5 * (u - 3.0) * (u - 3.0); }) - 2.0) < 1e-3);
  CHECK_THROWS_AS(prox_l1(Vector::Ones(1), 0.0), Error);
}

TEST_CASE("prox_box examples") {
  Vector v(2), lo = Vector::Constant(2, -1.0), hi = Vector::Constant(2, 1.0);
  v << 2.0, -3.0;
  CHECK(prox_box(v, 1.0, lo, hi) == Vector((Vector(2) << 1.0, -1.0).finished()));
  v << 0.3, 0.7;
  CHECK(prox_box(v, 1.0, lo, hi) == v);
  const Vector l0 = Vector::Zero(1), h1 = Vector::Ones(1), p = Vector::Constant(1, 1.5);
  CHECK(prox_box(p, 0.01, l0, h1)[0] == 1.0);
  CHECK(prox_box(p, 100.0, l0, h1)[0] == 1.0);
  CHECK_THROWS_AS(prox_box(p, 1.0, h1, l0), Error);
}

TEST_CASE("prox residuals pass the subgradient tests") {
  const auto l1 = l1_norm(6, 0.1);
  const auto box = box_indicator(Vector::Constant(6, -1.0), Vector::Constant(6, 1.0));
  for (const auto& v : random_points(6, 100, 17, 2.0)) {
    for (double tau : {1e-3, 0.5, 10.0}) {
      const Vector p = l1.prox(v, tau);
      CHECK(l1.in_subdifferential(p, (v - p) / tau, 1e-10));
      const Vector q = box.prox(v, tau);
      CHECK(box.in_subdifferential(q, (v - q) / tau, 1e-10));
    }
  }
}

TEST_CASE("prox operators are firmly nonexpansive") {
  const auto l1 = l1_norm(5, 0.7);
  const auto box = box_indicator(Vector::Constant(5, -0.5), Vector::Constant(5, 1.0));
  const auto us = random_points(5, 100, 21, 3.0);
  const auto vs = random_points(5, 100, 22, 3.0);
  for (std::size_t i = 0; i < us.size(); ++i) {
    for (const auto* f : {&l1, &box}) {
      const Vector d = f->prox(us[i], 0.8) - f->prox(vs[i], 0.8);
      CHECK(d.squaredNorm() <= d.dot(us[i] - vs[i]) + 1e-12);
    }
  }
}

TEST_CASE("declared minimizers are stationary and prox fixed points") {
  for (const auto& id : catalog_ids()) {
    CAPTURE(id);
    const auto c = make_instance(id);
    const auto& f = c.smooth;
    if (f.minimizer && !c.nonsmooth) {
      CHECK(f.gradient(*f.minimizer).norm() < 1e-10);
      CHECK(std::abs(f.value(*f.minimizer) - *f.min_value) <= 1e-12);
    }
    if (f.lipschitz_grad && f.strong_convexity) CHECK(*f.strong_convexity <= *f.lipschitz_grad);
    if (c.minimizer) {
      for (double tau : {1e-3, 1.0, 10.0}) {
        const Vector& xs = *c.minimizer;
        CHECK((c.prox(xs - tau * f.gradient(xs), tau) - xs).norm() < 1e-9);
      }
    }
  }
}

TEST_CASE("finite-difference checks on every catalog instance") {
  for (const auto& id : catalog_ids()) {
    CAPTURE(id);
    const auto c = make_instance(id);
    const auto pts = random_points(c.dim(), 10, 99, 1.5);
    const auto rep = check_derivatives(c.smooth, pts, 1e-5, 1e-4);
    CHECK(rep.passed);
  }
  const Vector one = Vector::Ones(1);
  const auto q = check_derivatives(make_instance("quad1d").smooth, std::span<const Vector>(&one, 1));
  CHECK(q.points[0].grad_error < 1e-9);
  const Vector two = Vector::Constant(1, 2.0);
  CHECK(check_derivatives(make_instance("quartic1d").smooth, std::span<const Vector>(&two, 1)).passed);
}

TEST_CASE("finite-difference check flags a wrong gradient and NaN") {
  auto f = make_instance("quad1d").smooth;
  f.gradient = [](const Vector& x) -> Vector { return 1.1 * x; };
  const Vector one = Vector::Ones(1);
  CHECK_FALSE(check_derivatives(f, std::span<const Vector>(&one, 1)).passed);
  f.gradient = [](const Vector& x) -> Vector { return Vector::Constant(x.size(), std::nan("")); };
  CHECK_FALSE(check_derivatives(f, std::span<const Vector>(&one, 1)).passed);
}

TEST_CASE("lasso optimum agrees with an independent FISTA run") {
  const auto c = make_instance("lasso");
  const double mine = lasso_fista_value(c, 200000);
  CHECK(std::abs(mine - *c.known_opt_value) < 1e-10);
  CHECK(*c.known_opt_value == doctest::Approx(0.419348737352916).epsilon(1e-12));
}

TEST_CASE("power iteration recovers the top eigenvalue") {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 1.0, 4.0, 2.5;
  CHECK(power_iteration(m, 10000) == doctest::Approx(4.0).epsilon(1e-10));
}
