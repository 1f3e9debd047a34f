#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fbvar/errors.hpp"
#include "fbvar/quadrature.hpp"
#include "fbvar/semigroups.hpp"

using namespace fbvar;
using std::numbers::pi;

TEST_CASE("time grids and fractional orders") {
  auto g = TimeGrid::log_uniform(10.0, 1e-3, 200);
  CHECK(g.size() == 200);
  for (int k = 1; k < g.size(); ++k) CHECK(g.times[k] < g.times[k - 1]);
  auto g1 = g.with_time(1.0);
  CHECK(g1.size() == 201);
  CHECK((g1.times.array() == 1.0).count() == 1);
  CHECK(g1.with_time(1.0).size() == 201);
  CHECK_THROWS_AS(TimeGrid::from({1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(TimeGrid::from({1.0, -1.0}), DomainError);
  CHECK(FractionalOrder::of(0.0).m == 1);
  CHECK(FractionalOrder::of(1.0).m == 2);
  CHECK(FractionalOrder::of(2.4).m == 3);
  CHECK(FractionalOrder::of(1.0).sign() == -1.0);
  CHECK_THROWS_AS(FractionalOrder::of(-0.1), DomainError);
}

TEST_CASE("heat kernel: symmetry, theta oracle, positivity") {
  auto b = make_basis(0.5, 60);
  CHECK(heat_kernel(*b, 0.1, 0.3, 0.7).value == heat_kernel(*b, 0.1, 0.7, 0.3).value);
  double theta = 0.0;
  for (int n = 1; n <= 200; ++n) theta += 2 * std::exp(-0.1 * n * n * pi * pi) * std::sin(n * pi * 0.3) * std::sin(n * pi * 0.7);
  CHECK(heat_kernel(*b, 0.1, 0.3, 0.7).value * 0.21 == doctest::Approx(theta).epsilon(1e-10));

  for (double nu : {-0.5, 0.0, 0.5, 1.0}) {
    auto bn = make_basis(nu, 60);
    int bad = 0;
    for (double t : {0.05, 0.1, 0.5, 1.0, 2.0})
      for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
          if (!(heat_kernel(*bn, t, (i + 0.5) / 20, (j + 0.5) / 20).value > 0.0)) ++bad;
    CHECK(bad == 0);
  }
}

TEST_CASE("kernels refuse unresolved times") {
  auto b = make_basis(0.0, 20);
  CHECK_THROWS_AS(heat_kernel(*b, 1e-4, 0.3, 0.5), ResolutionError);
  CHECK_THROWS_AS(poisson_kernel(*b, 1e-3, 0.3, 0.5), ResolutionError);
  try {
    heat_kernel(*b, 1e-4, 0.3, 0.5);
  } catch (const ResolutionError& e) {
    CHECK(e.tail_bound > 1e-10);
  }
  const double tmin = min_resolvable_time(*b, Flavor::phi, false, 0.3, 0.5);
  CHECK_NOTHROW(heat_kernel(*b, tmin * 1.01, 0.3, 0.5));
  CHECK_THROWS_AS(heat_kernel(*b, tmin * 0.9, 0.3, 0.5), ResolutionError);
  // the tail estimate really bounds the truncation error
  auto big = make_basis(0.0, 400);
  const double t = tmin * 0.5;
  const double truth = heat_kernel(*big, t, 0.3, 0.5).value;
  double partial = 0.0;
  for (int n = 1; n <= 20; ++n) partial += heat_factor(t, big->lambda(n)) * big->phi(n, 0.3) * big->phi(n, 0.5);
  CHECK(std::abs(truth - partial) <= kernel_tail_estimate(*b, Flavor::phi, [t](double l) { return heat_factor(t, l); }, 0.3, 0.5));
}

TEST_CASE("coefficient space semigroup laws") {
  auto b = make_basis(0.5, 10);
  CoefficientVector c{Eigen::VectorXd::Ones(10), Flavor::phi, b};
  CHECK(heat_apply(0.1, c).values[0] == doctest::Approx(0.372708).epsilon(1e-6));
  CHECK(poisson_apply(1.0, c).values[0] == doctest::Approx(0.0432139).epsilon(1e-6));
  for (auto nu : {-0.7, 0.0, 2.0}) {
    auto bn = make_basis(nu, 30);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    CoefficientVector r{Eigen::VectorXd(30), Flavor::phi, bn};
    for (int i = 0; i < 30; ++i) r.values[i] = nd(rng);
    CHECK((heat_apply(0.3, heat_apply(0.2, r)).values - heat_apply(0.5, r).values).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((poisson_apply(0.3, poisson_apply(0.2, r)).values - poisson_apply(0.5, r).values).cwiseAbs().maxCoeff() < 1e-14);
    const double t = 1e-6;
    const double lam1 = bn->lambda(1);
    CHECK(((heat_apply(t, r).values - r.values).cwiseAbs().array() <= (1 - std::exp(-t * lam1 * lam1 * 1e6)) * r.values.cwiseAbs().array()).all());
    // operator-level subordination
    for (double s : {0.05, 0.3, 2.0})
      CHECK((poisson_apply_subordinated(s, r).values - poisson_apply(s, r).values).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Poisson kernel against the subordination integral over u") {
  for (double nu : {0.0, 0.5}) {
    auto b = make_basis(nu, 700);
    const SpectralBasis& B = *b;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(0.05, 0.95), ut(0.05, 1.0);
    for (int k = 0; k < 4; ++k) {
      const double t = ut(rng), x = ux(rng), y = ux(rng);
      // (t / 2 sqrt(pi)) int e^{-t^2/4u} u^{-3/2} W_u du, u = e^r, trapezoid in r
      const double r0 = std::log(t * t / 4 / 45), r1 = std::log(60.0);
      const int steps = 600;
      Eigen::VectorXd pp(B.size());
      for (int n = 1; n <= B.size(); ++n) pp[n - 1] = B.phi(n, x) * B.phi(n, y);
      double acc = 0.0;
      for (int i = 0; i <= steps; ++i) {
        const double u = std::exp(r0 + (r1 - r0) * i / steps);
        double w = 0.0;
        for (int n = 1; n <= B.size(); ++n) w += heat_factor(u, B.lambda(n)) * pp[n - 1];
        acc += (i == 0 || i == steps ? 0.5 : 1.0) * std::exp(-t * t / (4 * u)) * std::pow(u, -0.5) * w;
      }
      acc *= (r1 - r0) / steps * t / (2 * std::sqrt(pi));
      const double series = poisson_kernel(*b, t, x, y).value;
      CHECK(acc == doctest::Approx(series).epsilon(1e-6));
      CHECK(poisson_kernel_subordinated(*b, t, x, y).value == doctest::Approx(series).epsilon(1e-9));
    }
  }
}

TEST_CASE("Poisson semigroup is not Markovian") {
  for (double nu : {-0.5, 0.0, 1.0}) {
    auto b = make_basis(nu, 200);
    auto one = step_function_coefficients(b, Flavor::phi, {{0.0, 1.0, 1.0}});
    const double v = synthesize_at(poisson_apply(0.5, one), 0.5);
    CHECK(v < 1.0);
    CHECK(v > 0.0);
  }
}

TEST_CASE("Weyl derivative") {
  CHECK(weyl_integral_check(1.0, 3.0, 0.5) == doctest::Approx(3.0 * std::exp(-1.5)).epsilon(1e-10));
  CHECK(weyl_integral_check(0.5, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(weyl_integral_check(1.5, 2.0, 1.0) == doctest::Approx(0.382785).epsilon(1e-6));
  // beta = 1: the multiplier is t d/dt e^{-t lambda}
  for (double lam : {2.4, 30.0})
    for (double t : {0.01, 0.5, 2.0}) {
      const double h = 1e-5;
      const double fd = t * (std::exp(-(t + h) * lam) - std::exp(-(t - h) * lam)) / (2 * h);
      CHECK(weyl_poisson_factor(FractionalOrder::of(1.0), t, lam) == doctest::Approx(-t * lam * std::exp(-t * lam)).epsilon(1e-14));
      CHECK(weyl_poisson_factor(FractionalOrder::of(1.0), t, lam) == doctest::Approx(fd).epsilon(1e-7));
    }
  // beta = 1/2 on e^{-t}: -Gamma(1/2)^{-1} int h'(t+s) s^{-1/2} ds with s = w^2
  for (double t : {0.5, 1.0, 2.0}) {
    double acc = 0.0;
    for (int c = 0; c < 40; ++c)
      acc += gauss_integrate([t](double w) { return 2 * -std::exp(-(t + w * w)); }, c * 0.25, (c + 1) * 0.25, 20);
    const double oracle = -acc / std::sqrt(pi);
    CHECK(oracle == doctest::Approx(std::exp(-t)).epsilon(1e-12));
    auto o = FractionalOrder::of(0.5);
    CHECK(o.sign() * weyl_derivative([](double s) { return -std::exp(-s); }, o, t) == doctest::Approx(oracle).epsilon(1e-6));
  }
  // both routes agree per mode
  auto b = make_basis(0.0, 5);
  for (double beta : {0.5, 1.0, 1.5, 2.4})
    for (int n : {1, 5})
      for (double t : {0.5, 1.0, 2.0}) {
        const double lam = b->lambda(n);
        const double mult = FractionalOrder::of(beta).sign() * weyl_poisson_factor(FractionalOrder::of(beta), t, lam) / std::pow(t, beta);
        CHECK(weyl_integral_check(beta, lam, t) == doctest::Approx(mult).epsilon(1e-6));
      }
  CHECK_THROWS_AS(weyl_derivative([](double) { return 1.0; }, FractionalOrder::of(0.5), 1.0), ConvergenceError);
}

TEST_CASE("free heat kernel") {
  const double t = 0.1, x = 0.3, y = 0.7;
  const double images = 1.0 / (x * y) / std::sqrt(4 * pi * t) *
                        (std::exp(-(x - y) * (x - y) / (4 * t)) - std::exp(-(x + y) * (x + y) / (4 * t)));
  CHECK(free_heat_kernel(0.5, t, x, y) == doctest::Approx(images).epsilon(1e-10));
  CHECK(free_heat_kernel(0.5, 1e-4, x, 0.30001) == doctest::Approx(1.0 / (x * 0.30001) / std::sqrt(4 * pi * 1e-4) *
                                                                   std::exp(-1e-10 / 4e-4)).epsilon(1e-10));
  for (double nu : {-0.9, 0.0, 2.0}) {
    CHECK(free_heat_kernel(nu, 0.2, 0.1, 0.6) == free_heat_kernel(nu, 0.2, 0.6, 0.1));
    CHECK(free_heat_kernel(nu, 0.2, 0.1, 0.6) > 0.0);
    CHECK(free_heat_kernel(nu, 1e-3, 0.5, 0.5) > 0.0);
    CHECK(std::isfinite(free_heat_kernel(nu, 1e-6, 0.9, 0.9)));
  }
}

TEST_CASE("S_nu kernels and operators") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (double nu : {-0.3, 0.0, 1.0}) {
    auto b = make_basis(nu, 400);
    for (int k = 0; k < 10; ++k) {
      const double t = 0.05 + u(rng), x = u(rng), y = u(rng);
      const double s = std::pow(x * y, nu + 0.5);
      CHECK(s_nu_heat_kernel(*b, t, x, y).value == doctest::Approx(s * heat_kernel(*b, t, x, y).value).epsilon(1e-12));
      CHECK(s_nu_poisson_kernel(*b, t, x, y).value == doctest::Approx(s * poisson_kernel(*b, t, x, y).value).epsilon(1e-12));
    }
  }
  auto b = make_basis(0.5, 60);
  double ref = 0.0;
  for (int n = 1; n <= 60; ++n) ref += 2 * std::exp(-0.05 * n * n * pi * pi) * std::sin(n * pi * 0.2) * std::sin(n * pi * 0.9);
  CHECK(s_nu_heat_kernel(*b, 0.05, 0.2, 0.9).value == doctest::Approx(ref).epsilon(1e-12));
  CoefficientVector psi1{Eigen::VectorXd::Unit(60, 0), Flavor::psi, b};
  auto out = synthesize(poisson_apply(0.4, psi1), reference_grid(0.5));
  auto in = synthesize(psi1, reference_grid(0.5));
  CHECK((out.values - std::exp(-0.4 * pi) * in.values).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("maximal function") {
  auto b = make_basis(0.0, 10);
  auto g = make_grid(8, 8, Grading::dyadic_both_ends);
  SampledBasis sb(b, g, Flavor::phi);
  CoefficientVector phi1{Eigen::VectorXd::Unit(10, 0), Flavor::phi, b};
  auto fam = weyl_fractional_family(FractionalOrder::of(0.0), phi1, TimeGrid::log_uniform(1.0, 1e-4, 30), sb);
  auto m = maximal_function(fam);
  CHECK((m.values - std::exp(-1e-4 * b->lambda(1)) * sb.matrix().col(0).cwiseAbs()).cwiseAbs().maxCoeff() < 1e-14);
  auto single = weyl_fractional_family(FractionalOrder::of(0.0), phi1, TimeGrid::from({0.3}), sb);
  CHECK((maximal_function(single).values - single.values.row(0).transpose().cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);
  FamilySamples flat{TimeGrid::from({2.0, 1.0}), g, Eigen::MatrixXd::Constant(2, g->size(), -3.0), "flat"};
  CHECK((maximal_function(flat).values.array() == 3.0).all());
}
