#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/bessel.hpp>

#include "fbvar/errors.hpp"
#include "fbvar/spectral.hpp"

using namespace fbvar;
using std::numbers::pi;

TEST_CASE("half-integer eigenfunctions") {
  auto b = make_basis(0.5, 10);
  for (int n = 1; n <= 10; ++n)
    for (double x : {0.01, 0.3, 0.77, 1.0}) {
      CHECK(eigenfunction_psi(*b, n, x) == doctest::Approx(std::sqrt(2.0) * std::sin(n * pi * x)).scale(1.0).epsilon(1e-13));
      CHECK(eigenfunction_phi(*b, n, x) == doctest::Approx(std::sqrt(2.0) * std::sin(n * pi * x) / x).scale(1.0).epsilon(1e-12));
    }
  CHECK(eigenfunction_phi(*b, 3, 0.0) == doctest::Approx(std::sqrt(2.0) * 3 * pi));
  CHECK_THROWS_AS(eigenfunction_phi(*b, 11, 0.5), std::out_of_range);
  CHECK_THROWS_AS(eigenfunction_phi(*b, 0, 0.5), std::out_of_range);
  CHECK_THROWS_AS(eigenfunction_phi(*b, 1, 1.5), DomainError);
}

TEST_CASE("eigenfunctions match a boost-built oracle") {
  for (double nu : {-0.9, -0.3, 0.0, 1.0, 2.5}) {
    auto b = make_basis(nu, 40);
    for (int n : {1, 2, 7, 40}) {
      const double lam = boost::math::cyl_bessel_j_zero(std::max(nu, 0.0), 1) > 0 ? b->lambda(n) : 0.0;
      CHECK(std::abs(boost::math::cyl_bessel_j(nu, lam)) < 1e-12);
      const double d = std::sqrt(2.0) / std::abs(std::sqrt(lam) * boost::math::cyl_bessel_j(nu + 1, lam));
      for (double x : {0.003, 0.25, 0.5, 0.999}) {
        const double j = boost::math::cyl_bessel_j(nu, lam * x);
        const double want_phi = d * std::sqrt(lam) * j * std::pow(x, -nu);
        const double want_psi = d * std::sqrt(lam * x) * j;
        const double env = d * std::pow(lam, nu + 0.5) * (1 + std::pow(lam * x, -nu - 0.5));
        CHECK(std::abs(b->phi(n, x) - want_phi) < 1e-12 * env);
        CHECK(std::abs(b->psi(n, x) - want_psi) < 1e-12 * (1 + std::abs(want_psi)) * d);
      }
    }
  }
}

TEST_CASE("phi_n solves the Bessel eigenproblem") {
  for (double nu : {-0.6, 0.0, 1.3}) {
    auto b = make_basis(nu, 5);
    for (int n = 1; n <= 5; ++n)
      for (double x : {0.2, 0.5, 0.8}) {
        const double h = 1e-3;
        const double f0 = b->phi(n, x), fp = b->phi(n, x + h), fm = b->phi(n, x - h);
        const double d2 = (fp - 2 * f0 + fm) / (h * h), d1 = (fp - fm) / (2 * h);
        const double lhs = -d2 - (2 * nu + 1) / x * d1;
        CHECK(lhs == doctest::Approx(b->lambda(n) * b->lambda(n) * f0).scale(std::pow(b->lambda(n), 2.5)).epsilon(1e-4));
      }
  }
}

TEST_CASE("orthonormality on the reference grid") {
  for (double nu : {-0.9, -0.5, 0.0, 0.5, 1.0, 2.5}) {
    auto b = make_basis(nu, 20);
    auto g = reference_grid(nu);
    for (Flavor f : {Flavor::phi, Flavor::psi}) {
      if (f == Flavor::psi && nu < -0.5) continue;  // Psi blows up at 0 there; checked below
      SampledBasis sb(b, g, f);
      const double err = (gram_matrix(sb) - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff();
      MESSAGE("nu=" << nu << (f == Flavor::phi ? " phi" : " psi") << " gram error " << err);
      CHECK(err < 1e-8);
    }
  }
}

TEST_CASE("psi orthonormality for nu < -1/2") {
  const double nu = -0.7;
  auto b = make_basis(nu, 20);
  SampledBasis sb(b, reference_grid(nu), Flavor::psi);
  CHECK((gram_matrix(sb) - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("analysis and synthesis invert each other on the span") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (double nu : {-0.5, 0.0, 1.0}) {
    auto b = make_basis(nu, 15);
    auto g = reference_grid(nu);
    for (Flavor fl : {Flavor::phi, Flavor::psi}) {
      CoefficientVector c{Eigen::VectorXd(15), fl, b};
      for (int i = 0; i < 15; ++i) c.values[i] = nd(rng);
      GridFunction f = synthesize(c, g);
      CoefficientVector back = analyze(f, b, fl, b->natural_measure(fl));
      CHECK((back.values - c.values).cwiseAbs().maxCoeff() < 1e-10);
      // Parseval
      CHECK(c.values.squaredNorm() == doctest::Approx(std::pow(lp_norm(f, 2.0, b->natural_measure(fl)), 2)).epsilon(1e-10));
      CHECK(synthesize_at(c, 0.37) == doctest::Approx((b->sample(fl, Eigen::VectorXd::Constant(1, 0.37)) * c.values)(0)).epsilon(1e-12));
    }
    GridFunction f = GridFunction::sample(g, [](double x) { return x; });
    CHECK_THROWS_AS(analyze(f, b, Flavor::phi, MeasureTag::lebesgue()), DomainError);
    CHECK_THROWS_AS(analyze(f, b, Flavor::psi, MeasureTag::weighted(nu)), DomainError);
    CHECK_THROWS_AS(analyze(f, b, Flavor::phi, MeasureTag::weighted(nu + 0.1)), DomainError);
  }
}

TEST_CASE("diagonal operators") {
  auto b = make_basis(0.0, 8);
  CoefficientVector c{Eigen::VectorXd::Ones(8), Flavor::phi, b};
  auto lap = apply_operator_diagonal(c, [](int, double lam) { return lam * lam; });
  for (int n = 1; n <= 8; ++n) CHECK(lap.values[n - 1] == doctest::Approx(b->lambda(n) * b->lambda(n)));
  CHECK_THROWS_AS(apply_operator_diagonal(c, Eigen::VectorXd::Ones(3)), DomainError);
}

TEST_CASE("exact step coefficients agree with aligned quadrature") {
  for (double nu : {-0.7, 0.0, 0.5, 1.5}) {
    auto b = make_basis(nu, 30);
    std::vector<StepPiece> pieces{{0.0, 0.125, 2.0}, {0.25, 0.375, -1.0}, {0.5, 0.96875, 0.5}};
    auto grid = make_graded_grid({32, 16, 200, 6});
    for (Flavor fl : {Flavor::phi, Flavor::psi}) {
      auto f = GridFunction::sample(grid, [&](double x) {
        double v = 0;
        for (auto& p : pieces)
          if (x > p.a && x <= p.b) v += p.height;
        return v;
      });
      auto exact = step_function_coefficients(b, fl, pieces);
      auto quad = analyze(f, b, fl, b->natural_measure(fl));
      const double err = (exact.values - quad.values).cwiseAbs().maxCoeff();
      MESSAGE("nu=" << nu << " flavor " << int(fl) << " step coefficient error " << err);
      CHECK(err < 1e-9);
    }
  }
}
