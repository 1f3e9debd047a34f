#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdlib>
#include <random>

#include "fbvar/errors.hpp"
#include "fbvar/hardy.hpp"
#include "fbvar/variation.hpp"

using namespace fbvar;

namespace {

std::string violation_of(Atom A) {
  auto v = atom_violation(A);
  return v ? *v : std::string();
}

double integral(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13);
}

}  // namespace

TEST_CASE("dyadic intervals and b-atoms") {
  auto [a, b] = dyadic_interval(Setting::delta_nu, 0);
  CHECK(a == 0.0);
  CHECK(b == 0.5);
  auto I3 = dyadic_interval(Setting::delta_nu, 3);
  CHECK(I3.first == 0.875);
  CHECK(I3.second == 0.9375);
  auto Im1 = dyadic_interval(Setting::s_nu, -1);
  CHECK(Im1.first == 0.25);
  CHECK(Im1.second == 0.5);
  CHECK_THROWS_AS(dyadic_interval(Setting::delta_nu, -1), DomainError);
  CHECK_THROWS_WITH_AS(dyadic_interval(Setting::s_nu, 0), doctest::Contains("j != 0"), DomainError);

  const Atom b0 = build_atom(AtomSpec::b_atom(Setting::delta_nu, 0), 0.0);
  REQUIRE(b0.pieces.size() == 1);
  CHECK(b0.pieces[0].height == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(b0(0.25) == doctest::Approx(8.0));
  CHECK(b0(0.75) == 0.0);
  const Atom s1 = build_atom(AtomSpec::b_atom(Setting::s_nu, -1), 0.3);
  CHECK(s1.pieces[0].height == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(s1.pieces[0].a == 0.25);

  auto g = make_grid(16, 6, Grading::uniform);
  const GridFunction f = make_atom(AtomSpec::b_atom(Setting::delta_nu, 2), 0.5, g);
  CHECK(integrate(f, MeasureTag::weighted(0.5)) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("a-atoms") {
  auto g = make_grid(10, 8, Grading::uniform);
  // antisymmetric Haar step on (0.4, 0.6)
  AtomSpec spec = AtomSpec::a_atom(Setting::delta_nu, 0.5, 0.1);
  spec.split = 0.5;
  const GridFunction f = make_atom(spec, 0.0, g);
  CHECK(std::abs(integrate(f, MeasureTag::weighted(0.0))) < 1e-12);
  CHECK(lp_norm(f, INFINITY, MeasureTag::weighted(0.0)) == doctest::Approx(1.0 / (0.5 * (0.36 - 0.16))));

  for (double nu : {-0.6, 0.0, 0.5, 2.0})
    for (Setting s : {Setting::delta_nu, Setting::s_nu}) {
      const Atom A = build_atom(AtomSpec::a_atom(s, 0.3, 0.2), nu);
      const MeasureTag m = setting_measure(s, nu);
      double mean = 0.0, l1 = 0.0;
      for (const auto& p : A.pieces) {
        mean += p.height * m.mass(p.a, p.b);
        l1 += std::abs(p.height) * m.mass(p.a, p.b);
      }
      CHECK(std::abs(mean) < 1e-14);
      // the default split balances the halves, so the atom has unit L^1 norm
      CHECK(l1 == doctest::Approx(1.0).epsilon(1e-12));
    }

  CHECK_THROWS_WITH_AS(build_atom(AtomSpec::a_atom(Setting::delta_nu, 0.1, 0.2), 0.0),
                       doctest::Contains("[0, 1]"), DomainError);
  CHECK_THROWS_WITH_AS(build_atom(AtomSpec::a_atom(Setting::delta_nu, 0.5, 0.0), 0.0),
                       doctest::Contains("radius"), DomainError);
  CHECK_THROWS_WITH_AS(build_atom(AtomSpec::a_atom(Setting::delta_nu, 0.5, 0.1, 100.0), 0.0),
                       doctest::Contains("sup norm"), DomainError);
  AtomSpec bad = AtomSpec::a_atom(Setting::s_nu, 0.5, 0.1);
  bad.split = 0.7;
  CHECK_THROWS_WITH_AS(build_atom(bad, 0.0), doctest::Contains("split"), DomainError);
  CHECK_THROWS_AS(build_atom(AtomSpec::a_atom(Setting::s_nu, 0.5, 0.1), -1.0), DomainError);
}

TEST_CASE("validity predicates reject perturbed atoms") {
  std::vector<AtomSpec> specs;
  for (Setting s : {Setting::delta_nu, Setting::s_nu}) {
    for (const auto& a : standard_atom_family(s, 3, 6, 4)) specs.push_back(a);
  }
  for (double nu : {-0.5, 0.0, 1.5})
    for (const auto& spec : specs) {
      const Atom A = build_atom(spec, nu);
      CHECK(violation_of(A).empty());

      Atom taller = A;
      for (auto& p : taller.pieces) p.height *= 1.01;
      const std::string v1 = violation_of(taller);
      CHECK_FALSE(v1.empty());

      Atom shifted = A;
      const double shift = 1e-3 / A.interval_measure();  // moves the mean by 1e-3
      for (auto& p : shifted.pieces) p.height += shift;
      const std::string v2 = violation_of(shifted);
      CHECK_FALSE(v2.empty());
      if (spec.kind == AtomKind::a) {
        CHECK(v1.find("sup norm") != std::string::npos);
        CHECK(v2.find("mean") != std::string::npos);
      } else {
        CHECK(v1.find("height") != std::string::npos);
      }

      Atom wide = A;
      wide.pieces.front().a -= 1e-3;
      CHECK_FALSE(violation_of(wide).empty());
    }

  auto g = make_grid(16, 4, Grading::uniform);
  AtomSpec spec = AtomSpec::a_atom(Setting::s_nu, 0.5, 0.25);
  const Atom A = build_atom(spec, 0.0);
  GridFunction f = GridFunction::sample(g, A);
  CHECK_FALSE(sampled_atom_violation(A, f).has_value());
  f.values.array() += 1e-3;
  CHECK(sampled_atom_violation(A, f).has_value());
}

TEST_CASE("H_0 on constants and indicators") {
  for (double nu : {-0.7, -0.5, 0.0, 0.5, 2.0}) {
    auto g = make_grid(24, 8, Grading::dyadic_both_ends);
    const GridFunction one = GridFunction::sample(g, [](double) { return 1.0; });
    const GridFunction h = hardy_h0(one, nu);
    CHECK((h.values.array() - 1.0 / (2 * nu + 2)).abs().maxCoeff() < 1e-12);

    const double a = g->breakpoints()[10];
    const GridFunction chi = GridFunction::sample(g, [a](double x) { return x <= a ? 1.0 : 0.0; });
    const GridFunction hc = hardy_h0(chi, nu);
    const double k = 2 * nu + 2;
    double err = 0.0;
    for (int i = 0; i < g->size(); ++i) {
      const double x = g->nodes()[i];
      err = std::max(err, std::abs(hc.values[i] - std::pow(std::min(x, a) / x, k) / k));
    }
    CHECK(err < 1e-12);
  }
  CHECK(hardy_h0(GridFunction::sample(make_grid(4, 4, Grading::uniform), [](double) { return 1.0; }), 0.0)
            .values[3] == doctest::Approx(0.5));
  CHECK_THROWS_AS(hardy_h0(GridFunction::sample(make_grid(4, 4, Grading::uniform), [](double) { return 1.0; }), -1.0),
                  DomainError);
}

TEST_CASE("H_0 bounded on L^2, positive and linear") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  for (double nu : {-0.5, 0.0, 0.5}) {
    auto g = make_grid(32, 8, Grading::dyadic_both_ends);
    const MeasureTag m = MeasureTag::weighted(nu);
    double C = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      // random steps on the cells plus a smooth part
      Eigen::VectorXd steps(g->cells());
      for (auto& s : steps) s = N(rng);
      const double c1 = N(rng), c2 = N(rng);
      GridFunction f{g, Eigen::VectorXd(g->size())};
      for (int i = 0; i < g->size(); ++i) {
        const double x = g->nodes()[i];
        f.values[i] = steps[i / g->points_per_cell()] + c1 * std::cos(7 * x) + c2 / std::sqrt(x);
      }
      C = std::max(C, lp_norm(hardy_h0(f, nu), 2.0, m) / lp_norm(f, 2.0, m));
    }
    MESSAGE("nu = " << nu << ": sup ||H_0 f||_2 / ||f||_2 over 50 trials = " << C);
    // classical weighted Hardy inequality: the operator norm is 1/(nu+1)
    CHECK(C <= 1.0 / (nu + 1.0));
    CHECK(C > 0.3 / (nu + 1.0));

    const GridFunction pos = GridFunction::sample(g, [](double x) { return std::abs(std::sin(9 * x)); });
    CHECK(hardy_h0(pos, nu).values.minCoeff() >= 0.0);
    CHECK(hardy_hinf(pos).values.minCoeff() >= 0.0);
    const GridFunction u = GridFunction::sample(g, [](double x) { return x * x - 0.3; });
    const GridFunction v = GridFunction::sample(g, [](double x) { return std::exp(x); });
    GridFunction w{g, 2.0 * u.values - 3.0 * v.values};
    CHECK((hardy_h0(w, nu).values - (2.0 * hardy_h0(u, nu).values - 3.0 * hardy_h0(v, nu).values))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((hardy_hinf(w).values - (2.0 * hardy_hinf(u).values - 3.0 * hardy_hinf(v).values)).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("H_inf") {
  auto g = make_grid(24, 8, Grading::dyadic_both_ends);
  const GridFunction one = GridFunction::sample(g, [](double) { return 1.0; });
  const GridFunction h = hardy_hinf(one);
  for (int i = 0; i < g->size(); ++i) CHECK(h.values[i] == doctest::Approx(std::log(1.0 / g->nodes()[i])).epsilon(1e-12));
  // a single cell with its middle node at 1/2
  auto mid = make_grid(1, 5, Grading::uniform);
  CHECK(hardy_hinf(GridFunction::sample(mid, [](double) { return 1.0; })).values[2] ==
        doctest::Approx(0.693147180559945).epsilon(1e-13));
  CHECK(hardy_hinf(GridFunction::sample(g, [](double) { return 0.0; })).values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duality of H_0 and H_inf") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (double nu : {0.0, 0.5, 1.0}) {
    auto g = make_grid(32, 10, Grading::dyadic_both_ends);
    const MeasureTag m = MeasureTag::weighted(nu);
    for (int trial = 0; trial < 5; ++trial) {
      double a[4], b[4];
      for (int k = 0; k < 4; ++k) {
        a[k] = U(rng);
        b[k] = U(rng);
      }
      auto ff = [&](double x) { return a[0] + a[1] * std::cos(3 * x) + a[2] * x * x + a[3] * std::sin(5 * x); };
      auto gg = [&](double x) { return b[0] * x + b[1] * std::cos(2 * x) + b[2] * std::exp(-x) + b[3] * x * x; };
      const GridFunction f = GridFunction::sample(g, ff), gf = GridFunction::sample(g, gg);
      const GridFunction h0f = hardy_h0(f, nu), hig = hardy_hinf(gf);
      const double lhs = integrate({g, h0f.values.cwiseProduct(gf.values)}, m);
      const double rhs = integrate({g, f.values.cwiseProduct(hig.values)}, m);
      // int_0^1 g(x) x^{-1} int_0^x y^{2nu+1} f(y) dy dx, nested adaptive quadrature
      const double oracle = integral(
          [&](double x) {
            if (x == 0.0) return 0.0;
            return gg(x) / x * integral([&](double y) { return std::pow(y, 2 * nu + 1) * ff(y); }, 0.0, x);
          },
          0.0, 1.0);
      CHECK(lhs == doctest::Approx(oracle).epsilon(1e-9));
      CHECK(rhs == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("constant family has zero variation") {
  auto g = make_grid(8, 4, Grading::uniform);
  FamilySamples s{TimeGrid::log_uniform(10.0, 1e-3, 50), g, Eigen::MatrixXd::Constant(50, g->size(), 2.5), "const"};
  const GridFunction v = variation_field(s, RhoVariationSpec{3.0, {}});
  CHECK(lp_norm(v, 1.0, MeasureTag::weighted(0.0)) == 0.0);
}

TEST_CASE("b-atoms of Delta_0") {
  std::vector<AtomSpec> bs;
  for (int j = 0; j <= 6; ++j) bs.push_back(AtomSpec::b_atom(Setting::delta_nu, j));
  const AtomExperimentReport r = atom_variation_experiment(bs, 3.0, 0.0);
  CHECK(r.unresolved == 0);
  REQUIRE(r.b_growth.size() == 7);
  for (const auto& [j, v] : r.b_growth) {
    MESSAGE("j = " << j << ": " << v);
    CHECK(std::isfinite(v));
  }
  // the norms saturate: increments shrink from j = 3 on
  for (int j = 3; j + 2 <= 6; ++j)
    CHECK(r.b_growth[j + 2].second - r.b_growth[j + 1].second < r.b_growth[j + 1].second - r.b_growth[j].second);
  CHECK((r.max_norm - r.min_norm) / r.max_norm <= 0.25);
  CHECK(r.pass);
}

TEST_CASE("a-atoms on the inflated dyadic intervals") {
  for (Setting s : {Setting::delta_nu, Setting::s_nu}) {
    std::vector<AtomSpec> as;
    for (int j = s == Setting::delta_nu ? 0 : -6; j <= 6; ++j) {
      if (s == Setting::s_nu && j == 0) continue;
      auto [a, b] = dyadic_interval(s, j);
      const double c = 0.5 * (a + b), R = 0.525 * (b - a);
      const double lo = std::max(0.0, c - R), hi = std::min(1.0, c + R);
      as.push_back(AtomSpec::a_atom(s, 0.5 * (lo + hi), 0.5 * (hi - lo)));
    }
    ExperimentGrid eg;
    eg.cells = 128;
    const AtomExperimentReport r = atom_variation_experiment(as, 3.0, 0.5, eg);
    MESSAGE(std::string(setting_name(s)) << ": max " << r.max_norm << " min " << r.min_norm);
    CHECK(r.unresolved == 0);
    CHECK(r.pass);
  }
}

TEST_CASE("atom experiment: determinism, refinement and resolution") {
  const auto fam = standard_atom_family(Setting::s_nu, 9, 4, 3);
  CHECK(fam.size() == 10);
  const auto fam2 = standard_atom_family(Setting::s_nu, 9, 4, 3);
  for (size_t i = 0; i < fam.size(); ++i) CHECK(fam[i].label() == fam2[i].label());

  ExperimentGrid eg;
  eg.cells = 64;
  eg.time_points = 100;
  const auto r1 = atom_variation_experiment(fam, 3.0, 0.5, eg);
  const auto r2 = atom_variation_experiment(fam2, 3.0, 0.5, eg);
  for (size_t i = 0; i < fam.size(); ++i) CHECK(r1.atoms[i].l1_norm == r2.atoms[i].l1_norm);

  // one worker gives the same bits
  const char* old = std::getenv("FBVAR_THREADS");
  const std::string saved = old ? old : "";
  setenv("FBVAR_THREADS", "1", 1);
  const auto r3 = atom_variation_experiment(fam, 3.0, 0.5, eg);
  if (old)
    setenv("FBVAR_THREADS", saved.c_str(), 1);
  else
    unsetenv("FBVAR_THREADS");
  for (size_t i = 0; i < fam.size(); ++i) CHECK(r1.atoms[i].l1_norm == r3.atoms[i].l1_norm);

  // more modes than the tail certificate asks for change nothing visible
  ExperimentGrid more = eg;
  more.modes = r1.modes + 4000;
  const auto r4 = atom_variation_experiment(fam, 3.0, 0.5, more);
  for (size_t i = 0; i < fam.size(); ++i) CHECK(std::abs(r4.atoms[i].l1_norm - r1.atoms[i].l1_norm) < 1e-7);

  // finer time grid
  ExperimentGrid fine = eg;
  fine.time_points = 200;
  const auto r5 = atom_variation_experiment(fam, 3.0, 0.5, fine);
  for (size_t i = 0; i < fam.size(); ++i)
    CHECK(std::abs(r5.atoms[i].l1_norm - r1.atoms[i].l1_norm) < 0.01 * r1.atoms[i].l1_norm);

  // too few modes for t_min: flagged per atom
  ExperimentGrid coarse = eg;
  coarse.modes = 300;
  const auto r6 = atom_variation_experiment(fam, 3.0, 0.5, coarse);
  CHECK(r6.unresolved > 0);
  CHECK_FALSE(r6.pass);
  for (const auto& a : r6.atoms)
    if (!a.resolved) CHECK(a.error.find("t_min") != std::string::npos);

  CHECK_THROWS_AS(atom_variation_experiment(fam, 2.0, 0.5, eg), DomainError);
  CHECK_THROWS_AS(atom_variation_experiment(fam, 3.0, -0.6, eg), DomainError);
}

TEST_CASE("H^1 quantities") {
  ExperimentGrid eg;
  eg.cells = 64;
  eg.time_points = 100;
  for (Setting s : {Setting::delta_nu, Setting::s_nu}) {
    auto fam = standard_h1_family(s, 5, 6);
    fam.insert(fam.begin(), AtomicSum{{}, "zero"});
    const H1Report r = h1_equivalence_experiment(s, fam, 3.0, 0.0, eg);
    REQUIRE(r.rows.size() == fam.size());
    CHECK(r.rows[0].q1 == 0.0);
    CHECK(r.rows[0].q2 == 0.0);
    for (size_t i = 1; i < r.rows.size(); ++i) {
      const H1Row& row = r.rows[i];
      CHECK(std::isfinite(row.q1));
      CHECK(std::isfinite(row.q2));
      CHECK(row.q1 > 0.0);
      CHECK(row.lower_control);
      // |P_t f| <= V_rho + |P_1 f| pointwise, so ||P_* f|| <= ||V f|| + ||P_1 f||
      CHECK(row.maximal_norm <= (row.variation_norm + row.p1_norm) * (1 + 1e-12));
      // the maximal function dominates the t -> 0 limit |f|
      CHECK(row.maximal_norm >= row.f_norm * (1 - 1e-12));
    }
    CHECK(r.rows[1].f_norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.lower_control);
    CHECK(r.k_envelope >= 1.0);
    CHECK(r.k_envelope >= r.k_half);
    MESSAGE(std::string(setting_name(s)) << ": K = " << r.k_envelope << ", first half " << r.k_half);
  }
  CHECK_THROWS_AS(h1_equivalence_experiment(Setting::s_nu, standard_h1_family(Setting::s_nu, 1, 1), 3.0, -0.7, eg),
                  DomainError);
  CHECK_THROWS_AS(h1_equivalence_experiment(Setting::delta_nu, standard_h1_family(Setting::s_nu, 1, 1), 3.0, 0.0, eg),
                  DomainError);
}

TEST_CASE("indicator probes") {
  ExperimentGrid eg;
  eg.cells = 64;
  eg.time_points = 80;
  const double nu = -0.75, p = 1.0 / (nu + 1.5);
  const LpProbeReport r = lp_ratio_probe(Setting::s_nu, nu, 3.0, p, eg, 3, 4);
  CHECK(r.rows.size() == 20);
  for (const auto& row : r.rows) {
    CHECK(std::isfinite(row.strong_ratio));
    CHECK(row.weak_ratio > 0.0);
    CHECK(row.weak_ratio <= row.strong_ratio * (1 + 1e-12));
  }
  CHECK(r.weak_sup <= r.strong_sup);
  CHECK(r.tail_bound <= eg.tail_tolerance);
  CHECK_THROWS_AS(lp_ratio_probe(Setting::delta_nu, 0.0, 3.0, 0.5, eg), DomainError);
}
