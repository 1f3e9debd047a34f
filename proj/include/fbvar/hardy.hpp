#pragma once

// Atoms of the Hardy spaces attached to Delta_nu and S_nu, the Hardy
// averaging operators H_0 and H_inf, and numerical experiments around them:
// variation norms of atoms, the two H^1 quantities Q1 / Q2, and L^p probes
// of the variation operator on indicator functions.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbvar/grid.hpp"
#include "fbvar/spectral.hpp"

namespace fbvar {

inline constexpr const char* kHardyVersion = "1.0.0";

// delta_nu: measure m_nu, eigenfunctions phi, semigroup P_t.
// s_nu: Lebesgue measure, eigenfunctions Psi, semigroup calP_t.
enum class Setting { delta_nu, s_nu };
enum class AtomKind { a, b };

const char* setting_name(Setting s);
MeasureTag setting_measure(Setting s, double nu);
Flavor setting_flavor(Setting s);

// I_j = (1 - 2^-j, 1 - 2^-j-1] for j >= 0; in the s_nu setting also
// I_j = (2^(j-1), 2^j] for j <= -1. j = 0 is not an s_nu index.
std::pair<double, double> dyadic_interval(Setting s, int j);

struct AtomSpec {
  Setting setting = Setting::delta_nu;
  AtomKind kind = AtomKind::b;
  int j = 0;                                     // b-atoms
  double center = 0.5, radius = 0.25;            // a-atoms: I = (center - radius, center + radius)
  double height = 0.0;                           // 0: the largest allowed, 1/measure(I)
  std::optional<double> split;                   // a-atoms: Haar split point, default the measure median

  static AtomSpec b_atom(Setting s, int j);
  static AtomSpec a_atom(Setting s, double center, double radius, double height = 0.0);
  std::string label() const;
};

// A built atom is a step function, so every clause checks in closed form.
struct Atom {
  AtomSpec spec;
  double nu = 0.0;
  double lo = 0.0, hi = 0.0;  // the interval I
  MeasureTag measure;
  std::vector<StepPiece> pieces;

  double operator()(double x) const;
  double interval_measure() const { return measure.mass(lo, hi); }
};

// Builds the atom or throws DomainError naming the clause that fails.
// a-atoms are two-level steps alpha chi_L - beta chi_R with
// alpha m(L) = beta m(R); the lighter half carries the height. With the
// default split both halves have the same measure and ||a||_1 = 1.
Atom build_atom(const AtomSpec& spec, double nu);

// First violated clause, or nothing for a valid atom. Mean zero is checked
// as |int a| <= 1e-10 int |a|, the height with relative slack 1e-12.
std::optional<std::string> atom_violation(const Atom& a);

// Samples the atom and re-validates on the samples: support, sup bound and,
// when the grid has the atom's breakpoints, the quadrature mean.
GridFunction make_atom(const AtomSpec& spec, double nu, GridPtr grid);
std::optional<std::string> sampled_atom_violation(const Atom& a, const GridFunction& f);

// H_0 f(x) = x^{-2nu-2} int_0^x y^{2nu+1} f(y) dy
// H_inf f(x) = int_x^1 f(y) / y dy
// Both integrate the cell-wise interpolant of the samples, so step functions
// with steps on grid breakpoints come out exact up to rounding.
GridFunction hardy_h0(const GridFunction& f, double nu);
GridFunction hardy_hinf(const GridFunction& f);

// Space and time discretisation shared by the experiments. The grid is
// `cells` uniform cells with `end_levels` dyadic levels at each end, plus
// every step of the input functions as a breakpoint.
struct ExperimentGrid {
  int cells = 256;
  int points = 4;
  int end_levels = 8;
  double t_max = 10.0;
  double t_min = 1e-3;
  int time_points = 200;  // t = 1 is always added
  int modes = 0;          // 0: smallest count meeting tail_tolerance
  double tail_tolerance = 1e-9;
};

struct AtomResult {
  AtomSpec spec;
  std::string label;
  double scale = 0.0;    // measure of the atom's interval
  double l1_norm = 0.0;  // of the rho-variation field
  double tail_bound = 0.0;
  bool resolved = true;
  std::string error;
};

struct AtomExperimentReport {
  Setting setting = Setting::delta_nu;
  double nu = 0.0, rho = 0.0;
  int modes = 0, nodes = 0, times = 0;
  std::vector<AtomResult> atoms;
  double max_norm = 0.0, min_norm = 0.0, ratio = 0.0;
  double envelope = 4.0;
  int unresolved = 0;
  bool pass = false;
  // b-atoms by index and a-atoms by radius: largest norm per scale
  std::vector<std::pair<int, double>> b_growth;
  std::vector<std::pair<double, double>> a_growth;
};

// b-atoms for j in 0..j_max (s_nu: -j_max..-1 and 1..j_max) and `a_count`
// a-atoms with radii 2^-2..2^-8 and centres on the 2^-8 lattice, drawn from
// a seeded generator.
std::vector<AtomSpec> standard_atom_family(Setting s, std::uint64_t seed, int a_count = 20, int j_max = 6);

// ||V_rho(P_t a)||_{L^1} for each atom, with P_t the Poisson semigroup of the
// setting sampled on the experiment's time grid plus the t -> 0 limit a(x).
// Atoms run in parallel.
AtomExperimentReport atom_variation_experiment(const std::vector<AtomSpec>& atoms, double rho, double nu,
                                               const ExperimentGrid& grid = {});

// f = sum_i c_i a_i
struct AtomicSum {
  std::vector<std::pair<double, AtomSpec>> terms;
  std::string label;
};

struct H1Row {
  std::string label;
  double f_norm = 0.0, maximal_norm = 0.0, variation_norm = 0.0, p1_norm = 0.0;
  double q1 = 0.0, q2 = 0.0, ratio = 0.0;  // ratio = q1 / q2, 0 when f = 0
  bool lower_control = true;               // q1 <= q2 + 2 ||P_1 f||_1
  double tail_bound = 0.0;
};

struct H1Report {
  Setting setting = Setting::delta_nu;
  double nu = 0.0, rho = 0.0;
  int modes = 0;
  std::vector<H1Row> rows;
  // K = max(max ratio, 1 / min ratio) over nonzero rows; k_half uses the
  // first half of the family only
  double k_envelope = 0.0, k_half = 0.0;
  bool lower_control = true;
};

// Single atoms, then random combinations of two to four atoms.
std::vector<AtomicSum> standard_h1_family(Setting s, std::uint64_t seed, int combos = 10);

// Q1 = ||f||_1 + ||P_* f||_1 and Q2 = ||f||_1 + ||V_rho(P_t f)||_1.
H1Report h1_equivalence_experiment(Setting s, const std::vector<AtomicSum>& family, double rho, double nu,
                                   const ExperimentGrid& grid = {});

// Indicator probes of V_rho(P_t): ||V chi_E||_p / m(E)^{1/p} and the weak
// version ||V chi_E||_{p,inf} / m(E)^{1/p}, where sup over E of the latter
// is the restricted weak type (p, p) constant.
struct ProbeRow {
  double a = 0.0, b = 0.0, measure = 0.0;
  double strong_ratio = 0.0, weak_ratio = 0.0;
};

struct LpProbeReport {
  Setting setting = Setting::delta_nu;
  double nu = 0.0, rho = 0.0, p = 0.0;
  int modes = 0;
  std::vector<ProbeRow> rows;
  double strong_sup = 0.0, weak_sup = 0.0;
  double tail_bound = 0.0;
};

// E runs over (0, 2^-k], (1 - 2^-k, 1] for k = 1..8 and `random_sets`
// random lattice intervals.
LpProbeReport lp_ratio_probe(Setting s, double nu, double rho, double p, const ExperimentGrid& grid = {},
                             std::uint64_t seed = 1, int random_sets = 8);

}  // namespace fbvar
