#include "fbvar/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "fbvar/bessel.hpp"
#include "fbvar/errors.hpp"
#include "fbvar/parallel.hpp"
#include "fbvar/quadrature.hpp"
#include "fbvar/semigroups.hpp"
#include "fbvar/variation.hpp"

namespace fbvar {

using std::numbers::pi;

const char* setting_name(Setting s) { return s == Setting::delta_nu ? "delta_nu" : "s_nu"; }

MeasureTag setting_measure(Setting s, double nu) {
  return s == Setting::delta_nu ? MeasureTag::weighted(nu) : MeasureTag::lebesgue();
}

Flavor setting_flavor(Setting s) { return s == Setting::delta_nu ? Flavor::phi : Flavor::psi; }

std::pair<double, double> dyadic_interval(Setting s, int j) {
  if (std::abs(j) > 60) throw DomainError("dyadic index out of range |j| <= 60");
  if (j >= 0) {
    if (s == Setting::s_nu && j == 0) throw DomainError("s_nu b-atoms need j != 0");
    return {1.0 - std::ldexp(1.0, -j), 1.0 - std::ldexp(1.0, -j - 1)};
  }
  if (s == Setting::delta_nu) throw DomainError("delta_nu b-atoms need j >= 0");
  return {std::ldexp(1.0, j - 1), std::ldexp(1.0, j)};
}

AtomSpec AtomSpec::b_atom(Setting s, int j) {
  AtomSpec a;
  a.setting = s;
  a.kind = AtomKind::b;
  a.j = j;
  return a;
}

AtomSpec AtomSpec::a_atom(Setting s, double center, double radius, double height) {
  AtomSpec a;
  a.setting = s;
  a.kind = AtomKind::a;
  a.center = center;
  a.radius = radius;
  a.height = height;
  return a;
}

std::string AtomSpec::label() const {
  std::ostringstream os;
  if (kind == AtomKind::b)
    os << "b j=" << j;
  else
    os << "a c=" << center << " r=" << radius;
  return os.str();
}

double Atom::operator()(double x) const {
  double v = 0.0;
  for (const auto& p : pieces)
    if (x > p.a && x <= p.b) v += p.height;
  return v;
}

std::optional<std::string> atom_violation(const Atom& A) {
  const double m = A.interval_measure();
  if (!(m > 0.0)) return "interval has zero measure";
  const double cap = 1.0 / m;
  const double eps = 1e-15;
  double mean = 0.0, mass = 0.0, sup = 0.0;
  for (const auto& p : A.pieces) {
    if (p.a < A.lo - eps || p.b > A.hi + eps) return "support leaves the interval I";
    const double w = A.measure.mass(p.a, p.b);
    mean += p.height * w;
    mass += std::abs(p.height) * w;
    sup = std::max(sup, std::abs(p.height));
  }
  if (A.spec.kind == AtomKind::a) {
    if (std::abs(mean) > 1e-10 * mass) return "mean is not zero";
  } else {
    if (A.pieces.size() != 1 || A.pieces[0].a != A.lo || A.pieces[0].b != A.hi)
      return "b-atom must be the indicator of I_j";
    if (std::abs(A.pieces[0].height - cap) > 1e-12 * cap) return "b-atom height must equal 1/measure(I_j)";
  }
  if (sup > cap * (1.0 + 1e-12)) return "sup norm exceeds 1/measure(I)";
  return std::nullopt;
}

Atom build_atom(const AtomSpec& spec, double nu) {
  if (!(nu > -1.0)) throw DomainError("order must satisfy nu > -1");
  Atom A;
  A.spec = spec;
  A.nu = nu;
  A.measure = setting_measure(spec.setting, nu);
  if (spec.kind == AtomKind::b) {
    std::tie(A.lo, A.hi) = dyadic_interval(spec.setting, spec.j);
    const double h = 1.0 / A.measure.mass(A.lo, A.hi);
    if (spec.height != 0.0 && std::abs(spec.height - h) > 1e-12 * h)
      throw DomainError("b-atom height must equal 1/measure(I_j)");
    A.pieces = {{A.lo, A.hi, h}};
  } else {
    if (!(spec.radius > 0.0)) throw DomainError("a-atom radius must be positive");
    A.lo = spec.center - spec.radius;
    A.hi = spec.center + spec.radius;
    if (A.lo < 0.0 || A.hi > 1.0) throw DomainError("a-atom interval must lie in [0, 1]");
    const double cap = 1.0 / A.measure.mass(A.lo, A.hi);
    if (spec.height < 0.0) throw DomainError("a-atom height must be >= 0");
    if (spec.height > cap * (1.0 + 1e-12)) throw DomainError("sup norm exceeds 1/measure(I)");
    const double H = spec.height == 0.0 ? cap : spec.height;
    // default split at the measure median, so both halves carry the height
    const double k = 2.0 * nu + 2.0;
    const double median = spec.setting == Setting::s_nu
                              ? spec.center
                              : std::pow(0.5 * (std::pow(A.lo, k) + std::pow(A.hi, k)), 1.0 / k);
    const double s = spec.split.value_or(median);
    if (!(s > A.lo && s < A.hi)) throw DomainError("a-atom split point must lie inside I");
    const double mL = A.measure.mass(A.lo, s), mR = A.measure.mass(s, A.hi);
    double alpha = H, beta = H;
    if (mL <= mR)
      beta = H * mL / mR;
    else
      alpha = H * mR / mL;
    A.pieces = {{A.lo, s, alpha}, {s, A.hi, -beta}};
  }
  if (auto v = atom_violation(A)) throw DomainError("invalid atom: " + *v);
  return A;
}

std::optional<std::string> sampled_atom_violation(const Atom& A, const GridFunction& f) {
  const auto& x = f.grid->nodes();
  const double cap = 1.0 / A.interval_measure();
  for (int i = 0; i < x.size(); ++i) {
    if ((x[i] <= A.lo || x[i] > A.hi) && f.values[i] != 0.0) return "samples outside I are nonzero";
    if (std::abs(f.values[i]) > cap * (1.0 + 1e-12)) return "sampled sup norm exceeds 1/measure(I)";
  }
  // the quadrature is exact only when every step sits on a breakpoint
  for (const auto& p : A.pieces)
    if (!f.grid->has_breakpoint(p.a) || !f.grid->has_breakpoint(p.b)) return std::nullopt;
  const Eigen::VectorXd w = f.grid->measure_weights(A.measure);
  const double mean = w.dot(f.values), mass = w.dot(f.values.cwiseAbs());
  if (A.spec.kind == AtomKind::a && std::abs(mean) > 1e-10 * mass) return "sampled mean is not zero";
  if (A.spec.kind == AtomKind::b && std::abs(mean - 1.0) > 1e-10) return "sampled b-atom does not integrate to 1";
  return std::nullopt;
}

GridFunction make_atom(const AtomSpec& spec, double nu, GridPtr grid) {
  const Atom A = build_atom(spec, nu);
  GridFunction f = GridFunction::sample(grid, A);
  if (auto v = sampled_atom_violation(A, f)) throw DomainError("invalid sampled atom: " + *v);
  return f;
}

// ---------------------------------------------------------------------------
// Hardy operators

namespace {

// Barycentric interpolation through the Gauss nodes of one cell.
class CellInterpolant {
 public:
  explicit CellInterpolant(int ppc) : g_(gauss_legendre(ppc)), w_(ppc) {
    for (int k = 0; k < ppc; ++k) {
      double p = 1.0;
      for (int m = 0; m < ppc; ++m)
        if (m != k) p *= g_.nodes[k] - g_.nodes[m];
      w_[k] = 1.0 / p;
    }
  }
  // f holds the ppc samples of cell [a, b]
  double operator()(const double* f, double a, double b, double y) const {
    const double t = (2.0 * y - a - b) / (b - a);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < w_.size(); ++k) {
      const double d = t - g_.nodes[k];
      if (d == 0.0) return f[k];
      num += w_[k] / d * f[k];
      den += w_[k] / d;
    }
    return num / den;
  }

 private:
  const GaussRule& g_;
  Eigen::VectorXd w_;
};

}  // namespace

GridFunction hardy_h0(const GridFunction& f, double nu) {
  if (!(nu > -1.0)) throw DomainError("order must satisfy nu > -1");
  const RadialGrid& g = *f.grid;
  const int ppc = g.points_per_cell(), q = ppc + 16;
  const CellInterpolant interp(ppc);
  const double k = 2.0 * nu + 2.0;
  const auto& br = g.breakpoints();
  // int_a^x y^{2nu+1} f(y) dy on cell c
  auto partial = [&](int c, double x) {
    const double a = br[c], b = br[c + 1];
    const double* v = f.values.data() + c * ppc;
    if (a == 0.0) {
      // y = x s^{1/k} takes the weight out
      const double pw = 1.0 / k;
      return std::pow(x, k) / k *
             gauss_integrate([&](double s) { return interp(v, a, b, x * std::pow(s, pw)); }, 0.0, 1.0, q);
    }
    return gauss_integrate([&](double y) { return std::pow(y, k - 1.0) * interp(v, a, b, y); }, a, x, q);
  };
  GridFunction out{f.grid, Eigen::VectorXd(g.size())};
  double prefix = 0.0;
  for (int c = 0; c < g.cells(); ++c) {
    for (int i = 0; i < ppc; ++i) {
      const double x = g.nodes()[c * ppc + i];
      out.values[c * ppc + i] = (prefix + partial(c, x)) * std::pow(x, -k);
    }
    prefix += partial(c, br[c + 1]);
  }
  return out;
}

GridFunction hardy_hinf(const GridFunction& f) {
  const RadialGrid& g = *f.grid;
  const int ppc = g.points_per_cell(), q = ppc + 16;
  const CellInterpolant interp(ppc);
  const auto& br = g.breakpoints();
  // int_x^b f(y) dy / y on cell c, in u = ln y
  auto partial = [&](int c, double x) {
    const double a = br[c], b = br[c + 1];
    const double* v = f.values.data() + c * ppc;
    return gauss_integrate([&](double u) { return interp(v, a, b, std::exp(u)); }, std::log(x), std::log(b), q);
  };
  GridFunction out{f.grid, Eigen::VectorXd(g.size())};
  double suffix = 0.0;
  for (int c = g.cells() - 1; c >= 0; --c) {
    for (int i = 0; i < ppc; ++i) {
      const double x = g.nodes()[c * ppc + i];
      out.values[c * ppc + i] = suffix + partial(c, x);
    }
    if (c > 0) suffix += partial(c, br[c]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

// sup_{z > 0} sqrt(z) |J_mu(z)|, mu > 0, padded like the eigenfunction bound
double sqrt_bessel_sup_all(double mu) {
  static std::mutex mu_lock;
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> lock(mu_lock);
  if (auto it = cache.find(mu); it != cache.end()) return it->second;
  double s = std::sqrt(2.0 / pi) * (1.0 + std::abs(4 * mu * mu - 1) / 1600.0);
  for (double z = 0.01; z <= 200.0; z += 0.01) s = std::max(s, std::sqrt(z) * std::abs(bessel_j(mu, z)));
  return cache[mu] = 1.05 * s;
}

// sup_Z |int_0^Z sqrt(z) J_nu(z) dz|; past Z = 200 the integral oscillates
// about its limit with amplitude just over sqrt(2/pi)
double sqrt_bessel_integral_sup(double nu) {
  static std::mutex mu_lock;
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> lock(mu_lock);
  if (auto it = cache.find(nu); it != cache.end()) return it->second;
  const SqrtBesselIntegral G(nu);
  double s = 0.0;
  for (double Z = 0.05; Z <= 200.0; Z += 0.05) s = std::max(s, std::abs(G(Z)));
  return cache[nu] = 1.05 * s + 0.05;
}

// |c_n| <= K / lambda_n for the coefficients of a step function
double coefficient_constant(Setting s, double nu, const std::vector<StepPiece>& pieces) {
  const double d = 1.1 * std::sqrt(pi);
  double K = 0.0;
  if (s == Setting::delta_nu) {
    // |x^{nu+1} J_{nu+1}(lambda x)| <= S x^{nu+1/2} lambda^{-1/2}
    const double S = sqrt_bessel_sup_all(nu + 1.0);
    auto e = [nu](double x) { return x == 0.0 ? 0.0 : std::pow(x, nu + 0.5); };
    for (const auto& p : pieces) K += std::abs(p.height) * (e(p.a) + e(p.b));
    return d * S * K;
  }
  const double Gs = sqrt_bessel_integral_sup(nu);
  for (const auto& p : pieces) K += std::abs(p.height);
  return d * 2.0 * Gs * K;
}

void check_grid(const ExperimentGrid& g) {
  if (g.cells < 1) throw DomainError("experiment grid needs at least one cell");
  if (g.points < 1 || g.points > 64) throw DomainError("points per cell must be in [1, 64]");
  if (g.end_levels < 0 || g.end_levels > 60) throw DomainError("end levels must be in [0, 60]");
  if (!(g.t_min > 0.0 && g.t_max > g.t_min)) throw DomainError("need 0 < t_min < t_max");
  if (g.time_points < 2) throw DomainError("need at least two time points");
  if (g.modes < 0) throw DomainError("mode count must be >= 0");
  if (!(g.tail_tolerance > 0.0)) throw DomainError("tail tolerance must be positive");
}

void check_order(Setting s, double nu, bool h1) {
  if (!(nu > -1.0)) throw DomainError("order must satisfy nu > -1");
  if (h1 && s == Setting::s_nu && !(nu > -0.5)) throw DomainError("s_nu H^1 experiments need nu > -1/2");
}

void check_rho(double rho) {
  if (!(rho > 2.0) || !std::isfinite(rho)) throw DomainError("rho must satisfy 2 < rho < inf");
}

struct Workspace {
  Setting setting;
  double nu;
  Flavor flavor;
  MeasureTag measure;
  GridPtr grid;
  BasisPtr basis;
  std::unique_ptr<SampledBasis> sb;
  TimeGrid times;
  Eigen::MatrixXd M;  // time x mode multipliers e^{-t lambda}
  Eigen::VectorXd w;  // quadrature weights of the setting's measure
  int one = -1;       // row of t = 1
  double tail_unit = 0.0;

  // P_t of the step function with coefficients c, plus the limit row
  Eigen::MatrixXd family(const Eigen::VectorXd& c, const Eigen::VectorXd& limit) const {
    Eigen::MatrixXd F(M.rows() + 1, grid->size());
    F.topRows(M.rows()).noalias() = (M * c.asDiagonal()) * sb->matrix().transpose();
    F.row(M.rows()) = limit.transpose();
    return F;
  }
};

// sum_{n > N} e^{-t lambda_n} lambda_n^{-1} sup_x B(lambda_n, x) for every N,
// lambda_n from McMahon; index N gives the tail past N modes
std::vector<double> tail_units(double nu, Flavor flavor, double t, double x_lo, double x_hi) {
  std::vector<double> terms;
  double prev = INFINITY, sum = 0.0;
  for (long n = 1; n < 5000000L; ++n) {
    const double beta = (n + nu / 2.0 - 0.25) * pi;
    const double lam = beta - (4 * nu * nu - 1) / (8 * beta);
    double B = std::max(eigenfunction_bound(nu, flavor, lam, x_lo), eigenfunction_bound(nu, flavor, lam, x_hi));
    const double xc = 1.0 / lam;
    if (xc > x_lo && xc < x_hi)
      B = std::max({B, eigenfunction_bound(nu, flavor, lam, xc * (1 - 1e-12)),
                    eigenfunction_bound(nu, flavor, lam, xc * (1 + 1e-12))});
    const double term = std::exp(-t * lam) / lam * B;
    terms.push_back(term);
    sum += term;
    if (n > 100 && term <= prev && (term == 0.0 || term < 1e-30 * sum)) break;
    prev = term;
  }
  std::vector<double> tail(terms.size() + 1, 0.0);
  for (size_t n = terms.size(); n-- > 0;) tail[n] = tail[n + 1] + terms[n];
  return tail;
}

// The grid gets every step of the inputs as a breakpoint, so integrals of
// the inputs and of fields that jump with them stay exact.
Workspace make_workspace(Setting s, double nu, const ExperimentGrid& eg, double k_max,
                         const std::vector<std::vector<StepPiece>>& inputs) {
  Workspace W{s, nu, setting_flavor(s), setting_measure(s, nu), nullptr, nullptr, nullptr, {}, {}, {}, -1, 0.0};
  std::vector<double> br = make_graded_grid({eg.cells, 1, eg.end_levels, eg.end_levels})->breakpoints();
  for (const auto& f : inputs)
    for (const auto& p : f) {
      br.push_back(p.a);
      br.push_back(p.b);
    }
  std::sort(br.begin(), br.end());
  // drop near-duplicates, which would make sliver cells
  std::vector<double> clean;
  for (double b : br)
    if (clean.empty() || b - clean.back() > 1e-12 * std::max(1.0, b)) clean.push_back(b);
  W.grid = std::make_shared<RadialGrid>(std::move(clean), eg.points);
  const auto& x = W.grid->nodes();
  const std::vector<double> tail = tail_units(nu, W.flavor, eg.t_min, x.minCoeff(), x.maxCoeff());
  auto unit = [&](int N) { return N < static_cast<int>(tail.size()) ? tail[N] : 0.0; };
  int N = eg.modes;
  if (N == 0) {
    N = 100;
    while (k_max * unit(N) > eg.tail_tolerance) N += 100;
  }
  W.tail_unit = unit(N);
  W.basis = make_basis(nu, N);
  W.sb = std::make_unique<SampledBasis>(W.basis, W.grid, W.flavor);
  W.times = TimeGrid::log_uniform(eg.t_max, eg.t_min, eg.time_points).with_time(1.0);
  for (int k = 0; k < W.times.size(); ++k)
    if (W.times.times[k] == 1.0) W.one = k;
  W.M.resize(W.times.size(), N);
  for (int k = 0; k < W.times.size(); ++k)
    for (int n = 0; n < N; ++n) {
      const double v = poisson_factor(W.times.times[k], W.basis->zeros()[n]);
      W.M(k, n) = v < 1e-200 ? 0.0 : v;
    }
  W.w = W.grid->measure_weights(W.measure);
  return W;
}

Eigen::VectorXd rho_variation_columns(const Eigen::MatrixXd& F, double rho) {
  Eigen::VectorXd v(F.cols());
  for (int i = 0; i < F.cols(); ++i) v[i] = rho_variation(F.col(i), rho).value;
  return v;
}

// pieces of sum_i c_i a_i
std::vector<StepPiece> combine(const std::vector<std::pair<double, Atom>>& terms) {
  std::vector<StepPiece> out;
  for (const auto& [c, A] : terms)
    for (const auto& p : A.pieces) out.push_back({p.a, p.b, c * p.height});
  return out;
}

Eigen::VectorXd sample_pieces(const std::vector<StepPiece>& pieces, const Eigen::VectorXd& x) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
  for (int i = 0; i < x.size(); ++i)
    for (const auto& p : pieces)
      if (x[i] > p.a && x[i] <= p.b) v[i] += p.height;
  return v;
}

Eigen::VectorXd coefficients(const Workspace& W, const std::vector<StepPiece>& pieces) {
  if (pieces.empty()) return Eigen::VectorXd::Zero(W.basis->size());
  return step_function_coefficients(W.basis, W.flavor, pieces).values;
}

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }
double draw_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<AtomSpec> standard_atom_family(Setting s, std::uint64_t seed, int a_count, int j_max) {
  if (a_count < 0 || j_max < 0) throw DomainError("atom counts must be >= 0");
  std::vector<AtomSpec> out;
  if (s == Setting::s_nu)
    for (int j = -j_max; j <= -1; ++j) out.push_back(AtomSpec::b_atom(s, j));
  for (int j = s == Setting::s_nu ? 1 : 0; j <= j_max; ++j) out.push_back(AtomSpec::b_atom(s, j));
  std::mt19937_64 rng(seed);
  for (int i = 0; i < a_count; ++i) {
    const int k = 2 + static_cast<int>(draw(rng, 7));  // radius 2^-k, k = 2..8
    const int r = 256 >> k;                            // in lattice units
    const int m = r + static_cast<int>(draw(rng, static_cast<std::uint64_t>(256 - 2 * r + 1)));
    out.push_back(AtomSpec::a_atom(s, m / 256.0, r / 256.0));
  }
  return out;
}

AtomExperimentReport atom_variation_experiment(const std::vector<AtomSpec>& specs, double rho, double nu,
                                               const ExperimentGrid& eg) {
  check_grid(eg);
  check_rho(rho);
  if (specs.empty()) throw DomainError("empty atom family");
  const Setting s = specs.front().setting;
  for (const auto& a : specs)
    if (a.setting != s) throw DomainError("atoms of one experiment must share the setting");
  check_order(s, nu, true);

  std::vector<Atom> atoms;
  std::vector<double> K;
  for (const auto& a : specs) {
    atoms.push_back(build_atom(a, nu));
    K.push_back(coefficient_constant(s, nu, atoms.back().pieces));
  }
  std::vector<std::vector<StepPiece>> inputs;
  for (const auto& a : atoms) inputs.push_back(a.pieces);
  const Workspace W = make_workspace(s, nu, eg, *std::max_element(K.begin(), K.end()), inputs);

  AtomExperimentReport r;
  r.setting = s;
  r.nu = nu;
  r.rho = rho;
  r.modes = W.basis->size();
  r.nodes = W.grid->size();
  r.times = W.times.size() + 1;
  const int A = static_cast<int>(atoms.size());
  // coefficients first: they are computed in parallel over modes
  std::vector<Eigen::VectorXd> coef(A);
  for (int i = 0; i < A; ++i) coef[i] = coefficients(W, atoms[i].pieces);
  r.atoms.resize(A);
  parallel_for(A, [&](int i) {
    AtomResult& out = r.atoms[i];
    out.spec = specs[i];
    out.label = specs[i].label();
    out.scale = atoms[i].interval_measure();
    out.tail_bound = K[i] * W.tail_unit;
    if (!(out.tail_bound <= eg.tail_tolerance)) {
      out.resolved = false;
      std::ostringstream os;
      os << "series tail " << out.tail_bound << " at t_min = " << eg.t_min << " exceeds " << eg.tail_tolerance;
      out.error = os.str();
    }
    const Eigen::MatrixXd F = W.family(coef[i], sample_pieces(atoms[i].pieces, W.grid->nodes()));
    out.l1_norm = W.w.dot(rho_variation_columns(F, rho));
  });

  r.max_norm = 0.0;
  r.min_norm = INFINITY;
  std::map<double, double, std::greater<double>> by_radius;
  for (const auto& a : r.atoms) {
    r.max_norm = std::max(r.max_norm, a.l1_norm);
    r.min_norm = std::min(r.min_norm, a.l1_norm);
    if (!a.resolved) ++r.unresolved;
    if (a.spec.kind == AtomKind::b) {
      r.b_growth.emplace_back(a.spec.j, a.l1_norm);
    } else {
      double& v = by_radius[a.spec.radius];
      v = std::max(v, a.l1_norm);
    }
  }
  std::sort(r.b_growth.begin(), r.b_growth.end());
  r.a_growth.assign(by_radius.begin(), by_radius.end());
  r.ratio = r.min_norm > 0.0 ? r.max_norm / r.min_norm : INFINITY;
  r.pass = r.unresolved == 0 && std::isfinite(r.ratio) && r.ratio <= r.envelope;
  return r;
}

std::vector<AtomicSum> standard_h1_family(Setting s, std::uint64_t seed, int combos) {
  if (combos < 0) throw DomainError("combination count must be >= 0");
  std::vector<AtomicSum> out;
  const std::vector<int> js = s == Setting::delta_nu ? std::vector<int>{0, 2, 4} : std::vector<int>{-3, -1, 1, 3};
  for (int j : js) {
    const AtomSpec a = AtomSpec::b_atom(s, j);
    out.push_back({{{1.0, a}}, a.label()});
  }
  for (const auto& a : {AtomSpec::a_atom(s, 0.5, 0.25), AtomSpec::a_atom(s, 0.125, 0.0625),
                        AtomSpec::a_atom(s, 0.875, 0.0625)})
    out.push_back({{{1.0, a}}, a.label()});
  const std::vector<AtomSpec> pool = standard_atom_family(s, seed, 12, 5);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int c = 0; c < combos; ++c) {
    AtomicSum f;
    const int n = 2 + static_cast<int>(draw(rng, 3));
    for (int k = 0; k < n; ++k)
      f.terms.emplace_back(2.0 * draw_unit(rng) - 1.0, pool[draw(rng, pool.size())]);
    f.label = "combo " + std::to_string(c);
    out.push_back(std::move(f));
  }
  return out;
}

H1Report h1_equivalence_experiment(Setting s, const std::vector<AtomicSum>& family, double rho, double nu,
                                   const ExperimentGrid& eg) {
  check_grid(eg);
  check_rho(rho);
  check_order(s, nu, true);
  const int F = static_cast<int>(family.size());
  std::vector<std::vector<StepPiece>> pieces(F);
  std::vector<double> K(F, 0.0);
  for (int i = 0; i < F; ++i) {
    std::vector<std::pair<double, Atom>> terms;
    for (const auto& [c, spec] : family[i].terms) {
      if (spec.setting != s) throw DomainError("atom setting does not match the experiment");
      terms.emplace_back(c, build_atom(spec, nu));
    }
    pieces[i] = combine(terms);
    K[i] = coefficient_constant(s, nu, pieces[i]);
  }
  const double k_max = F > 0 ? *std::max_element(K.begin(), K.end()) : 0.0;
  const Workspace W = make_workspace(s, nu, eg, std::max(k_max, 1e-300), pieces);

  H1Report r;
  r.setting = s;
  r.nu = nu;
  r.rho = rho;
  r.modes = W.basis->size();
  r.rows.resize(F);
  std::vector<Eigen::VectorXd> coef(F);
  for (int i = 0; i < F; ++i) coef[i] = coefficients(W, pieces[i]);
  parallel_for(F, [&](int i) {
    H1Row& row = r.rows[i];
    row.label = family[i].label;
    row.tail_bound = K[i] * W.tail_unit;
    const Eigen::VectorXd f = sample_pieces(pieces[i], W.grid->nodes());
    const Eigen::MatrixXd P = W.family(coef[i], f);
    row.f_norm = W.w.dot(f.cwiseAbs());
    row.maximal_norm = W.w.dot(P.cwiseAbs().colwise().maxCoeff().transpose());
    row.variation_norm = W.w.dot(rho_variation_columns(P, rho));
    row.p1_norm = W.w.dot(P.row(W.one).cwiseAbs().transpose());
    row.q1 = row.f_norm + row.maximal_norm;
    row.q2 = row.f_norm + row.variation_norm;
    row.ratio = row.q2 > 0.0 ? row.q1 / row.q2 : 0.0;
    row.lower_control = row.q1 <= (row.q2 + 2.0 * row.p1_norm) * (1.0 + 1e-12);
  });
  auto envelope = [&](int n) {
    double k = 0.0;
    for (int i = 0; i < n; ++i)
      if (r.rows[i].ratio > 0.0) k = std::max({k, r.rows[i].ratio, 1.0 / r.rows[i].ratio});
    return k;
  };
  r.k_envelope = envelope(F);
  r.k_half = envelope((F + 1) / 2);
  for (const auto& row : r.rows) r.lower_control = r.lower_control && row.lower_control;
  return r;
}

LpProbeReport lp_ratio_probe(Setting s, double nu, double rho, double p, const ExperimentGrid& eg, std::uint64_t seed,
                             int random_sets) {
  check_grid(eg);
  check_rho(rho);
  check_order(s, nu, false);
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("p must satisfy 1 <= p < inf");
  if (random_sets < 0) throw DomainError("random set count must be >= 0");
  std::vector<std::pair<double, double>> sets;
  for (int k = 1; k <= 8; ++k) {
    sets.emplace_back(0.0, std::ldexp(1.0, -k));
    sets.emplace_back(1.0 - std::ldexp(1.0, -k), 1.0);
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < random_sets; ++i) {
    const int a = static_cast<int>(draw(rng, 255));
    const int b = a + 1 + static_cast<int>(draw(rng, static_cast<std::uint64_t>(256 - a)));
    sets.emplace_back(a / 256.0, b / 256.0);
  }
  const MeasureTag m = setting_measure(s, nu);
  double k_max = 0.0;
  std::vector<std::vector<StepPiece>> inputs;
  for (const auto& [a, b] : sets) {
    inputs.push_back({{a, b, 1.0}});
    k_max = std::max(k_max, coefficient_constant(s, nu, inputs.back()));
  }
  const Workspace W = make_workspace(s, nu, eg, k_max, inputs);

  LpProbeReport r;
  r.setting = s;
  r.nu = nu;
  r.rho = rho;
  r.p = p;
  r.modes = W.basis->size();
  r.tail_bound = k_max * W.tail_unit;
  const int S = static_cast<int>(sets.size());
  std::vector<Eigen::VectorXd> coef(S);
  for (int i = 0; i < S; ++i) coef[i] = coefficients(W, {{sets[i].first, sets[i].second, 1.0}});
  r.rows.resize(S);
  parallel_for(S, [&](int i) {
    const auto [a, b] = sets[i];
    const Eigen::VectorXd f = sample_pieces({{a, b, 1.0}}, W.grid->nodes());
    const GridFunction V{W.grid, rho_variation_columns(W.family(coef[i], f), rho)};
    ProbeRow& row = r.rows[i];
    row.a = a;
    row.b = b;
    row.measure = m.mass(a, b);
    const double scale = std::pow(row.measure, 1.0 / p);
    row.strong_ratio = lp_norm(V, p, m) / scale;
    row.weak_ratio = weak_lp_quasinorm(V, p, m) / scale;
  });
  for (const auto& row : r.rows) {
    r.strong_sup = std::max(r.strong_sup, row.strong_ratio);
    r.weak_sup = std::max(r.weak_sup, row.weak_ratio);
  }
  return r;
}

}  // namespace fbvar
