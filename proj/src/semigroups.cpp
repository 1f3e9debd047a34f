#include "fbvar/semigroups.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "fbvar/errors.hpp"
#include "fbvar/parallel.hpp"
#include "fbvar/quadrature.hpp"

namespace fbvar {

using std::numbers::pi;

TimeGrid TimeGrid::log_uniform(double t_max, double t_min, int points) {
  if (!(t_min > 0.0) || !(t_max > t_min) || points < 2) throw DomainError("log time grid needs t_max > t_min > 0, >= 2 points");
  TimeGrid g;
  g.times.resize(points);
  const double a = std::log(t_max), b = std::log(t_min);
  for (int k = 0; k < points; ++k) g.times[k] = std::exp(a + (b - a) * k / (points - 1));
  g.times[0] = t_max;
  g.times[points - 1] = t_min;
  return g;
}

TimeGrid TimeGrid::from(const std::vector<double>& t) {
  if (t.empty()) throw DomainError("time grid must be nonempty");
  for (size_t k = 0; k < t.size(); ++k) {
    if (!(t[k] > 0.0)) throw DomainError("times must be positive");
    if (k > 0 && !(t[k] < t[k - 1])) throw DomainError("times must decrease strictly");
  }
  return {Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()))};
}

TimeGrid TimeGrid::with_time(double t) const {
  std::vector<double> v(times.data(), times.data() + times.size());
  if (std::find(v.begin(), v.end(), t) != v.end()) return *this;
  v.push_back(t);
  std::sort(v.begin(), v.end(), std::greater<double>());
  return from(v);
}

FractionalOrder FractionalOrder::of(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("fractional order must be >= 0");
  return {beta, static_cast<int>(std::floor(beta)) + 1};
}

double heat_factor(double t, double lambda) { return std::exp(-t * lambda * lambda); }
double poisson_factor(double t, double lambda) { return std::exp(-t * lambda); }

double weyl_poisson_factor(const FractionalOrder& o, double t, double lambda) {
  const double s = t * lambda;
  const double p = o.beta == 0.0 ? 1.0 : std::pow(s, o.beta);
  return o.sign() * p * std::exp(-s);
}

namespace {

Eigen::VectorXd map_zeros(const SpectralBasis& b, const std::function<double(double)>& f) {
  Eigen::VectorXd m(b.size());
  for (int n = 0; n < b.size(); ++n) m[n] = f(b.zeros()[n]);
  return m;
}

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive");
}

// sup over z >= 1 of sqrt(z) |J_nu(z)|, padded; cached per order
double sqrt_bessel_sup(double nu) {
  static std::mutex mu;
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(nu);
  if (it != cache.end()) return it->second;
  double s = std::sqrt(2.0 / pi) * (1.0 + std::abs(4 * nu * nu - 1) / 1600.0);
  for (double z = 1.0; z <= 200.0; z += 0.02) s = std::max(s, std::sqrt(z) * std::abs(bessel_j(nu, z)));
  s *= 1.05;
  cache[nu] = s;
  return s;
}

}  // namespace

Eigen::VectorXd heat_multiplier(const SpectralBasis& b, double t) {
  check_time(t);
  return map_zeros(b, [t](double l) { return heat_factor(t, l); });
}

Eigen::VectorXd poisson_multiplier(const SpectralBasis& b, double t) {
  check_time(t);
  return map_zeros(b, [t](double l) { return poisson_factor(t, l); });
}

Eigen::VectorXd subordinated_poisson_multiplier(const SpectralBasis& b, double t) {
  check_time(t);
  // v = e^s, s on [ln 1e-8, ln 60]; the integrand is analytic in a strip so
  // the trapezoid converges geometrically.
  const double s0 = std::log(1e-8), s1 = std::log(60.0);
  const int steps = 700;
  const double h = (s1 - s0) / steps;
  return map_zeros(b, [&](double lam) {
    const double a = t * t * lam * lam / 4.0;
    double sum = 0.0;
    for (int k = 0; k <= steps; ++k) {
      const double v = std::exp(s0 + k * h);
      const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
      sum += w * std::exp(-v - a / v + 0.5 * std::log(v));
    }
    return sum * h / std::sqrt(pi);
  });
}

Eigen::VectorXd weyl_poisson_multiplier(const SpectralBasis& b, const FractionalOrder& o, double t) {
  check_time(t);
  return map_zeros(b, [&](double l) { return weyl_poisson_factor(o, t, l); });
}

CoefficientVector heat_apply(double t, const CoefficientVector& c) {
  return apply_operator_diagonal(c, heat_multiplier(*c.basis, t));
}

CoefficientVector poisson_apply(double t, const CoefficientVector& c) {
  return apply_operator_diagonal(c, poisson_multiplier(*c.basis, t));
}

CoefficientVector poisson_apply_subordinated(double t, const CoefficientVector& c) {
  return apply_operator_diagonal(c, subordinated_poisson_multiplier(*c.basis, t));
}

namespace {

struct BoundConstants {
  double nu, d, k0, small, csup;
  explicit BoundConstants(double order) : nu(order) {
    d = 1.1 * std::sqrt(pi);
    k0 = 1.0 / (std::pow(2.0, nu) * std::tgamma(nu + 1.0));  // sup |J z^-nu| for nu >= -1/2
    small = k0 * (1.0 + 0.3 / (nu + 1.0));                    // sup over z < 1, any nu > -1
    csup = sqrt_bessel_sup(nu);
  }
  double operator()(Flavor flavor, double lambda, double x) const {
    const double z = lambda * x;
    double v;
    if (z < 1.0) {
      v = d * small * std::pow(lambda, nu + 0.5);
    } else {
      v = d * csup * std::pow(x, -nu - 0.5);
      if (nu >= -0.5) v = std::min(v, d * k0 * std::pow(lambda, nu + 0.5));
    }
    return flavor == Flavor::phi ? v : v * std::pow(x, nu + 0.5);
  }
};

std::string sci(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

}  // namespace

double eigenfunction_bound(const SpectralBasis& b, Flavor flavor, double lambda, double x) {
  return BoundConstants(b.nu())(flavor, lambda, x);
}

double eigenfunction_bound(double nu, Flavor flavor, double lambda, double x) {
  return BoundConstants(nu)(flavor, lambda, x);
}

double kernel_tail_estimate(const SpectralBasis& b, Flavor flavor, const std::function<double(double)>& m, double x,
                            double y) {
  return kernel_tail_estimate(b.nu(), b.size(), flavor, m, x, y);
}

double kernel_tail_estimate(double nu, int n_modes, Flavor flavor, const std::function<double(double)>& m, double x,
                            double y) {
  const BoundConstants bound(nu);
  double sum = 0.0, prev = INFINITY;
  for (long n = n_modes + 1; n < n_modes + 20000000L; ++n) {
    const double beta = (n + nu / 2.0 - 0.25) * pi;
    const double lam = beta - (4 * nu * nu - 1) / (8 * beta);
    const double term = std::abs(m(lam)) * bound(flavor, lam, x) * bound(flavor, lam, y);
    sum += term;
    if (n - n_modes > 50 && term <= prev && (term == 0.0 || term < 1e-17 * sum)) return sum;
    prev = term;
  }
  return sum;
}

KernelValue kernel_series(const SpectralBasis& b, Flavor flavor, const std::function<double(double)>& m, double x,
                          double y, const KernelOptions& opt) {
  if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)) throw DomainError("kernel points must lie in (0, 1)");
  const double tail = kernel_tail_estimate(b, flavor, m, x, y);
  if (!(tail <= opt.tail_tolerance))
    throw ResolutionError("kernel series tail " + sci(tail) + " exceeds tolerance " + sci(opt.tail_tolerance) +
                              "; increase N (now " + std::to_string(b.size()) + ") or the time",
                          tail);
  double s = 0.0, comp = 0.0;
  for (int n = 1; n <= b.size(); ++n) {
    const double t = m(b.lambda(n)) * b.eigenfunction(flavor, n, x) * b.eigenfunction(flavor, n, y);
    const double u = s + t;
    comp += std::abs(s) >= std::abs(t) ? (s - u) + t : (t - u) + s;
    s = u;
  }
  return {s + comp, tail};
}

KernelValue heat_kernel(const SpectralBasis& b, double t, double x, double y, const KernelOptions& opt) {
  check_time(t);
  return kernel_series(b, Flavor::phi, [t](double l) { return heat_factor(t, l); }, x, y, opt);
}

KernelValue poisson_kernel(const SpectralBasis& b, double t, double x, double y, const KernelOptions& opt) {
  check_time(t);
  return kernel_series(b, Flavor::phi, [t](double l) { return poisson_factor(t, l); }, x, y, opt);
}

KernelValue poisson_kernel_subordinated(const SpectralBasis& b, double t, double x, double y,
                                        const KernelOptions& opt) {
  check_time(t);
  if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)) throw DomainError("kernel points must lie in (0, 1)");
  // The quadrature of the subordination integral commutes with the finite
  // mode sum, so the kernel is the mode sum of the quadrature multipliers.
  const double tail = kernel_tail_estimate(b, Flavor::phi, [t](double l) { return poisson_factor(t, l); }, x, y);
  if (!(tail <= opt.tail_tolerance))
    throw ResolutionError("kernel series tail exceeds tolerance; increase N", tail);
  const Eigen::VectorXd m = subordinated_poisson_multiplier(b, t);
  double s = 0.0;
  for (int n = 1; n <= b.size(); ++n) s += m[n - 1] * b.phi(n, x) * b.phi(n, y);
  return {s, tail};
}

KernelValue s_nu_heat_kernel(const SpectralBasis& b, double t, double x, double y, const KernelOptions& opt) {
  check_time(t);
  return kernel_series(b, Flavor::psi, [t](double l) { return heat_factor(t, l); }, x, y, opt);
}

KernelValue s_nu_poisson_kernel(const SpectralBasis& b, double t, double x, double y, const KernelOptions& opt) {
  check_time(t);
  return kernel_series(b, Flavor::psi, [t](double l) { return poisson_factor(t, l); }, x, y, opt);
}

double min_resolvable_time(const SpectralBasis& b, Flavor flavor, bool poisson, double x, double y,
                           const KernelOptions& opt) {
  auto tail = [&](double t) {
    return poisson ? kernel_tail_estimate(b, flavor, [t](double l) { return poisson_factor(t, l); }, x, y)
                   : kernel_tail_estimate(b, flavor, [t](double l) { return heat_factor(t, l); }, x, y);
  };
  double lo = 1e-12, hi = 1e3;
  if (tail(hi) > opt.tail_tolerance) return INFINITY;
  for (int it = 0; it < 60; ++it) {
    const double mid = std::sqrt(lo * hi);
    (tail(mid) <= opt.tail_tolerance ? hi : lo) = mid;
  }
  return hi;
}

FamilySamples multiplier_family(const CoefficientVector& c, const TimeGrid& times, const SampledBasis& sb,
                                const std::function<double(double, double)>& m, std::string label) {
  if (c.basis != sb.basis() || c.flavor != sb.flavor()) throw DomainError("coefficient basis does not match");
  if (times.size() < 1) throw DomainError("empty time grid");
  const SpectralBasis& b = *c.basis;
  Eigen::MatrixXd M(times.size(), b.size());
  for (int k = 0; k < times.size(); ++k)
    for (int n = 0; n < b.size(); ++n) {
      const double v = m(times.times[k], b.zeros()[n]);
      M(k, n) = std::abs(v) < 1e-200 ? 0.0 : v;  // keep subnormals out of the product
    }
  const Eigen::MatrixXd cb = c.values.asDiagonal() * sb.matrix().transpose();
  return {times, sb.grid(), M * cb, std::move(label)};
}

FamilySamples weyl_fractional_family(const FractionalOrder& o, const CoefficientVector& c, const TimeGrid& times,
                                     const SampledBasis& sb) {
  return multiplier_family(c, times, sb, [&o](double t, double l) { return weyl_poisson_factor(o, t, l); },
                           "t^beta d^beta P_t, beta=" + std::to_string(o.beta));
}

FamilySamples heat_family(const CoefficientVector& c, const TimeGrid& times, const SampledBasis& sb) {
  return multiplier_family(c, times, sb, heat_factor, "W_t");
}

double weyl_derivative(const std::function<double(double)>& h_m, const FractionalOrder& o, double t, double decay) {
  if (!(t >= 0.0) || !(decay > 0.0)) throw DomainError("weyl_derivative needs t >= 0 and a positive decay rate");
  const double a = o.m - o.beta;  // in (0, 1]
  const double unit = 1.0 / decay;
  const double S = 40.0 * unit;
  // graded cells toward s = 0, uniform cells of width 1/decay beyond
  std::vector<double> br{0.0};
  for (int k = 50; k >= 1; --k) br.push_back(unit * std::ldexp(1.0, -k));
  for (int j = 1; j <= 40; ++j) br.push_back(j * unit);
  double peak = 0.0;
  for (double s : br) peak = std::max(peak, std::abs(h_m(t + s)));
  if (std::abs(h_m(t + S)) > 1e-12 * peak || std::abs(h_m(t + 2 * S)) > 1e-12 * peak)
    throw ConvergenceError("Weyl integrand does not decay; tail diverges", t, t + S);
  // s^{a-1} ds = du / a with u = s^a
  const GaussRule& g = gauss_legendre(20);
  double sum = 0.0;
  for (size_t c = 0; c + 1 < br.size(); ++c) {
    const double ua = std::pow(br[c], a), ub = std::pow(br[c + 1], a);
    const double hw = 0.5 * (ub - ua), mid = 0.5 * (ua + ub);
    double cell = 0.0;
    for (int i = 0; i < 20; ++i) cell += g.weights[i] * h_m(t + std::pow(mid + hw * g.nodes[i], 1.0 / a));
    sum += cell * hw / a;
  }
  return -sum / std::tgamma(a);
}

double weyl_integral_check(double beta, double lambda, double t) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const FractionalOrder o = FractionalOrder::of(beta);
  const double c = std::pow(-lambda, o.m);
  const double d = weyl_derivative([&](double s) { return c * std::exp(-lambda * s); }, o, t, lambda);
  return o.sign() * d;
}

double free_heat_kernel(double nu, double t, double x, double y) {
  detail::check_order(nu);
  check_time(t);
  if (!(x >= 0.0 && y >= 0.0)) throw DomainError("free kernel needs x, y >= 0");
  // (xy)^{-nu} I_nu(z) = (2t)^{-nu} I_nu(z) z^{-nu},  z = xy / 2t
  const double z = x * y / (2.0 * t);
  double scaled_over_power;
  if (z < 2.0)
    scaled_over_power = std::exp(-z) * detail::ascending_series(nu, z, -1) / std::pow(2.0, nu);
  else
    scaled_over_power = bessel_i_scaled(nu, z) / std::pow(z, nu);
  const double dx = x - y;
  return std::pow(2.0 * t, -nu) / (2.0 * t) * scaled_over_power * std::exp(-dx * dx / (4.0 * t));
}

GridFunction maximal_function(const FamilySamples& s) {
  if (s.values.rows() < 1) throw DomainError("maximal function of an empty family");
  return {s.grid, s.values.cwiseAbs().colwise().maxCoeff().transpose()};
}

}  // namespace fbvar
