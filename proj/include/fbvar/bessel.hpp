#pragma once

// Bessel functions of the first kind J_nu and I_nu for real order nu > -1,
// positive zeros of J_nu and the Fourier-Bessel normalizing constants.
//
// Everything here is templated on the floating point type; the rest of the
// library instantiates it with double.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "fbvar/errors.hpp"

namespace fbvar {

inline constexpr const char* kBesselVersion = "1.0.0";

// Branch points for J_nu. Below `series_limit` the ascending series is used,
// above `asymptotic_limit` the Hankel expansion is tried first, and the
// continued fraction method covers the rest (and any point where the Hankel
// series fails to reach machine precision).
struct BesselLimits {
  double series_limit = 2.0;
  double asymptotic_limit = 25.0;
};

template <typename Real>
struct BesselPair {
  Real value;
  Real derivative;
};

namespace detail {

template <typename Real>
void check_order(Real nu) {
  if (!(nu > Real(-1)) || !std::isfinite(static_cast<double>(nu)))
    throw DomainError("Bessel order must satisfy nu > -1 (got " +
                      std::to_string(static_cast<double>(nu)) + ")");
}

template <typename Real>
void check_argument(Real z) {
  if (std::isnan(static_cast<double>(z)) || z < Real(0))
    throw DomainError("Bessel argument must be >= 0");
  if (!std::isfinite(static_cast<double>(z)) ||
      z > Real(1) / std::numeric_limits<Real>::epsilon())
    throw std::overflow_error("Bessel argument too large for a meaningful phase");
}

// sum_k (-s z^2/4)^k / (k! Gamma(nu+k+1)); s = +1 gives J, s = -1 gives I.
// Multiplying by (z/2)^nu yields the function itself.
template <typename Real>
Real ascending_series(Real nu, Real z, int s) {
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real q = (s > 0 ? -z * z : z * z) / Real(4);
  Real term = Real(1) / std::tgamma(nu + Real(1));
  Real sum = term;
  Real biggest = std::abs(term);
  for (int k = 1; k < 1000; ++k) {
    term *= q / (Real(k) * (nu + Real(k)));
    sum += term;
    biggest = std::max(biggest, std::abs(term));
    if (std::abs(term) <= eps * std::abs(sum) * Real(0.25) ||
        std::abs(term) <= eps * eps * biggest)
      return sum;
  }
  throw ConvergenceError("ascending Bessel series did not converge");
}

// Hankel's expansion: P and Q with J_nu(z) = sqrt(2/(pi z)) (P cos chi - Q sin chi).
// Returns false if the terms start growing before reaching machine precision.
template <typename Real>
bool hankel_pq(Real nu, Real z, Real& p, Real& q) {
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real mu = Real(4) * nu * nu;
  p = Real(1);
  q = Real(0);
  Real term = Real(1);
  Real last = std::numeric_limits<Real>::infinity();
  for (int k = 1; k < 400; ++k) {
    const Real odd = Real(2 * k - 1);
    term *= (mu - odd * odd) / (Real(8 * k) * z);
    if (term == Real(0)) return true;  // half-integer order: finite sum
    if (std::abs(term) > last) return false;
    last = std::abs(term);
    const bool neg = ((k % 2 == 0) ? (k / 2) : ((k - 1) / 2)) % 2 == 1;
    (k % 2 == 0 ? p : q) += neg ? -term : term;
    if (std::abs(term) < eps * Real(0.25)) return true;
  }
  return false;
}

template <typename Real>
bool hankel_j(Real nu, Real z, Real& j) {
  Real p, q;
  if (!hankel_pq(nu, z, p, q)) return false;
  const Real pi = std::numbers::pi_v<Real>;
  const Real phase = (nu / Real(2) + Real(0.25)) * pi;
  const Real s = std::sin(z), c = std::cos(z);
  const Real sp = std::sin(phase), cp = std::cos(phase);
  const Real cchi = c * cp + s * sp;
  const Real schi = s * cp - c * sp;
  j = std::sqrt(Real(2) / (pi * z)) * (p * cchi - q * schi);
  return true;
}

// Steed's method (CF1 for J'/J, CF2 for p + iq), valid for z >= 2 and any
// nu > -1. Returns J_nu(z) and J_nu'(z).
template <typename Real>
BesselPair<Real> steed_j(Real nu, Real x) {
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real fpmin = std::numeric_limits<Real>::min() / eps;
  const Real pi = std::numbers::pi_v<Real>;
  const long maxit = 10000000;

  const int nl = std::max(0, static_cast<int>(nu - x + Real(1.5)));
  const Real xmu = nu - Real(nl);
  const Real xi = Real(1) / x;
  const Real xi2 = Real(2) * xi;
  const Real w = xi2 / pi;

  int isign = 1;
  Real h = nu * xi;
  if (std::abs(h) < fpmin) h = fpmin;
  Real b = xi2 * nu, d = 0, c = h;
  long i = 1;
  for (; i <= maxit; ++i) {
    b += xi2;
    d = b - d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = b - Real(1) / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = Real(1) / d;
    const Real del = c * d;
    h *= del;
    if (d < Real(0)) isign = -isign;
    if (std::abs(del - Real(1)) < eps) break;
  }
  if (i > maxit) throw ConvergenceError("CF1 did not converge", x, x);

  Real rjl = isign * fpmin;
  Real rjpl = h * rjl;
  const Real rjl1 = rjl, rjp1 = rjpl;
  Real fact = nu * xi;
  for (int l = nl - 1; l >= 0; --l) {
    const Real tmp = fact * rjl + rjpl;
    fact -= xi;
    rjpl = fact * tmp - rjl;
    rjl = tmp;
  }
  if (rjl == Real(0)) rjl = eps;
  const Real f = rjpl / rjl;

  Real a = Real(0.25) - xmu * xmu;
  Real p = Real(-0.5) * xi, q = Real(1);
  const Real br = Real(2) * x;
  Real bi = Real(2);
  fact = a * xi / (p * p + q * q);
  Real cr = br + q * fact, ci = bi + p * fact;
  Real den = br * br + bi * bi;
  Real dr = br / den, di = -bi / den;
  Real dlr = cr * dr - ci * di, dli = cr * di + ci * dr;
  Real tmp = p * dlr - q * dli;
  q = p * dli + q * dlr;
  p = tmp;
  for (i = 2; i <= maxit; ++i) {
    a += Real(2 * (i - 1));
    bi += Real(2);
    dr = a * dr + br;
    di = a * di + bi;
    if (std::abs(dr) + std::abs(di) < fpmin) dr = fpmin;
    fact = a / (cr * cr + ci * ci);
    cr = br + cr * fact;
    ci = bi - ci * fact;
    if (std::abs(cr) + std::abs(ci) < fpmin) cr = fpmin;
    den = dr * dr + di * di;
    dr /= den;
    di /= -den;
    dlr = cr * dr - ci * di;
    dli = cr * di + ci * dr;
    tmp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = tmp;
    if (std::abs(dlr - Real(1)) + std::abs(dli) < eps) break;
  }
  if (i > maxit) throw ConvergenceError("CF2 did not converge", x, x);

  const Real gam = (p - f) / q;
  Real rjmu = std::sqrt(w / ((p - f) * gam + q));
  rjmu = std::copysign(rjmu, rjl);
  fact = rjmu / rjl;
  return {rjl1 * fact, rjp1 * fact};
}

template <typename Real>
Real j_value(Real nu, Real z, const BesselLimits& lim) {
  if (z == Real(0)) {
    if (nu == Real(0)) return Real(1);
    if (nu > Real(0)) return Real(0);
    throw std::overflow_error("J_nu(0) is unbounded for nu < 0");
  }
  if (z < Real(lim.series_limit))
    return std::pow(z / Real(2), nu) * ascending_series(nu, z, +1);
  if (z >= Real(lim.asymptotic_limit)) {
    Real j;
    if (hankel_j(nu, z, j)) return j;
  }
  return steed_j(nu, z).value;
}

}  // namespace detail

// J_nu(z) for nu > -1, z >= 0.
template <typename Real>
Real bessel_j(Real nu, std::type_identity_t<Real> z, const BesselLimits& lim = {}) {
  detail::check_order(nu);
  detail::check_argument(z);
  return detail::j_value(nu, z, lim);
}

// J_nu(z) together with J_nu'(z) = (nu/z) J_nu(z) - J_{nu+1}(z).
template <typename Real>
BesselPair<Real> bessel_j_with_derivative(Real nu, std::type_identity_t<Real> z, const BesselLimits& lim = {}) {
  detail::check_order(nu);
  detail::check_argument(z);
  if (z == Real(0)) throw DomainError("derivative requested at z = 0");
  if (z >= Real(lim.series_limit) && z < Real(lim.asymptotic_limit))
    return detail::steed_j(nu, z);
  const Real j = detail::j_value(nu, z, lim);
  const Real j1 = detail::j_value(nu + Real(1), z, lim);
  return {j, nu / z * j - j1};
}

// J_nu(z) z^{-nu}, finite at z = 0 for every nu > -1.
template <typename Real>
Real bessel_j_over_power(Real nu, std::type_identity_t<Real> z, const BesselLimits& lim = {}) {
  detail::check_order(nu);
  detail::check_argument(z);
  if (z < Real(lim.series_limit))
    return detail::ascending_series(nu, z, +1) / std::pow(Real(2), nu);
  return detail::j_value(nu, z, lim) / std::pow(z, nu);
}

// e^{-z} I_nu(z).
template <typename Real>
Real bessel_i_scaled(Real nu, std::type_identity_t<Real> z) {
  detail::check_order(nu);
  detail::check_argument(z);
  if (z == Real(0)) {
    if (nu == Real(0)) return Real(1);
    if (nu > Real(0)) return Real(0);
    throw std::overflow_error("I_nu(0) is unbounded for nu < 0");
  }
  const Real pi = std::numbers::pi_v<Real>;
  if (z <= Real(50))
    return std::exp(-z) * std::pow(z / Real(2), nu) * detail::ascending_series(nu, z, -1);

  // Large z: Hankel-type expansion, which converges fast once z >> nu^2.
  {
    const Real eps = std::numeric_limits<Real>::epsilon();
    const Real mu = Real(4) * nu * nu;
    Real term = Real(1), sum = Real(1);
    Real last = std::numeric_limits<Real>::infinity();
    bool ok = false;
    for (int k = 1; k < 400; ++k) {
      const Real odd = Real(2 * k - 1);
      term *= -(mu - odd * odd) / (Real(8 * k) * z);
      if (term == Real(0)) { ok = true; break; }
      if (std::abs(term) > last) break;
      last = std::abs(term);
      sum += term;
      if (std::abs(term) < eps * Real(0.25)) { ok = true; break; }
    }
    if (ok) return sum / std::sqrt(Real(2) * pi * z);
  }

  // Fallback: the ascending series with each term carried in log space.
  const Real l0 = nu * std::log(z / Real(2)) - std::lgamma(nu + Real(1)) - z;
  const Real lq = std::log(z * z / Real(4));
  Real lt = l0, sum = std::exp(l0);
  for (int k = 1; k < 100000; ++k) {
    lt += lq - std::log(Real(k) * (nu + Real(k)));
    const Real t = std::exp(lt);
    sum += t;
    if (Real(k) > z && t < std::numeric_limits<Real>::epsilon() * sum * Real(0.25)) return sum;
  }
  throw ConvergenceError("scaled I_nu series did not converge");
}

// I_nu(z).
template <typename Real>
Real bessel_i(Real nu, std::type_identity_t<Real> z) {
  detail::check_order(nu);
  detail::check_argument(z);
  if (z > Real(700)) throw std::overflow_error("I_nu(z) overflows for z > 700; use bessel_i_scaled");
  if (z <= Real(50) && z > Real(0))
    return std::pow(z / Real(2), nu) * detail::ascending_series(nu, z, -1);
  return bessel_i_scaled(nu, z) * std::exp(z);
}

// Coefficients A_j, B_j of
//   sqrt(z) J_nu(z) ~ sum_j (A_j sin z + B_j cos z) z^{-j},   j = 0..order.
template <typename Real>
std::pair<std::vector<Real>, std::vector<Real>> hankel_sin_cos_coefficients(Real nu, int order) {
  detail::check_order(nu);
  if (order < 0) throw DomainError("expansion order must be >= 0");
  const Real pi = std::numbers::pi_v<Real>;
  const Real phase = (nu / Real(2) + Real(0.25)) * pi;
  const Real sp = std::sin(phase), cp = std::cos(phase);
  const Real s = std::sqrt(Real(2) / pi);
  const Real mu = Real(4) * nu * nu;
  std::vector<Real> A(order + 1), B(order + 1);
  Real a = Real(1);
  for (int j = 0; j <= order; ++j) {
    if (j > 0) {
      const Real odd = Real(2 * j - 1);
      a *= (mu - odd * odd) / Real(8 * j);
    }
    Real pj = 0, qj = 0;
    if (j % 2 == 0)
      pj = ((j / 2) % 2 ? -a : a);
    else
      qj = (((j - 1) / 2) % 2 ? -a : a);
    A[j] = s * (pj * sp - qj * cp);
    B[j] = s * (pj * cp + qj * sp);
  }
  return {A, B};
}

// sum_{j<=order} (A_j sin z + B_j cos z) z^{-j}
template <typename Real>
Real hankel_partial_sum(Real nu, std::type_identity_t<Real> z, int order) {
  const auto [A, B] = hankel_sin_cos_coefficients(nu, order);
  const Real s = std::sin(z), c = std::cos(z);
  Real sum = 0, zp = 1;
  for (int j = 0; j <= order; ++j) {
    sum += (A[j] * s + B[j] * c) / zp;
    zp *= z;
  }
  return sum;
}

struct ZeroOptions {
  double residual_tol = 1e-12;
  int max_iter = 200;
};

// n-th positive zero of J_nu (n >= 1). McMahon's estimate seeds a Newton
// iteration that is safeguarded by bisection on a sign-change bracket.
template <typename Real>
Real bessel_zero(Real nu, int n, const ZeroOptions& opt = {}) {
  detail::check_order(nu);
  if (n < 1) throw DomainError("zero index must be >= 1");
  const Real pi = std::numbers::pi_v<Real>;
  const Real beta = (Real(n) + nu / Real(2) - Real(0.25)) * pi;
  const Real mu = Real(4) * nu * nu;
  Real guess = beta - (mu - Real(1)) / (Real(8) * beta);
  if (!(guess > Real(0))) guess = beta;

  auto J = [&](Real z) { return detail::j_value(nu, z, BesselLimits{}); };
  Real lo = std::max(guess - pi / Real(2), guess / Real(2));
  Real hi = guess + pi / Real(2);
  Real flo = J(lo), fhi = J(hi);
  for (int widen = 0; widen < 4 && flo * fhi > Real(0); ++widen) {
    lo = std::max(lo - pi / Real(8), lo / Real(2));
    hi += pi / Real(8);
    flo = J(lo);
    fhi = J(hi);
  }
  if (flo * fhi > Real(0))
    throw ConvergenceError("no sign change around the McMahon estimate for zero " +
                               std::to_string(n),
                           static_cast<double>(lo), static_cast<double>(hi));

  Real x = guess;
  if (!(x > lo && x < hi)) x = (lo + hi) / Real(2);
  const Real eps = std::numeric_limits<Real>::epsilon();
  for (int it = 0; it < opt.max_iter; ++it) {
    const BesselPair<Real> jp = bessel_j_with_derivative(nu, x);
    if (jp.value == Real(0)) return x;
    if ((jp.value > Real(0)) == (flo > Real(0))) {
      lo = x;
      flo = jp.value;
    } else {
      hi = x;
      fhi = jp.value;
    }
    Real next = x - jp.value / jp.derivative;
    if (!(next > lo && next < hi) || jp.derivative == Real(0)) next = (lo + hi) / Real(2);
    const Real step = std::abs(next - x);
    x = next;
    if (step <= Real(4) * eps * x || hi - lo <= Real(4) * eps * x) {
      if (std::abs(J(x)) <= Real(opt.residual_tol)) return x;
    }
  }
  throw ConvergenceError("zero " + std::to_string(n) + " did not converge",
                         static_cast<double>(lo), static_cast<double>(hi));
}

// The first n_zeros positive zeros, checked to be increasing with spacing
// close to pi.
template <typename Real>
std::vector<Real> bessel_zeros(Real nu, int n_zeros, const ZeroOptions& opt = {}) {
  if (n_zeros < 1) throw DomainError("need at least one zero");
  std::vector<Real> z(n_zeros);
  for (int n = 1; n <= n_zeros; ++n) {
    z[n - 1] = bessel_zero(nu, n, opt);
    if (n > 1) {
      const Real gap = z[n - 1] - z[n - 2];
      if (!(gap > Real(2) && gap < Real(4.5)))
        throw ConvergenceError("zero table failed the spacing check at n = " + std::to_string(n),
                               static_cast<double>(z[n - 2]), static_cast<double>(z[n - 1]));
    }
  }
  return z;
}

// d = sqrt(2) / |lambda^{1/2} J_{nu+1}(lambda)| for a zero lambda of J_nu.
template <typename Real>
Real norm_const(Real nu, std::type_identity_t<Real> lambda) {
  detail::check_order(nu);
  if (!(lambda > Real(0))) throw DomainError("zero must be positive");
  return std::sqrt(Real(2)) / std::abs(std::sqrt(lambda) * bessel_j(nu + Real(1), lambda));
}

// Integral of sqrt(z) J_nu(z) over [0, Z]. Built once per order; used for the
// exact expansion coefficients of step functions in the Lebesgue setting.
class SqrtBesselIntegral {
 public:
  explicit SqrtBesselIntegral(double nu);
  double operator()(double Z) const;
  double nu() const { return nu_; }

 private:
  double series(double Z) const;
  double tail(double Z) const;
  double nu_;
  double step_ = 0.5;
  double table_lo_ = 2.0;
  double table_hi_ = 80.0;
  double limit_;            // Abel limit of the integral as Z -> infinity
  std::vector<double> table_;
};

}  // namespace fbvar
