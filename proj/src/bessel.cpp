#include "fbvar/bessel.hpp"

#include <cmath>

#include "fbvar/quadrature.hpp"

namespace fbvar {

SqrtBesselIntegral::SqrtBesselIntegral(double nu) : nu_(nu) {
  detail::check_order(nu);
  // Abel limit of int_0^Z t^{1/2} J_nu(t) dt (Weber's integral at mu = 1/2).
  limit_ = std::sqrt(2.0) * std::tgamma((nu + 1.5) / 2.0) / std::tgamma((nu + 0.5) / 2.0);
  const int cells = static_cast<int>(std::lround((table_hi_ - table_lo_) / step_));
  table_.resize(cells + 1);
  table_[0] = series(table_lo_);
  auto f = [nu](double z) { return std::sqrt(z) * detail::j_value(nu, z, BesselLimits{}); };
  for (int k = 0; k < cells; ++k) {
    const double a = table_lo_ + k * step_;
    table_[k + 1] = table_[k] + gauss_integrate(f, a, a + step_, 20);
  }
}

double SqrtBesselIntegral::series(double Z) const {
  if (Z == 0.0) return 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  // sum_k (-1)^k (Z/2)^{nu+2k} Z^{3/2} / (k! Gamma(nu+k+1) (nu+2k+3/2))
  const double q = -Z * Z / 4.0;
  double c = std::pow(Z / 2.0, nu_) * std::pow(Z, 1.5) / std::tgamma(nu_ + 1.0);
  double sum = c / (nu_ + 1.5);
  for (int k = 1; k < 200; ++k) {
    c *= q / (k * (nu_ + k));
    const double t = c / (nu_ + 2.0 * k + 1.5);
    sum += t;
    if (std::abs(t) < 0.25 * eps * std::abs(sum)) break;
  }
  return sum;
}

// Repeated integration by parts:
//   int t^{1/2-k} J_{nu+k} = t^{1/2-k} J_{nu+k+1} + (nu+2k+1/2) int t^{-1/2-k} J_{nu+k+1},
// summed until the terms stop decreasing. Valid for Z well above nu.
double SqrtBesselIntegral::tail(double Z) const {
  const double eps = std::numeric_limits<double>::epsilon();
  double jm = detail::j_value(nu_ + 1.0, Z, BesselLimits{});  // J_{nu+1}
  double j = detail::j_value(nu_ + 2.0, Z, BesselLimits{});   // J_{nu+2}
  double coef = 1.0, zp = std::sqrt(Z), sum = coef * zp * jm, last_mag = std::abs(coef * zp);
  for (int k = 1; k < 200; ++k) {
    coef *= nu_ + 2.0 * (k - 1) + 0.5;
    zp /= Z;
    const double mag = std::abs(coef * zp);
    if (mag > last_mag || mag < 0.25 * eps) break;
    last_mag = mag;
    sum += coef * zp * j;
    // advance J_{nu+k+1} -> J_{nu+k+2}
    const double mu = nu_ + k + 1.0;
    const double jn = 2.0 * mu / Z * j - jm;
    jm = j;
    j = jn;
  }
  return sum;
}

double SqrtBesselIntegral::operator()(double Z) const {
  if (!(Z >= 0.0)) throw DomainError("integral upper limit must be >= 0");
  if (Z <= table_lo_) return series(Z);
  if (Z >= table_hi_) return limit_ + tail(Z);
  const int k = std::min(static_cast<int>((Z - table_lo_) / step_), static_cast<int>(table_.size()) - 2);
  const double a = table_lo_ + k * step_;
  auto f = [this](double z) { return std::sqrt(z) * detail::j_value(nu_, z, BesselLimits{}); };
  return table_[k] + gauss_integrate(f, a, Z, 20);
}

}  // namespace fbvar
