#include "fbvar/spectral.hpp"

#include <cmath>
#include <string>

#include "fbvar/errors.hpp"
#include "fbvar/parallel.hpp"

namespace fbvar {

SpectralBasis::SpectralBasis(double nu, int n_modes) : nu_(nu) {
  detail::check_order(nu);
  if (n_modes < 1) throw DomainError("basis needs at least one mode");
  const std::vector<double> z = bessel_zeros(nu, n_modes);
  zeros_ = Eigen::Map<const Eigen::VectorXd>(z.data(), n_modes);
  d_.resize(n_modes);
  for (int n = 0; n < n_modes; ++n) d_[n] = norm_const(nu, zeros_[n]);
}

double SpectralBasis::lambda(int n) const {
  if (n < 1 || n > size()) throw std::out_of_range("mode index " + std::to_string(n) + " outside 1.." + std::to_string(size()));
  return zeros_[n - 1];
}

double SpectralBasis::phi(int n, double x) const {
  const double lam = lambda(n);
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("eigenfunctions live on [0, 1]");
  return d_[n - 1] * std::pow(lam, nu_ + 0.5) * bessel_j_over_power(nu_, lam * x);
}

double SpectralBasis::psi(int n, double x) const {
  const double lam = lambda(n);
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("eigenfunctions live on [0, 1]");
  if (x == 0.0) {
    if (nu_ > -0.5) return 0.0;
    if (nu_ == -0.5) return d_[n - 1] * std::sqrt(2.0 / std::numbers::pi);
    throw std::overflow_error("Psi_n(0) is unbounded for nu < -1/2");
  }
  const double z = lam * x;
  return d_[n - 1] * std::sqrt(z) * bessel_j(nu_, z);
}

Eigen::MatrixXd SpectralBasis::sample(Flavor f, const Eigen::VectorXd& xs) const {
  Eigen::MatrixXd m(xs.size(), size());
  parallel_for(static_cast<int>(xs.size()), [&](int i) {
    for (int n = 1; n <= size(); ++n) m(i, n - 1) = eigenfunction(f, n, xs[i]);
  });
  return m;
}

MeasureTag SpectralBasis::natural_measure(Flavor f) const {
  return f == Flavor::phi ? MeasureTag::weighted(nu_) : MeasureTag::lebesgue();
}

const SqrtBesselIntegral& SpectralBasis::sqrt_bessel_integral() const {
  std::call_once(integral_once_, [this] { integral_ = std::make_unique<SqrtBesselIntegral>(nu_); });
  return *integral_;
}

BasisPtr make_basis(double nu, int n_modes) { return std::make_shared<const SpectralBasis>(nu, n_modes); }

double eigenfunction_phi(const SpectralBasis& b, int n, double x) { return b.phi(n, x); }
double eigenfunction_psi(const SpectralBasis& b, int n, double x) { return b.psi(n, x); }

SampledBasis::SampledBasis(BasisPtr basis, GridPtr grid, Flavor flavor)
    : basis_(std::move(basis)), grid_(std::move(grid)), flavor_(flavor) {
  m_ = basis_->sample(flavor_, grid_->nodes());
  w_ = grid_->measure_weights(basis_->natural_measure(flavor_));
}

CoefficientVector analyze(const GridFunction& f, BasisPtr basis, Flavor flavor, const MeasureTag& measure) {
  if (!(measure == basis->natural_measure(flavor)))
    throw DomainError(flavor == Flavor::phi ? "phi coefficients need the weighted measure of the same order"
                                            : "Psi coefficients need Lebesgue measure");
  return analyze(f, SampledBasis(basis, f.grid, flavor));
}

CoefficientVector analyze(const GridFunction& f, const SampledBasis& sb) {
  if (f.grid != sb.grid()) throw DomainError("function and sampled basis live on different grids");
  CoefficientVector c{sb.matrix().transpose() * sb.weights().cwiseProduct(f.values), sb.flavor(), sb.basis()};
  return c;
}

GridFunction synthesize(const CoefficientVector& c, GridPtr grid) {
  return synthesize(c, SampledBasis(c.basis, grid, c.flavor));
}

GridFunction synthesize(const CoefficientVector& c, const SampledBasis& sb) {
  if (c.basis != sb.basis() || c.flavor != sb.flavor()) throw DomainError("coefficient basis does not match");
  return {sb.grid(), sb.matrix() * c.values};
}

double synthesize_at(const CoefficientVector& c, double x) {
  // ascending n with Neumaier compensation
  double s = 0.0, comp = 0.0;
  for (int n = 1; n <= c.values.size(); ++n) {
    const double t = c.values[n - 1] * c.basis->eigenfunction(c.flavor, n, x);
    const double u = s + t;
    comp += std::abs(s) >= std::abs(t) ? (s - u) + t : (t - u) + s;
    s = u;
  }
  return s + comp;
}

CoefficientVector apply_operator_diagonal(const CoefficientVector& c, const Eigen::VectorXd& m) {
  if (m.size() != c.values.size()) throw DomainError("multiplier length does not match the basis");
  return {c.values.cwiseProduct(m), c.flavor, c.basis};
}

CoefficientVector step_function_coefficients(BasisPtr basis, Flavor flavor, const std::vector<StepPiece>& pieces) {
  const double nu = basis->nu();
  const int N = basis->size();
  for (const auto& p : pieces)
    if (!(p.a >= 0.0 && p.a < p.b && p.b <= 1.0)) throw DomainError("step pieces must satisfy 0 <= a < b <= 1");
  CoefficientVector c{Eigen::VectorXd::Zero(N), flavor, basis};
  const SqrtBesselIntegral* G = flavor == Flavor::psi ? &basis->sqrt_bessel_integral() : nullptr;
  parallel_for(N, [&](int k) {
    const double lam = basis->zeros()[k], d = basis->norm_consts()[k];
    double s = 0.0;
    for (const auto& p : pieces) {
      if (flavor == Flavor::phi) {
        // d/dx [x^{nu+1} J_{nu+1}(lambda x)] = lambda x^{nu+1} J_nu(lambda x)
        auto F = [&](double x) { return x == 0.0 ? 0.0 : std::pow(x, nu + 1.0) * bessel_j(nu + 1.0, lam * x); };
        s += p.height * d / std::sqrt(lam) * (F(p.b) - F(p.a));
      } else {
        s += p.height * d / lam * ((*G)(lam * p.b) - (*G)(lam * p.a));
      }
    }
    c.values[k] = s;
  });
  return c;
}

Eigen::MatrixXd gram_matrix(const SampledBasis& sb) {
  return sb.matrix().transpose() * sb.weights().asDiagonal() * sb.matrix();
}

}  // namespace fbvar
