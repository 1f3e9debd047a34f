#pragma once

// Fourier-Bessel eigenbases on (0, 1):
//   phi_n(x) = d_n lambda_n^{1/2} J_nu(lambda_n x) x^{-nu}   orthonormal in L^2(dm_nu)
//   Psi_n(x) = d_n (lambda_n x)^{1/2} J_nu(lambda_n x)       orthonormal in L^2(dx)
// with lambda_n the zeros of J_nu and d_n the normalizing constants.

#include <type_traits>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "fbvar/bessel.hpp"
#include "fbvar/grid.hpp"

namespace fbvar {

inline constexpr const char* kSpectralVersion = "1.0.0";

enum class Flavor { phi, psi };

class SpectralBasis {
 public:
  SpectralBasis(double nu, int n_modes);

  double nu() const { return nu_; }
  int size() const { return static_cast<int>(zeros_.size()); }
  const Eigen::VectorXd& zeros() const { return zeros_; }
  const Eigen::VectorXd& norm_consts() const { return d_; }
  // modes are numbered from 1
  double lambda(int n) const;

  double phi(int n, double x) const;
  double psi(int n, double x) const;
  double eigenfunction(Flavor f, int n, double x) const { return f == Flavor::phi ? phi(n, x) : psi(n, x); }

  // points x modes
  Eigen::MatrixXd sample(Flavor f, const Eigen::VectorXd& xs) const;
  MeasureTag natural_measure(Flavor f) const;

  // int_0^Z t^{1/2} J_nu(t) dt, built on first use
  const SqrtBesselIntegral& sqrt_bessel_integral() const;

 private:
  double nu_;
  Eigen::VectorXd zeros_;
  Eigen::VectorXd d_;
  mutable std::once_flag integral_once_;
  mutable std::unique_ptr<SqrtBesselIntegral> integral_;
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;
BasisPtr make_basis(double nu, int n_modes);

double eigenfunction_phi(const SpectralBasis& b, int n, double x);
double eigenfunction_psi(const SpectralBasis& b, int n, double x);

struct CoefficientVector {
  Eigen::VectorXd values;
  Flavor flavor = Flavor::phi;
  BasisPtr basis;
};

// A basis evaluated on the nodes of a grid together with the quadrature
// weights of the matching measure.
class SampledBasis {
 public:
  SampledBasis(BasisPtr basis, GridPtr grid, Flavor flavor);

  const BasisPtr& basis() const { return basis_; }
  const GridPtr& grid() const { return grid_; }
  Flavor flavor() const { return flavor_; }
  const Eigen::MatrixXd& matrix() const { return m_; }
  const Eigen::VectorXd& weights() const { return w_; }

 private:
  BasisPtr basis_;
  GridPtr grid_;
  Flavor flavor_;
  Eigen::MatrixXd m_;
  Eigen::VectorXd w_;
};

// Coefficients by quadrature. The measure must be m_nu (same nu) for phi
// and Lebesgue for psi.
CoefficientVector analyze(const GridFunction& f, BasisPtr basis, Flavor flavor, const MeasureTag& measure);
CoefficientVector analyze(const GridFunction& f, const SampledBasis& sb);

GridFunction synthesize(const CoefficientVector& c, GridPtr grid);
GridFunction synthesize(const CoefficientVector& c, const SampledBasis& sb);
double synthesize_at(const CoefficientVector& c, double x);

CoefficientVector apply_operator_diagonal(const CoefficientVector& c, const Eigen::VectorXd& multiplier);

// multiplier(n, lambda_n), n from 1
template <typename F>
  requires std::is_invocable_r_v<double, F, int, double>
CoefficientVector apply_operator_diagonal(const CoefficientVector& c, F&& multiplier) {
  Eigen::VectorXd m(c.values.size());
  for (int n = 1; n <= m.size(); ++n) m[n - 1] = multiplier(n, c.basis->lambda(n));
  return apply_operator_diagonal(c, m);
}

// Piecewise constant function: `height` on (a, b].
struct StepPiece {
  double a;
  double b;
  double height;
};

// Exact coefficients of a step function (no sampling, hence no aliasing).
CoefficientVector step_function_coefficients(BasisPtr basis, Flavor flavor, const std::vector<StepPiece>& pieces);

Eigen::MatrixXd gram_matrix(const SampledBasis& sb);

}  // namespace fbvar
