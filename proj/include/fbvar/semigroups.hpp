#pragma once

// Heat and Poisson semigroups of the Bessel operators, their kernels, the
// Weyl fractional time derivative and the free (whole half-line) heat kernel.
//
// Flavor::phi gives the Delta_nu semigroups on L^2(dm_nu), Flavor::psi the
// S_nu semigroups on L^2(dx); the kernels of the latter are the former times
// (xy)^{nu+1/2}.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbvar/grid.hpp"
#include "fbvar/spectral.hpp"

namespace fbvar {

inline constexpr const char* kSemigroupsVersion = "1.0.0";

struct TimeGrid {
  Eigen::VectorXd times;  // strictly decreasing, positive

  static TimeGrid log_uniform(double t_max, double t_min, int points);
  static TimeGrid from(const std::vector<double>& times);
  // copy with t inserted (no-op if already present)
  TimeGrid with_time(double t) const;
  int size() const { return static_cast<int>(times.size()); }
};

// m - 1 <= beta < m, i.e. m = floor(beta) + 1
struct FractionalOrder {
  double beta = 0.0;
  int m = 1;

  static FractionalOrder of(double beta);
  // (-1)^{m+1}
  double sign() const { return m % 2 == 1 ? 1.0 : -1.0; }
};

struct FamilySamples {
  TimeGrid time_grid;
  GridPtr grid;
  Eigen::MatrixXd values;  // time x node
  std::string label;
};

struct KernelOptions {
  double tail_tolerance = 1e-10;
};

struct KernelValue {
  double value;
  double tail_bound;
};

// multipliers per mode
double heat_factor(double t, double lambda);
double poisson_factor(double t, double lambda);
// t^beta d^beta/dt^beta e^{-t lambda} = (-1)^{m+1} (t lambda)^beta e^{-t lambda}
double weyl_poisson_factor(const FractionalOrder& order, double t, double lambda);

Eigen::VectorXd heat_multiplier(const SpectralBasis& b, double t);
Eigen::VectorXd poisson_multiplier(const SpectralBasis& b, double t);
// e^{-t lambda} through the subordination integral
//   (1/sqrt(pi)) int_0^inf e^{-v} v^{-1/2} e^{-t^2 lambda^2 / (4v)} dv,
// trapezoid in log v.
Eigen::VectorXd subordinated_poisson_multiplier(const SpectralBasis& b, double t);
Eigen::VectorXd weyl_poisson_multiplier(const SpectralBasis& b, const FractionalOrder& order, double t);

CoefficientVector heat_apply(double t, const CoefficientVector& c);
CoefficientVector poisson_apply(double t, const CoefficientVector& c);
CoefficientVector poisson_apply_subordinated(double t, const CoefficientVector& c);

// Upper estimate of sup_x |phi_n(x)| (or |Psi_n(x)|) at a point, valid for
// every n including modes beyond the basis.
double eigenfunction_bound(const SpectralBasis& b, Flavor flavor, double lambda, double x);
double eigenfunction_bound(double nu, Flavor flavor, double lambda, double x);

// Estimate of sum_{n > N} |m(lambda_n)| |e_n(x) e_n(y)| with lambda_n from
// McMahon's expansion. `m` must eventually decay.
double kernel_tail_estimate(const SpectralBasis& b, Flavor flavor, const std::function<double(double)>& m,
                            double x, double y);
// Same estimate for a basis of n_modes modes at order nu, without building it.
double kernel_tail_estimate(double nu, int n_modes, Flavor flavor, const std::function<double(double)>& m, double x,
                            double y);

// Truncated series sum_n m(lambda_n) e_n(x) e_n(y); throws ResolutionError
// when the tail estimate exceeds the tolerance.
KernelValue kernel_series(const SpectralBasis& b, Flavor flavor, const std::function<double(double)>& m, double x,
                          double y, const KernelOptions& opt = {});

KernelValue heat_kernel(const SpectralBasis& b, double t, double x, double y, const KernelOptions& opt = {});
KernelValue poisson_kernel(const SpectralBasis& b, double t, double x, double y, const KernelOptions& opt = {});
KernelValue poisson_kernel_subordinated(const SpectralBasis& b, double t, double x, double y,
                                        const KernelOptions& opt = {});
// S_nu kernels, summed over Psi_n
KernelValue s_nu_heat_kernel(const SpectralBasis& b, double t, double x, double y, const KernelOptions& opt = {});
KernelValue s_nu_poisson_kernel(const SpectralBasis& b, double t, double x, double y, const KernelOptions& opt = {});

// Smallest time on a log scale at which the heat (poisson = false) or Poisson
// kernel tail at (x, y) is below the tolerance.
double min_resolvable_time(const SpectralBasis& b, Flavor flavor, bool poisson, double x, double y,
                           const KernelOptions& opt = {});

// Family samples values(k, i) = sum_n m(t_k, lambda_n) c_n e_n(x_i).
FamilySamples multiplier_family(const CoefficientVector& c, const TimeGrid& times, const SampledBasis& sb,
                                const std::function<double(double, double)>& m, std::string label);
FamilySamples weyl_fractional_family(const FractionalOrder& order, const CoefficientVector& c, const TimeGrid& times,
                                     const SampledBasis& sb);
FamilySamples heat_family(const CoefficientVector& c, const TimeGrid& times, const SampledBasis& sb);

// Weyl derivative
//   D^beta h(t) = -Gamma(m - beta)^{-1} int_0^inf h^{(m)}(t + s) s^{m - beta - 1} ds
// given h^{(m)}. `decay` is the exponential rate of h^{(m)}; the integral is
// cut at s = 40 / decay.
double weyl_derivative(const std::function<double(double)>& h_m, const FractionalOrder& order, double t,
                       double decay = 1.0);
// D^beta e^{-lambda t} (-1)^{m+1} by quadrature; equals lambda^beta e^{-lambda t}.
double weyl_integral_check(double beta, double lambda, double t);

// (xy)^{-nu} / (2t) I_nu(xy / 2t) e^{-(x^2 + y^2) / 4t}
double free_heat_kernel(double nu, double t, double x, double y);

GridFunction maximal_function(const FamilySamples& s);

}  // namespace fbvar
