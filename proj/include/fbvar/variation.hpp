#pragma once

// Fluctuation functionals of a sampled family t -> g(t): rho-variation,
// oscillation, lambda-jumps, short variation, plus Littlewood-Paley-Stein
// g-functions.
//
// Samples are always ordered by decreasing time, as produced by TimeGrid.

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fbvar/grid.hpp"
#include "fbvar/semigroups.hpp"
#include "fbvar/spectral.hpp"

namespace fbvar {

inline constexpr const char* kVariationVersion = "1.0.0";

struct VariationResult {
  double value = 0.0;
  std::vector<int> witness;  // sample indices of an optimal subsequence
};

struct VariationOptions {
  // rho in (1, 2] is outside the range where the variation operators are
  // bounded; it is only computed when explicitly allowed
  bool allow_unsupported_regime = false;
};

namespace detail {
VariationResult rho_variation_impl(const double* g, int n, double rho, const VariationOptions& opt);
int jump_count_impl(const double* g, int n, double lambda);
}  // namespace detail

// sup over subsequences of (sum_j |g(e_j) - g(e_{j+1})|^rho)^{1/rho}, exact on
// the samples. Dynamic programming, O(M^2).
template <typename Derived>
VariationResult rho_variation(const Eigen::DenseBase<Derived>& g, double rho, const VariationOptions& opt = {}) {
  const Eigen::VectorXd v = g.derived().template cast<double>().reshaped();
  return detail::rho_variation_impl(v.data(), static_cast<int>(v.size()), rho, opt);
}

// Largest number of pairs s_1 < t_1 <= s_2 < t_2 <= ... with
// |g(t_i) - g(s_i)| > lambda.
template <typename Derived>
int jump_count(const Eigen::DenseBase<Derived>& g, double lambda) {
  const Eigen::VectorXd v = g.derived().template cast<double>().reshaped();
  return detail::jump_count_impl(v.data(), static_cast<int>(v.size()), lambda);
}

// Brackets [t_{j+1}, t_j] of a fixed decreasing sequence, as index ranges
// into a time grid. A sample sitting on a bracket end belongs to both
// neighbouring brackets.
struct BracketSpec {
  std::vector<double> sequence;
  std::vector<std::pair<int, int>> ranges;  // [first, last], first > last means empty
};

BracketSpec make_brackets(const TimeGrid& times, const std::vector<double>& sequence);

// (sum_j (max - min over bracket j)^2)^{1/2}
template <typename Derived>
double oscillation(const Eigen::DenseBase<Derived>& g, const BracketSpec& br) {
  const Eigen::VectorXd v = g.derived().template cast<double>().reshaped();
  double s = 0.0;
  for (const auto& [a, b] : br.ranges) {
    if (a > b) continue;
    const double r = v.segment(a, b - a + 1).maxCoeff() - v.segment(a, b - a + 1).minCoeff();
    s += r * r;
  }
  return std::sqrt(s);
}

// Dyadic block k of a time t: t in (2^{-k}, 2^{-k+1}].
int dyadic_block(double t);

// (sum_k V_k^2)^{1/2}, V_k the 2-variation over the samples of block k.
double short_variation(const Eigen::VectorXd& g, const TimeGrid& times);

// Littlewood-Paley-Stein function
//   g_gamma f(x) = (int_0^inf |t^gamma d^gamma/dt^gamma P_t f(x)|^2 dt/t)^{1/2}
// by the trapezoid rule in log t (exponentially convergent here).
struct GFunctionOptions {
  double log_step = 0.1;
  double cutoff = 1e-16;  // relative size of the integrand at the ends
};
double g_function(const CoefficientVector& c, double gamma, double x, const GFunctionOptions& opt = {});
GridFunction g_function_field(const CoefficientVector& c, double gamma, const SampledBasis& sb,
                              const GFunctionOptions& opt = {});
// Gamma(2 gamma) / 2^{2 gamma}
double g_function_constant(double gamma);

struct RhoVariationSpec {
  double rho;
  VariationOptions options{};
};
struct OscillationSpec {
  BracketSpec brackets;
};
struct JumpSpec {
  double lambda;
};
struct ShortVariationSpec {};
using FunctionalSpec = std::variant<RhoVariationSpec, OscillationSpec, JumpSpec, ShortVariationSpec>;

// The functional applied at every node (column) of a family.
GridFunction variation_field(const FamilySamples& s, const FunctionalSpec& spec);

}  // namespace fbvar
