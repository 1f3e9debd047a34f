#pragma once

#include <Eigen/Dense>

namespace fbvar {

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Golub-Welsch eigenvalues, polished by Newton on P_n. Cached per n.
const GaussRule& gauss_legendre(int n);

// Integral of f over [a, b] with the n-point rule.
template <typename F>
double gauss_integrate(F&& f, double a, double b, int n = 16) {
  const GaussRule& g = gauss_legendre(n);
  const double h = 0.5 * (b - a), m = 0.5 * (b + a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += g.weights[i] * f(m + h * g.nodes[i]);
  return s * h;
}

}  // namespace fbvar
