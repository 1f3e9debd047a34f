#include "fbvar/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fbvar/errors.hpp"
#include "fbvar/quadrature.hpp"

namespace fbvar {

MeasureTag MeasureTag::weighted(double nu) {
  if (!(nu > -1.0)) throw DomainError("weighted measure needs nu > -1");
  return {MeasureKind::weighted, nu};
}

double MeasureTag::density(double x) const {
  return kind == MeasureKind::lebesgue ? 1.0 : std::pow(x, 2.0 * nu + 1.0);
}

double MeasureTag::mass(double a, double b) const {
  if (b <= a) return 0.0;
  if (kind == MeasureKind::lebesgue) return b - a;
  const double k = 2.0 * nu + 2.0;
  return (std::pow(b, k) - std::pow(a, k)) / k;
}

RadialGrid::RadialGrid(std::vector<double> breaks, int ppc) : breaks_(std::move(breaks)), ppc_(ppc) {
  if (ppc < 1 || ppc > 64) throw DomainError("points per cell must be in [1, 64]");
  if (breaks_.size() < 2) throw DomainError("grid needs at least one cell");
  for (size_t i = 1; i < breaks_.size(); ++i)
    if (!(breaks_[i] > breaks_[i - 1])) throw DomainError("breakpoints must increase strictly");
  if (breaks_.front() < 0.0 || breaks_.back() > 1.0) throw DomainError("grid must lie in [0, 1]");
  const GaussRule& g = gauss_legendre(ppc);
  const int n = cells() * ppc;
  nodes_.resize(n);
  weights_.resize(n);
  for (int c = 0; c < cells(); ++c) {
    const double a = breaks_[c], b = breaks_[c + 1];
    const double h = 0.5 * (b - a), m = 0.5 * (a + b);
    for (int i = 0; i < ppc; ++i) {
      nodes_[c * ppc + i] = m + h * g.nodes[i];
      weights_[c * ppc + i] = h * g.weights[i];
    }
  }
}

Eigen::VectorXd RadialGrid::measure_weights(const MeasureTag& m) const {
  if (m.kind == MeasureKind::lebesgue) return weights_;
  const double e = 2.0 * m.nu + 1.0;
  return weights_.binaryExpr(nodes_, [e](double w, double x) { return w * std::pow(x, e); });
}

bool RadialGrid::has_breakpoint(double x, double tol) const {
  auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x - tol);
  return it != breaks_.end() && std::abs(*it - x) <= tol;
}

GridPtr make_graded_grid(const GridSpec& s) {
  if (s.uniform_cells < 1) throw DomainError("need at least one uniform cell");
  if (s.levels_left < 0 || s.levels_right < 0 || s.levels_left > 1000 || s.levels_right > 1000)
    throw DomainError("dyadic levels must be in [0, 1000]");
  const double h = 1.0 / s.uniform_cells;
  std::vector<double> b;
  for (int i = 0; i <= s.uniform_cells; ++i) b.push_back(i * h);
  double p = h;
  for (int k = 1; k <= s.levels_left; ++k) b.push_back(p *= 0.5);
  p = h;
  for (int k = 1; k <= s.levels_right; ++k) b.push_back(1.0 - (p *= 0.5));
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return std::make_shared<RadialGrid>(std::move(b), s.points_per_cell);
}

GridPtr make_grid(int n_cells, int ppc, Grading grading) {
  if (n_cells < 1) throw DomainError("need at least one cell");
  if (grading == Grading::uniform) return make_graded_grid({n_cells, ppc, 0, 0});
  if (n_cells < 4) throw DomainError("dyadic_both_ends grading needs at least 4 cells");
  const int levels = std::max(1, n_cells / 4);
  return make_graded_grid({n_cells - 2 * levels, ppc, levels, levels});
}

GridSpec reference_grid_spec(double nu) {
  if (!(nu > -1.0)) throw DomainError("order must satisfy nu > -1");
  GridSpec s{32, 16, 12, 12};
  const double k = 2.0 * nu + 2.0;
  // smallest L with ((2^-L)/32)^k / k <= 1e-13
  const double need = (std::log(1e-13 * k) / k + std::log(32.0)) / std::log(0.5);
  s.levels_left = std::clamp(static_cast<int>(std::ceil(need)), 12, 1000);
  return s;
}

GridPtr reference_grid(double nu) { return make_graded_grid(reference_grid_spec(nu)); }

double integrate(const GridFunction& f, const MeasureTag& m) {
  return f.grid->measure_weights(m).dot(f.values);
}

double lp_norm(const GridFunction& f, double p, const MeasureTag& m) {
  if (std::isinf(p) && p > 0) return f.values.cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw DomainError("lp_norm needs p >= 1");
  const Eigen::VectorXd w = f.grid->measure_weights(m);
  if (p == 1.0) return w.dot(f.values.cwiseAbs());
  if (p == 2.0) return std::sqrt(w.dot(f.values.cwiseAbs2()));
  return std::pow(w.dot(f.values.cwiseAbs().array().pow(p).matrix()), 1.0 / p);
}

double weak_lp_quasinorm(const GridFunction& f, double p, const MeasureTag& m) {
  if (!(p >= 1.0) || std::isinf(p)) throw DomainError("weak Lp needs 1 <= p < inf");
  const Eigen::VectorXd w = f.grid->measure_weights(m);
  const int n = f.grid->size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return std::abs(f.values[a]) > std::abs(f.values[b]); });
  // Each node stands for the middle of its quadrature cell, so the level set
  // just below a sampled value v counts half the weight of the last node at v.
  double best = 0.0, mass = 0.0;
  for (int k = 0; k < n; ++k) {
    const double v = std::abs(f.values[idx[k]]);
    mass += w[idx[k]];
    if (k + 1 < n && std::abs(f.values[idx[k + 1]]) == v) continue;
    if (v == 0.0) break;
    best = std::max(best, v * std::pow(mass - 0.5 * w[idx[k]], 1.0 / p));
  }
  return best;
}

double weak_l1_quasinorm(const GridFunction& f, const MeasureTag& m) { return weak_lp_quasinorm(f, 1.0, m); }

double ball_measure(double nu, double x, double r) {
  if (!(nu > -1.0)) throw DomainError("order must satisfy nu > -1");
  if (!(x >= 0.0 && x <= 1.0) || !(r >= 0.0)) throw DomainError("ball needs x in [0,1], r >= 0");
  return MeasureTag::weighted(nu).mass(std::max(0.0, x - r), std::min(1.0, x + r));
}

}  // namespace fbvar
