#pragma once

// Radial grids on (0, 1), the two reference measures and quadrature based
// norms of sampled functions.

#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace fbvar {

inline constexpr const char* kGridVersion = "1.0.0";

enum class MeasureKind { lebesgue, weighted };

// Lebesgue measure dx, or dm_nu(x) = x^{2 nu + 1} dx.
struct MeasureTag {
  MeasureKind kind = MeasureKind::lebesgue;
  double nu = 0.0;

  static MeasureTag lebesgue() { return {}; }
  static MeasureTag weighted(double nu);

  double density(double x) const;
  // exact measure of (a, b]
  double mass(double a, double b) const;
  bool operator==(const MeasureTag&) const = default;
};

enum class Grading { uniform, dyadic_both_ends };

// Composite Gauss-Legendre grid. Cells come from `uniform_cells` equal cells
// whose first (last) cell is split dyadically `levels_left` (`levels_right`)
// times toward 0 (toward 1).
struct GridSpec {
  int uniform_cells = 32;
  int points_per_cell = 16;
  int levels_left = 0;
  int levels_right = 0;
};

class RadialGrid {
 public:
  RadialGrid(std::vector<double> breakpoints, int points_per_cell);

  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  int points_per_cell() const { return ppc_; }
  int cells() const { return static_cast<int>(breaks_.size()) - 1; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // quadrature weights times the measure density at the nodes
  Eigen::VectorXd measure_weights(const MeasureTag& m) const;
  bool has_breakpoint(double x, double tol = 1e-14) const;

 private:
  std::vector<double> breaks_;
  int ppc_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(int n_cells, int points_per_cell, Grading grading);
GridPtr make_graded_grid(const GridSpec& spec);

// Grid used for spectral analysis at order nu: 32 x 16 Gauss points with
// enough dyadic levels at 0 that the first cell carries m_nu-mass < 1e-13,
// and 12 levels toward 1.
GridSpec reference_grid_spec(double nu);
GridPtr reference_grid(double nu);

struct GridFunction {
  GridPtr grid;
  Eigen::VectorXd values;

  template <typename F>
  static GridFunction sample(GridPtr g, F&& f) {
    GridFunction out{g, Eigen::VectorXd(g->size())};
    for (int i = 0; i < g->size(); ++i) out.values[i] = f(g->nodes()[i]);
    return out;
  }
};

double integrate(const GridFunction& f, const MeasureTag& m);
// p in [1, inf]; p = inf is the largest sample in absolute value
double lp_norm(const GridFunction& f, double p, const MeasureTag& m);
// sup_lambda lambda mu(|f| > lambda)^{1/p}. The sup is taken over the sampled
// values themselves, which is the limit of any refining lambda ladder.
double weak_lp_quasinorm(const GridFunction& f, double p, const MeasureTag& m);
double weak_l1_quasinorm(const GridFunction& f, const MeasureTag& m);

// m_nu of B(x, r) intersected with (0, 1)
double ball_measure(double nu, double x, double r);

}  // namespace fbvar
