#pragma once

// Mesh sweeps over (x, y) certifying the size and regularity estimates of the
// kernels t -> t^beta d^beta/dt^beta P_t(x, y) in the variation norm, their
// S_nu counterparts, and the heat kernel envelopes.
//
// No constants are known for these estimates, so a check passes when the
// observed/bound ratios are finite and move by less than 10% when the mesh
// is doubled.

#include <array>
#include <string>
#include <vector>

#include "fbvar/semigroups.hpp"
#include "fbvar/spectral.hpp"

namespace fbvar {

inline constexpr const char* kKernelBoundsVersion = "1.0.0";

enum class RegionTag { lower, diagonal, upper };

// lower: y <= x/2, diagonal: x/2 < y <= min(1, 3x/2), upper: the rest
RegionTag region_of(double x, double y);
const char* region_name(RegionTag r);

// Time grid used for the variation norms: 200 log points on [1e-3, 10].
// For x != y every kernel here tends to 0 as t -> 0, and that limit is
// appended as a last sample.
struct NormTimes {
  double t_max = 10.0;
  double t_min = 1e-3;
  int points = 200;
  bool zero_limit = true;
};

struct BoundMesh {
  int n = 30;               // midpoint mesh (i + 1/2) / n in each variable
  double band = 0.02;       // pairs with |x - y| < band are skipped
  double h = 1e-4;          // central difference step
  double tolerance = 0.10;  // allowed relative change under mesh doubling
  double tail_tolerance = 1e-10;
  NormTimes times{};
};

struct RegionStat {
  int count = 0;
  double max_ratio = 0.0;
  double x = 0.0, y = 0.0, t = 0.0;  // witness; t is where |kernel| peaks
};

struct BoundReport {
  std::string name;
  double nu = 0.0, beta = 0.0, rho = 0.0;
  int mesh = 0, refined_mesh = 0, modes = 0;
  std::array<RegionStat, 3> coarse{}, refined{};
  double refinement_delta = 0.0;
  bool pass = false;
  std::string failure;  // empty on pass
  // size reports only: max of ||H(x,y)|| m_nu(B(x, |x-y|)) on both meshes
  double ball_product = 0.0, ball_product_refined = 0.0;
};

struct BoundSuite {
  BoundReport size, regularity, s_size, s_regularity;
};

// Right-hand sides of the size estimates, region picked from (x, y).
double size_bound_rhs(double nu, double x, double y);
double s_nu_size_bound_rhs(double nu, double x, double y);

// Smallest mode count (a multiple of 100) such that the tail of
// sum_n |m(lambda_n)| |e_n(x) e_n(y)| is below tol for all x, y in [x_lo, x_hi].
int required_modes(double nu, Flavor flavor, const std::function<double(double)>& m, double x_lo, double x_hi,
                   double tol);

// rho-variation of t -> t^beta d^beta/dt^beta P_t(x, y) over the time grid.
double e_rho_kernel_norm(double nu, double beta, double rho, double x, double y, const NormTimes& times = {},
                         double tail_tolerance = 1e-10);
double e_rho_kernel_norm(const SpectralBasis& b, double beta, double rho, double x, double y,
                         const NormTimes& times = {});

// All four reports from one sweep on meshes n and 2n.
BoundSuite bound_reports(double nu, double beta, double rho, const BoundMesh& mesh = {});
BoundReport size_bound_check(double nu, double beta, double rho, const BoundMesh& mesh = {});
BoundReport regularity_bound_check(double nu, double beta, double rho, const BoundMesh& mesh = {});
// {size, regularity} for the kernels (xy)^{nu+1/2} H(x, y)
std::array<BoundReport, 2> s_nu_bound_check(double nu, double beta, double rho, const BoundMesh& mesh = {});

// Heat kernel envelopes on Chebyshev meshes of (0, 1) with n and 2n nodes.
struct EnvelopeReport {
  std::string name;
  double nu = 0.0;
  int mesh = 0, refined_mesh = 0, modes = 0;
  double value = 0.0, refined_value = 0.0;  // the reported envelope
  double lo = 0.0, hi = 0.0;                // ratio range on the coarse mesh, where meaningful
  double refinement_delta = 0.0;
  bool pass = false;
  double x = 0.0, y = 0.0, t = 0.0;  // where the coarse maximum sits
};

struct EnvelopeOptions {
  int n = 20;
  double h = 1e-4;
  double tolerance = 0.10;
  double tail_tolerance = 1e-12;
  std::vector<double> times{0.05, 0.1, 0.5, 1.0, 2.0};
};

// W_t(x, y) over
//   (1+t)^{nu+2} (t+xy)^{-nu-1/2} min(1, (1-x)(1-y)/t) t^{-1/2} exp(-(x-y)^2/4t - lambda_1^2 t);
// value = max ratio / min ratio.
EnvelopeReport heat_two_sided_envelope(double nu, const EnvelopeOptions& opt = {});
double heat_two_sided_rhs(double nu, double lambda1, double t, double x, double y);

// max |d_x W_t(x, y)| (xy)^{nu+1/2} t exp(c (x-y)^2 / t)
EnvelopeReport heat_derivative_envelope(double nu, double c = 0.125, const EnvelopeOptions& opt = {});

// Fitted C in |W_t(x, y) - free W_t(x, y)| <= C t for x, y in the interval
// (0, 0.525625), which is (0, 1/2] dilated by (21/20)^2 around its centre.
struct ComparisonOptions {
  int n = 20;
  double tolerance = 0.10;
  double tail_tolerance = 1e-12;
  std::vector<double> times{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};
EnvelopeReport free_kernel_comparison(double nu, const ComparisonOptions& opt = {});

}  // namespace fbvar
