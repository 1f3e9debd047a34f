#include "fbvar/kernel_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fbvar/errors.hpp"
#include "fbvar/grid.hpp"
#include "fbvar/parallel.hpp"
#include "fbvar/variation.hpp"

namespace fbvar {

namespace {

constexpr int kChunk = 48;

Eigen::VectorXd midpoint_mesh(int n) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = (i + 0.5) / n;
  return x;
}

// Chebyshev points of (0, len), clustered at both ends
Eigen::VectorXd chebyshev_mesh(int n, double len = 1.0) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = len * 0.5 * (1.0 - std::cos(std::numbers::pi * (i + 0.5) / n));
  return x;
}

TimeGrid norm_grid(const NormTimes& nt) { return TimeGrid::log_uniform(nt.t_max, nt.t_min, nt.points); }

Eigen::MatrixXd weyl_multipliers(const SpectralBasis& b, const FractionalOrder& o, const Eigen::VectorXd& times) {
  Eigen::MatrixXd M(times.size(), b.size());
  for (int k = 0; k < times.size(); ++k)
    for (int n = 0; n < b.size(); ++n) M(k, n) = weyl_poisson_factor(o, times[k], b.zeros()[n]);
  // subnormal entries make the products several times slower
  M = M.unaryExpr([](double v) { return std::abs(v) < 1e-200 ? 0.0 : v; });
  return M;
}

struct ColumnNorm {
  double value;
  double t;
};

// rho-variation of one time column, with the t -> 0 limit appended
ColumnNorm column_norm(const double* col, const Eigen::VectorXd& times, double rho, bool zero_limit) {
  const int T = static_cast<int>(times.size());
  Eigen::VectorXd v(T + (zero_limit ? 1 : 0));
  int peak = 0;
  for (int k = 0; k < T; ++k) {
    v[k] = col[k];
    if (std::abs(col[k]) > std::abs(col[peak])) peak = k;
  }
  if (zero_limit) v[T] = 0.0;
  return {rho_variation(v, rho).value, times[peak]};
}

void check_order(double nu, double beta, double rho) {
  if (!(nu > -1.0)) throw DomainError("order must satisfy nu > -1 (got " + std::to_string(nu) + ")");
  if (!(beta >= 0.0)) throw DomainError("beta must be >= 0");
  if (!(rho > 2.0)) throw DomainError("rho must exceed 2 for the kernel estimates");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// norms of H, d_x H and d_x (xy)^{nu+1/2} H at every mesh pair
struct Sweep {
  Eigen::VectorXd xs;
  Eigen::MatrixXd nK, nD, nDS;
  Eigen::MatrixXd tK, tD, tDS;
  std::vector<std::pair<int, int>> pairs;  // ordered pairs that were computed
};

Sweep run_sweep(const SpectralBasis& b, const FractionalOrder& o, double rho, int n, const BoundMesh& opt) {
  Sweep s;
  s.xs = midpoint_mesh(n);
  const double h = opt.h, a = b.nu() + 0.5;
  const Eigen::VectorXd xp = s.xs.array() + h, xm = s.xs.array() - h;
  const Eigen::MatrixXd P0 = b.sample(Flavor::phi, s.xs);
  const Eigen::MatrixXd Pp = b.sample(Flavor::phi, xp);
  const Eigen::MatrixXd Pm = b.sample(Flavor::phi, xm);
  const TimeGrid tg = norm_grid(opt.times);
  const Eigen::MatrixXd M = weyl_multipliers(b, o, tg.times);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::MatrixXd* m : {&s.nK, &s.nD, &s.nDS, &s.tK, &s.tD, &s.tDS}) m->setConstant(n, n, nan);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && std::abs(s.xs[i] - s.xs[j]) >= opt.band * (1 - 1e-12)) s.pairs.emplace_back(i, j);

  const int P = static_cast<int>(s.pairs.size());
  const int chunks = (P + kChunk - 1) / kChunk;
  const int N = b.size();
  parallel_for(chunks, [&](int c) {
    const int first = c * kChunk, cnt = std::min(kChunk, P - first);
    Eigen::MatrixXd C0(N, cnt), Cp(N, cnt), Cm(N, cnt);
    for (int q = 0; q < cnt; ++q) {
      const auto [i, j] = s.pairs[first + q];
      C0.col(q) = P0.row(i).cwiseProduct(P0.row(j)).transpose();
      Cp.col(q) = Pp.row(i).cwiseProduct(P0.row(j)).transpose();
      Cm.col(q) = Pm.row(i).cwiseProduct(P0.row(j)).transpose();
    }
    const Eigen::MatrixXd G0 = M * C0, Gp = M * Cp, Gm = M * Cm;
    Eigen::VectorXd d(tg.size());
    for (int q = 0; q < cnt; ++q) {
      const auto [i, j] = s.pairs[first + q];
      if (i < j) {
        const ColumnNorm k = column_norm(G0.col(q).data(), tg.times, rho, opt.times.zero_limit);
        s.nK(i, j) = s.nK(j, i) = k.value;
        s.tK(i, j) = s.tK(j, i) = k.t;
      }
      d = (Gp.col(q) - Gm.col(q)) / (2 * h);
      const ColumnNorm dk = column_norm(d.data(), tg.times, rho, opt.times.zero_limit);
      s.nD(i, j) = dk.value;
      s.tD(i, j) = dk.t;
      const double y = s.xs[j];
      d = std::pow(y, a) * (std::pow(xp[i], a) * Gp.col(q) - std::pow(xm[i], a) * Gm.col(q)) / (2 * h);
      const ColumnNorm ds = column_norm(d.data(), tg.times, rho, opt.times.zero_limit);
      s.nDS(i, j) = ds.value;
      s.tDS(i, j) = ds.t;
    }
  });
  return s;
}

enum class Kind { size, regularity, s_size, s_regularity };

struct MeshStats {
  std::array<RegionStat, 3> regions{};
  double ball = 0.0;
};

MeshStats collect(const Sweep& s, double nu, Kind kind) {
  MeshStats out;
  const double a = nu + 0.5;
  for (const auto& [i, j] : s.pairs) {
    const double x = s.xs[i], y = s.xs[j], gap = std::abs(x - y);
    double r = 0.0, t = 0.0;
    switch (kind) {
      case Kind::size:
        r = s.nK(i, j) / size_bound_rhs(nu, x, y);
        t = s.tK(i, j);
        out.ball = std::max(out.ball, s.nK(i, j) * ball_measure(nu, x, gap));
        break;
      case Kind::regularity:
        r = (s.nD(i, j) + s.nD(j, i)) * gap * gap * std::pow(x * y, a);
        t = s.tD(i, j);
        break;
      case Kind::s_size:
        r = std::pow(x * y, a) * s.nK(i, j) / s_nu_size_bound_rhs(nu, x, y);
        t = s.tK(i, j);
        break;
      case Kind::s_regularity:
        r = (s.nDS(i, j) + s.nDS(j, i)) * gap * gap;
        t = s.tDS(i, j);
        break;
    }
    RegionStat& st = out.regions[static_cast<int>(region_of(x, y))];
    ++st.count;
    if (!(r <= st.max_ratio)) {  // also lets NaN through, so it shows up
      st.max_ratio = r;
      st.x = x;
      st.y = y;
      st.t = t;
    }
  }
  return out;
}

BoundReport make_report(const std::string& name, double nu, double beta, double rho, int modes, const BoundMesh& mesh,
                        const MeshStats& coarse, const MeshStats& fine) {
  BoundReport r;
  r.name = name;
  r.nu = nu;
  r.beta = beta;
  r.rho = rho;
  r.mesh = mesh.n;
  r.refined_mesh = 2 * mesh.n;
  r.modes = modes;
  r.coarse = coarse.regions;
  r.refined = fine.regions;
  r.ball_product = coarse.ball;
  r.ball_product_refined = fine.ball;
  r.pass = true;
  for (int k = 0; k < 3; ++k) {
    const RegionStat &c = coarse.regions[k], &f = fine.regions[k];
    if (c.count == 0 || f.count == 0) continue;
    const char* reg = region_name(static_cast<RegionTag>(k));
    if (!std::isfinite(c.max_ratio) || !std::isfinite(f.max_ratio) || !(c.max_ratio > 0.0)) {
      r.pass = false;
      r.failure = std::string("region ") + reg + ": ratio " + fmt(c.max_ratio) + " not finite at (x,y,t)=(" +
                  fmt(c.x) + "," + fmt(c.y) + "," + fmt(c.t) + ")";
      r.refinement_delta = INFINITY;
      return r;
    }
    const double d = std::abs(f.max_ratio - c.max_ratio) / c.max_ratio;
    if (d > r.refinement_delta) {
      r.refinement_delta = d;
      if (d > mesh.tolerance) {
        r.pass = false;
        r.failure = std::string("region ") + reg + ": ratio moved " + fmt(100 * d) + "% under refinement, from " +
                    fmt(c.max_ratio) + " to " + fmt(f.max_ratio) + " at (x,y,t)=(" + fmt(f.x) + "," + fmt(f.y) + "," +
                    fmt(f.t) + ")";
      }
    }
  }
  return r;
}

}  // namespace

RegionTag region_of(double x, double y) {
  if (y <= x / 2) return RegionTag::lower;
  if (y <= std::min(1.0, 1.5 * x)) return RegionTag::diagonal;
  return RegionTag::upper;
}

const char* region_name(RegionTag r) {
  switch (r) {
    case RegionTag::lower:
      return "lower";
    case RegionTag::diagonal:
      return "diagonal";
    default:
      return "upper";
  }
}

double size_bound_rhs(double nu, double x, double y) {
  switch (region_of(x, y)) {
    case RegionTag::lower:
      return std::pow(x, -2 * (nu + 1));
    case RegionTag::diagonal:
      return std::pow(x * y, -nu - 0.5) / std::abs(x - y);
    default:
      return std::pow(y, -2 * (nu + 1));
  }
}

double s_nu_size_bound_rhs(double nu, double x, double y) {
  switch (region_of(x, y)) {
    case RegionTag::lower:
      return std::pow(y, nu + 0.5) / std::pow(x, nu + 1.5);
    case RegionTag::diagonal:
      return 1.0 / std::abs(x - y);
    default:
      return std::pow(x, nu + 0.5) / std::pow(y, nu + 1.5);
  }
}

int required_modes(double nu, Flavor flavor, const std::function<double(double)>& m, double x_lo, double x_hi,
                   double tol) {
  // the pointwise eigenfunction bound is largest at one of the ends, and
  // B(x)B(y) <= B(x_lo)^2 + B(x_hi)^2
  auto tail = [&](int N) {
    return kernel_tail_estimate(nu, N, flavor, m, x_lo, x_lo) + kernel_tail_estimate(nu, N, flavor, m, x_hi, x_hi);
  };
  int hi = 100;
  while (tail(hi) > tol) {
    hi *= 2;
    if (hi > (1 << 20)) throw ResolutionError("no mode count below 2^20 resolves the kernel", tail(hi / 2));
  }
  int lo = hi / 2;  // tail(lo) > tol unless hi == 100
  if (hi == 100) return 100;
  while (hi - lo > 100) {
    const int mid = (lo + hi) / 200 * 100;
    if (mid <= lo || mid >= hi) break;
    (tail(mid) <= tol ? hi : lo) = mid;
  }
  return hi;
}

double e_rho_kernel_norm(const SpectralBasis& b, double beta, double rho, double x, double y, const NormTimes& nt) {
  check_order(b.nu(), beta, rho);
  if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)) throw DomainError("kernel points must lie in (0, 1)");
  if (x == y) throw DomainError("the kernel norm needs x != y");
  const FractionalOrder o = FractionalOrder::of(beta);
  const double tail = kernel_tail_estimate(
      b, Flavor::phi, [&](double l) { return weyl_poisson_factor(o, nt.t_min, l); }, x, y);
  if (!(tail <= 1e-10))
    throw ResolutionError("kernel series tail " + fmt(tail) + " too large at t = " + fmt(nt.t_min) +
                              "; increase N (now " + std::to_string(b.size()) + ")",
                          tail);
  const TimeGrid tg = norm_grid(nt);
  Eigen::VectorXd v(b.size());
  for (int n = 1; n <= b.size(); ++n) v[n - 1] = b.phi(n, x) * b.phi(n, y);
  const Eigen::VectorXd k = weyl_multipliers(b, o, tg.times) * v;
  return column_norm(k.data(), tg.times, rho, nt.zero_limit).value;
}

double e_rho_kernel_norm(double nu, double beta, double rho, double x, double y, const NormTimes& nt,
                         double tail_tolerance) {
  check_order(nu, beta, rho);
  const FractionalOrder o = FractionalOrder::of(beta);
  const int N = required_modes(
      nu, Flavor::phi, [&](double l) { return weyl_poisson_factor(o, nt.t_min, l); }, std::min(x, y),
      std::max(x, y), tail_tolerance);
  return e_rho_kernel_norm(*make_basis(nu, N), beta, rho, x, y, nt);
}

BoundSuite bound_reports(double nu, double beta, double rho, const BoundMesh& mesh) {
  check_order(nu, beta, rho);
  if (mesh.n < 2) throw DomainError("mesh needs at least 2 points per side");
  const FractionalOrder o = FractionalOrder::of(beta);
  const int fine = 2 * mesh.n;
  const double x_lo = 0.5 / fine - mesh.h, x_hi = 1.0 - 0.5 / fine + mesh.h;
  const int N = required_modes(
      nu, Flavor::phi, [&](double l) { return weyl_poisson_factor(o, mesh.times.t_min, l); }, x_lo, x_hi,
      mesh.tail_tolerance);
  const BasisPtr b = make_basis(nu, N);
  const Sweep sc = run_sweep(*b, o, rho, mesh.n, mesh);
  const Sweep sf = run_sweep(*b, o, rho, fine, mesh);
  auto report = [&](const std::string& name, Kind k) {
    return make_report(name, nu, beta, rho, N, mesh, collect(sc, nu, k), collect(sf, nu, k));
  };
  return {report("size", Kind::size), report("regularity", Kind::regularity), report("s_nu size", Kind::s_size),
          report("s_nu regularity", Kind::s_regularity)};
}

BoundReport size_bound_check(double nu, double beta, double rho, const BoundMesh& mesh) {
  return bound_reports(nu, beta, rho, mesh).size;
}

BoundReport regularity_bound_check(double nu, double beta, double rho, const BoundMesh& mesh) {
  return bound_reports(nu, beta, rho, mesh).regularity;
}

std::array<BoundReport, 2> s_nu_bound_check(double nu, double beta, double rho, const BoundMesh& mesh) {
  BoundSuite s = bound_reports(nu, beta, rho, mesh);
  return {s.s_size, s.s_regularity};
}

// ---------------------------------------------------------------- envelopes

double heat_two_sided_rhs(double nu, double lambda1, double t, double x, double y) {
  return std::pow(1 + t, nu + 2) / std::pow(t + x * y, nu + 0.5) * std::min(1.0, (1 - x) * (1 - y) / t) /
         std::sqrt(t) * std::exp(-(x - y) * (x - y) / (4 * t) - lambda1 * lambda1 * t);
}

namespace {

BasisPtr heat_basis(double nu, double t_min, double x_lo, double x_hi, double tol) {
  const int N = required_modes(
      nu, Flavor::phi, [t_min](double l) { return heat_factor(t_min, l); }, x_lo, x_hi, tol);
  return make_basis(nu, N);
}

struct Extreme {
  double lo = INFINITY, hi = -INFINITY;
  double x = 0, y = 0, t = 0;
  void add(double v, double xx, double yy, double tt) {
    lo = std::min(lo, v);
    if (v > hi) {
      hi = v;
      x = xx;
      y = yy;
      t = tt;
    }
  }
};

void check_nu(double nu) {
  if (!(nu > -1.0)) throw DomainError("order must satisfy nu > -1 (got " + std::to_string(nu) + ")");
}

EnvelopeReport finish(EnvelopeReport r, const Extreme& c, double coarse, double fine, double tol) {
  r.value = coarse;
  r.refined_value = fine;
  r.lo = c.lo;
  r.hi = c.hi;
  r.x = c.x;
  r.y = c.y;
  r.t = c.t;
  r.refinement_delta = std::abs(fine - coarse) / std::abs(coarse);
  r.pass = std::isfinite(coarse) && std::isfinite(fine) && coarse > 0.0 && r.refinement_delta <= tol;
  return r;
}

}  // namespace

EnvelopeReport heat_two_sided_envelope(double nu, const EnvelopeOptions& opt) {
  check_nu(nu);
  const double t_min = *std::min_element(opt.times.begin(), opt.times.end());
  const Eigen::VectorXd fine_x = chebyshev_mesh(2 * opt.n);
  const BasisPtr b = heat_basis(nu, t_min, fine_x[0], fine_x[fine_x.size() - 1], opt.tail_tolerance);
  const double l1 = b->lambda(1);
  auto run = [&](int n) {
    const Eigen::VectorXd xs = chebyshev_mesh(n);
    const Eigen::MatrixXd P = b->sample(Flavor::phi, xs);
    Extreme e;
    for (double t : opt.times) {
      Eigen::VectorXd m(b->size());
      for (int k = 0; k < b->size(); ++k) m[k] = heat_factor(t, b->zeros()[k]);
      const Eigen::MatrixXd W = P * m.asDiagonal() * P.transpose();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) e.add(W(i, j) / heat_two_sided_rhs(nu, l1, t, xs[i], xs[j]), xs[i], xs[j], t);
    }
    return e;
  };
  const Extreme c = run(opt.n), f = run(2 * opt.n);
  EnvelopeReport r;
  r.name = "heat two-sided";
  r.nu = nu;
  r.mesh = opt.n;
  r.refined_mesh = 2 * opt.n;
  r.modes = b->size();
  r = finish(r, c, c.hi / c.lo, f.hi / f.lo, opt.tolerance);
  if (!(c.lo > 0.0) || !(f.lo > 0.0)) r.pass = false;
  return r;
}

EnvelopeReport heat_derivative_envelope(double nu, double c, const EnvelopeOptions& opt) {
  check_nu(nu);
  const double t_min = *std::min_element(opt.times.begin(), opt.times.end());
  const Eigen::VectorXd fine_x = chebyshev_mesh(2 * opt.n);
  if (!(fine_x[0] > opt.h)) throw DomainError("mesh too fine for the difference step");
  const BasisPtr b =
      heat_basis(nu, t_min, fine_x[0] - opt.h, fine_x[fine_x.size() - 1] + opt.h, opt.tail_tolerance);
  const double a = nu + 0.5;
  auto run = [&](int n) {
    const Eigen::VectorXd xs = chebyshev_mesh(n);
    const Eigen::MatrixXd P = b->sample(Flavor::phi, xs);
    const Eigen::MatrixXd D =
        (b->sample(Flavor::phi, xs.array() + opt.h) - b->sample(Flavor::phi, xs.array() - opt.h)) / (2 * opt.h);
    Extreme e;
    for (double t : opt.times) {
      Eigen::VectorXd m(b->size());
      for (int k = 0; k < b->size(); ++k) m[k] = heat_factor(t, b->zeros()[k]);
      const Eigen::MatrixXd W = D * m.asDiagonal() * P.transpose();  // d_x W_t(x_i, x_j)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double g = xs[i] - xs[j];
          e.add(std::abs(W(i, j)) * std::pow(xs[i] * xs[j], a) * t * std::exp(c * g * g / t), xs[i], xs[j], t);
        }
    }
    return e;
  };
  const Extreme co = run(opt.n), f = run(2 * opt.n);
  EnvelopeReport r;
  r.name = "heat x-derivative";
  r.nu = nu;
  r.mesh = opt.n;
  r.refined_mesh = 2 * opt.n;
  r.modes = b->size();
  return finish(r, co, co.hi, f.hi, opt.tolerance);
}

EnvelopeReport free_kernel_comparison(double nu, const ComparisonOptions& opt) {
  check_nu(nu);
  const double len = 0.25 + 0.25 * (21.0 / 20.0) * (21.0 / 20.0);  // right end of the dilated (0, 1/2]
  const double t_min = *std::min_element(opt.times.begin(), opt.times.end());
  const Eigen::VectorXd fine_x = chebyshev_mesh(2 * opt.n, len);
  const BasisPtr b = heat_basis(nu, t_min, fine_x[0], fine_x[fine_x.size() - 1], opt.tail_tolerance);
  auto run = [&](int n) {
    const Eigen::VectorXd xs = chebyshev_mesh(n, len);
    const Eigen::MatrixXd P = b->sample(Flavor::phi, xs);
    Extreme e;
    for (double t : opt.times) {
      Eigen::VectorXd m(b->size());
      for (int k = 0; k < b->size(); ++k) m[k] = heat_factor(t, b->zeros()[k]);
      const Eigen::MatrixXd W = P * m.asDiagonal() * P.transpose();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          e.add(std::abs(W(i, j) - free_heat_kernel(nu, t, xs[i], xs[j])) / t, xs[i], xs[j], t);
    }
    return e;
  };
  const Extreme c = run(opt.n), f = run(2 * opt.n);
  EnvelopeReport r;
  r.name = "heat vs free kernel";
  r.nu = nu;
  r.mesh = opt.n;
  r.refined_mesh = 2 * opt.n;
  r.modes = b->size();
  return finish(r, c, c.hi, f.hi, opt.tolerance);
}

}  // namespace fbvar
