#include "fbvar/variation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbvar/errors.hpp"
#include "fbvar/parallel.hpp"

namespace fbvar {

namespace detail {

namespace {

template <typename Pow>
VariationResult variation_dp(const double* g, int n, double rho, Pow pw) {
  // B[i]: best sum over subsequences ending at i. len[i] counts the points,
  // used to prefer the shorter witness on ties.
  std::vector<double> B(n, 0.0);
  std::vector<int> prev(n, -1), len(n, 1);
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      const double cand = B[j] + pw(std::abs(g[i] - g[j]));
      if (cand > B[i] || (cand == B[i] && cand > 0.0 && len[j] + 1 < len[i])) {
        B[i] = cand;
        prev[i] = j;
        len[i] = len[j] + 1;
      }
    }
  }
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (B[i] > B[best] || (B[i] == B[best] && len[i] < len[best])) best = i;
  VariationResult r;
  if (B[best] == 0.0) return r;
  for (int i = best; i >= 0; i = prev[i]) r.witness.push_back(i);
  std::reverse(r.witness.begin(), r.witness.end());
  r.value = std::pow(B[best], 1.0 / rho);
  return r;
}

}  // namespace

VariationResult rho_variation_impl(const double* g, int n, double rho, const VariationOptions& opt) {
  if (!(rho > 1.0)) throw DomainError("rho must exceed 1 (got " + std::to_string(rho) + ")");
  if (rho <= 2.0 && !opt.allow_unsupported_regime)
    throw DomainError("rho <= 2 is an unsupported regime; set allow_unsupported_regime to compute it anyway");
  if (n < 2) return {};
  // integer exponents by multiplication, the DP is pow-bound otherwise
  if (rho == 2.0) return variation_dp(g, n, rho, [](double d) { return d * d; });
  if (rho == 3.0) return variation_dp(g, n, rho, [](double d) { return d * d * d; });
  if (rho == 4.0) return variation_dp(g, n, rho, [](double d) { return d * d * d * d; });
  return variation_dp(g, n, rho, [rho](double d) { return std::pow(d, rho); });
}

int jump_count_impl(const double* g, int n, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  // the pair that closes first is always part of some optimal system, so
  // scan forward, keeping the range since the last cut
  int count = 0;
  if (n < 2) return 0;
  double lo = g[0], hi = g[0];
  for (int i = 1; i < n; ++i) {
    if (g[i] - lo > lambda || hi - g[i] > lambda) {
      ++count;
      lo = hi = g[i];
    } else {
      lo = std::min(lo, g[i]);
      hi = std::max(hi, g[i]);
    }
  }
  return count;
}

}  // namespace detail

BracketSpec make_brackets(const TimeGrid& times, const std::vector<double>& sequence) {
  for (size_t j = 0; j < sequence.size(); ++j) {
    if (!(sequence[j] > 0.0)) throw DomainError("bracket sequence must be positive");
    if (j > 0 && !(sequence[j] < sequence[j - 1])) throw DomainError("bracket sequence must be strictly decreasing");
  }
  BracketSpec br{sequence, {}};
  const auto& t = times.times;
  const int M = times.size();
  const double eps = 1e-12;
  for (size_t j = 0; j + 1 < sequence.size(); ++j) {
    const double top = sequence[j] * (1 + eps), bottom = sequence[j + 1] * (1 - eps);
    int first = 0;
    while (first < M && t[first] > top) ++first;
    int last = first - 1;
    while (last + 1 < M && t[last + 1] >= bottom) ++last;
    br.ranges.emplace_back(first, last);
  }
  return br;
}

int dyadic_block(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive");
  int e;
  const double m = std::frexp(t, &e);  // t = m 2^e, m in [1/2, 1)
  return m == 0.5 ? 2 - e : 1 - e;
}

double short_variation(const Eigen::VectorXd& g, const TimeGrid& times) {
  if (g.size() != times.size()) throw DomainError("samples and time grid differ in length");
  const VariationOptions allow{true};
  double s = 0.0;
  int start = 0;
  const int M = times.size();
  while (start < M) {
    const int k = dyadic_block(times.times[start]);
    int end = start;
    while (end + 1 < M && dyadic_block(times.times[end + 1]) == k) ++end;
    const double v = rho_variation(g.segment(start, end - start + 1), 2.0, allow).value;
    s += v * v;
    start = end + 1;
  }
  return std::sqrt(s);
}

double g_function_constant(double gamma) { return std::tgamma(2 * gamma) * std::pow(2.0, -2 * gamma); }

namespace {

struct LogTimes {
  Eigen::VectorXd t;
  double h;
};

// active mode range [lo, hi) of a coefficient vector
std::pair<int, int> active_modes(const Eigen::VectorXd& c) {
  int lo = 0, hi = static_cast<int>(c.size());
  while (lo < hi && c[lo] == 0.0) ++lo;
  while (hi > lo && c[hi - 1] == 0.0) --hi;
  return {lo, hi};
}

// Each mode contributes (t lambda)^{2 gamma} e^{-2 t lambda} dt/t, peaking at
// t lambda = gamma; cut where every mode is below cutoff times its peak.
LogTimes g_times(double gamma, double lam_min, double lam_max, const GFunctionOptions& opt) {
  const double lc = std::log(opt.cutoff);
  const double u_lo = gamma * std::exp(-1.0) * std::exp(lc / (2 * gamma));
  double u_hi = gamma + 1.0;
  while (2 * gamma * std::log(u_hi / gamma) - 2 * (u_hi - gamma) > lc) u_hi *= 1.25;
  const double s0 = std::log(u_lo / lam_max), s1 = std::log(u_hi / lam_min);
  const int K = static_cast<int>(std::ceil((s1 - s0) / opt.log_step));
  const double h = (s1 - s0) / K;
  LogTimes out{Eigen::VectorXd(K + 1), h};
  for (int k = 0; k <= K; ++k) out.t[k] = std::exp(s0 + k * h);
  return out;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive (got " + std::to_string(gamma) + ")");
}

}  // namespace

double g_function(const CoefficientVector& c, double gamma, double x, const GFunctionOptions& opt) {
  check_gamma(gamma);
  const SpectralBasis& b = *c.basis;
  const auto [lo, hi] = active_modes(c.values);
  if (lo == hi) return 0.0;
  if (hi - lo == 1)
    return std::abs(c.values[lo] * b.eigenfunction(c.flavor, lo + 1, x)) * std::sqrt(g_function_constant(gamma));
  Eigen::VectorXd ce(hi - lo);
  for (int n = lo; n < hi; ++n) ce[n - lo] = c.values[n] * b.eigenfunction(c.flavor, n + 1, x);
  const LogTimes lt = g_times(gamma, b.zeros()[lo], b.zeros()[hi - 1], opt);
  const FractionalOrder o = FractionalOrder::of(gamma);
  double s = 0.0;
  for (int k = 0; k < lt.t.size(); ++k) {
    double v = 0.0;
    for (int n = lo; n < hi; ++n) v += weyl_poisson_factor(o, lt.t[k], b.zeros()[n]) * ce[n - lo];
    s += v * v;
  }
  return std::sqrt(s * lt.h);
}

GridFunction g_function_field(const CoefficientVector& c, double gamma, const SampledBasis& sb,
                              const GFunctionOptions& opt) {
  check_gamma(gamma);
  if (c.basis != sb.basis() || c.flavor != sb.flavor()) throw DomainError("coefficient basis does not match");
  const SpectralBasis& b = *c.basis;
  const auto [lo, hi] = active_modes(c.values);
  GridFunction out{sb.grid(), Eigen::VectorXd::Zero(sb.grid()->size())};
  if (lo == hi) return out;
  if (hi - lo == 1) {
    out.values = (sb.matrix().col(lo) * c.values[lo]).cwiseAbs() * std::sqrt(g_function_constant(gamma));
    return out;
  }
  const LogTimes lt = g_times(gamma, b.zeros()[lo], b.zeros()[hi - 1], opt);
  const FractionalOrder o = FractionalOrder::of(gamma);
  Eigen::MatrixXd M(lt.t.size(), hi - lo);
  for (int k = 0; k < lt.t.size(); ++k)
    for (int n = lo; n < hi; ++n) M(k, n - lo) = weyl_poisson_factor(o, lt.t[k], b.zeros()[n]);
  const Eigen::MatrixXd cb = c.values.segment(lo, hi - lo).asDiagonal() * sb.matrix().middleCols(lo, hi - lo).transpose();
  const Eigen::MatrixXd V = M * cb;
  out.values = (V.colwise().squaredNorm().transpose() * lt.h).cwiseSqrt();
  return out;
}

GridFunction variation_field(const FamilySamples& s, const FunctionalSpec& spec) {
  const int P = static_cast<int>(s.values.cols());
  GridFunction out{s.grid, Eigen::VectorXd::Zero(P)};
  if (const auto* r = std::get_if<RhoVariationSpec>(&spec)) {
    // validate once, outside the workers
    rho_variation(Eigen::VectorXd::Zero(2), r->rho, r->options);
  }
  if (const auto* j = std::get_if<JumpSpec>(&spec))
    if (!(j->lambda > 0.0)) throw DomainError("lambda must be positive");
  parallel_for(P, [&](int i) {
    const Eigen::VectorXd col = s.values.col(i);
    out.values[i] = std::visit(
        [&](const auto& sp) -> double {
          using T = std::decay_t<decltype(sp)>;
          if constexpr (std::is_same_v<T, RhoVariationSpec>) {
            return rho_variation(col, sp.rho, sp.options).value;
          } else if constexpr (std::is_same_v<T, OscillationSpec>) {
            return oscillation(col, sp.brackets);
          } else if constexpr (std::is_same_v<T, JumpSpec>) {
            return jump_count(col, sp.lambda);
          } else {
            return short_variation(col, s.time_grid);
          }
        },
        spec);
  });
  return out;
}

}  // namespace fbvar
