#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "fbvar/bessel.hpp"
#include "fbvar/errors.hpp"
#include "fbvar/grid.hpp"
#include "fbvar/hardy.hpp"
#include "fbvar/kernel_bounds.hpp"
#include "fbvar/semigroups.hpp"
#include "fbvar/spectral.hpp"
#include "fbvar/variation.hpp"

namespace fbvar::cli {

using nlohmann::json;
using std::numbers::pi;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// json has no infinities; they become strings
json jnum(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

// Box-Muller on the raw generator output, so draws do not depend on the
// standard library's distribution code
class Normal {
 public:
  explicit Normal(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    const double u1 = (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
  }

 private:
  std::mt19937_64 rng_;
};

json versions() {
  return {{"bessel", kBesselVersion},   {"grid", kGridVersion},         {"spectral", kSpectralVersion},
          {"semigroups", kSemigroupsVersion}, {"variation", kVariationVersion}, {"kernel_bounds", kKernelBoundsVersion},
          {"hardy", kHardyVersion},     {"cli", kCliVersion}};
}

template <typename T>
T pick(T value, T fallback) {
  return value == T{} ? fallback : value;
}

Setting parse_setting(const std::string& s) {
  if (s == "delta_nu") return Setting::delta_nu;
  if (s == "s_nu") return Setting::s_nu;
  throw ConfigError("setting must be delta_nu or s_nu (got " + s + ")");
}

TimeGrid time_grid(const ExperimentConfig& c) {
  return TimeGrid::log_uniform(pick(c.t_max, 10.0), pick(c.t_min, 1e-3), pick(c.time_points, 200));
}

ExperimentGrid experiment_grid(const ExperimentConfig& c) {
  ExperimentGrid g;
  g.cells = pick(c.space_cells, g.cells);
  g.points = pick(c.space_points, g.points);
  g.time_points = pick(c.time_points, g.time_points);
  g.t_min = pick(c.t_min, g.t_min);
  g.t_max = pick(c.t_max, g.t_max);
  g.modes = c.n_modes;
  g.tail_tolerance = pick(c.tail_tolerance, g.tail_tolerance);
  return g;
}

// ---------------------------------------------------------------------------

Output cmd_zeros(const ExperimentConfig& c) {
  auto b = make_basis(c.nu, c.n);
  Csv csv({"n", "lambda", "d"});
  for (int n = 1; n <= c.n; ++n) csv.row({std::to_string(n), num(b->lambda(n)), num(b->norm_consts()[n - 1])});
  Output o;
  o.csv = csv.str();
  o.report["count"] = c.n;
  o.report["lambda_1"] = b->lambda(1);
  o.report["lambda_last"] = b->lambda(c.n);
  // closed forms at nu = +-1/2
  if (c.nu == 0.5 || c.nu == -0.5) {
    double ez = 0.0, ed = 0.0;
    for (int n = 1; n <= c.n; ++n) {
      ez = std::max(ez, std::abs(b->lambda(n) - (c.nu == 0.5 ? n : n - 0.5) * pi) / (n * pi));
      ed = std::max(ed, std::abs(b->norm_consts()[n - 1] - std::sqrt(pi)) / std::sqrt(pi));
    }
    o.report["closed_form"] = {{"zeros_rel_error", ez}, {"d_rel_error", ed}};
    o.pass = ez <= 1e-12 && ed <= 1e-10;
  }
  return o;
}

Output cmd_ortho(const ExperimentConfig& c) {
  const int N = pick(c.n_modes, 20);
  auto b = make_basis(c.nu, N);
  auto g = reference_grid(c.nu);
  Csv csv({"flavor", "i", "j", "value"});
  Output o;
  for (Flavor f : {Flavor::phi, Flavor::psi}) {
    const Eigen::MatrixXd G = gram_matrix(SampledBasis(b, g, f));
    const char* name = f == Flavor::phi ? "phi" : "psi";
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) csv.row({name, std::to_string(i + 1), std::to_string(j + 1), num(G(i, j))});
    const double err = (G - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff();
    o.report[name] = {{"max_error", err}, {"tolerance", 1e-8}, {"pass", err <= 1e-8}};
    o.pass = o.pass && err <= 1e-8;
  }
  o.report["modes"] = N;
  o.report["grid_nodes"] = g->size();
  o.csv = csv.str();
  return o;
}

json envelope_json(const EnvelopeReport& r) {
  return {{"name", r.name},
          {"nu", r.nu},
          {"mesh", r.mesh},
          {"refined_mesh", r.refined_mesh},
          {"modes", r.modes},
          {"value", jnum(r.value)},
          {"refined_value", jnum(r.refined_value)},
          {"ratio_lo", jnum(r.lo)},
          {"ratio_hi", jnum(r.hi)},
          {"refinement_delta", jnum(r.refinement_delta)},
          {"witness", {{"x", r.x}, {"y", r.y}, {"t", r.t}}},
          {"pass", r.pass}};
}

Output cmd_kernel_check(const ExperimentConfig& c) {
  EnvelopeOptions eo;
  eo.n = pick(c.space_cells, eo.n);
  eo.tolerance = c.refinement_tolerance;
  eo.tail_tolerance = pick(c.tail_tolerance, eo.tail_tolerance);
  ComparisonOptions co;
  co.n = pick(c.space_cells, co.n);
  co.tolerance = c.refinement_tolerance;
  co.tail_tolerance = pick(c.tail_tolerance, co.tail_tolerance);
  const EnvelopeReport reps[] = {heat_two_sided_envelope(c.nu, eo), heat_derivative_envelope(c.nu, 0.125, eo),
                                 free_kernel_comparison(c.nu, co)};
  Output o;
  o.report["reports"] = json::array();
  for (const auto& r : reps) {
    o.report["reports"].push_back(envelope_json(r));
    o.pass = o.pass && r.pass;
  }
  return o;
}

Output cmd_bounds(const ExperimentConfig& c) {
  BoundMesh m;
  m.n = pick(c.space_cells, m.n);
  m.tolerance = c.refinement_tolerance;
  m.tail_tolerance = pick(c.tail_tolerance, m.tail_tolerance);
  m.times.points = pick(c.time_points, m.times.points);
  m.times.t_min = pick(c.t_min, m.times.t_min);
  m.times.t_max = pick(c.t_max, m.times.t_max);
  const BoundSuite s = bound_reports(c.nu, c.beta, c.rho, m);
  Csv csv({"report", "mesh", "region", "count", "max_ratio", "x", "y", "t"});
  Output o;
  o.report["reports"] = json::array();
  for (const BoundReport* r : {&s.size, &s.regularity, &s.s_size, &s.s_regularity}) {
    json rj = {{"name", r->name},
               {"mesh", r->mesh},
               {"refined_mesh", r->refined_mesh},
               {"modes", r->modes},
               {"refinement_delta", jnum(r->refinement_delta)},
               {"pass", r->pass},
               {"failure", r->failure}};
    if (r->ball_product > 0.0) {
      rj["ball_product"] = jnum(r->ball_product);
      rj["ball_product_refined"] = jnum(r->ball_product_refined);
    }
    for (int k = 0; k < 3; ++k) {
      const char* reg = region_name(static_cast<RegionTag>(k));
      for (const auto& [mesh, st] : {std::pair{r->mesh, r->coarse[k]}, std::pair{r->refined_mesh, r->refined[k]}}) {
        rj["regions"][reg][mesh == r->mesh ? "coarse" : "refined"] = {
            {"count", st.count}, {"max_ratio", jnum(st.max_ratio)}, {"x", st.x}, {"y", st.y}, {"t", st.t}};
        csv.row({r->name, std::to_string(mesh), reg, std::to_string(st.count), num(st.max_ratio), num(st.x),
                 num(st.y), num(st.t)});
      }
    }
    o.report["reports"].push_back(rj);
    o.pass = o.pass && r->pass;
  }
  o.csv = csv.str();
  return o;
}

Output cmd_variation(const ExperimentConfig& c) {
  const Setting st = parse_setting(c.setting);
  const int N = pick(c.n_modes, 10);
  auto b = make_basis(c.nu, N);
  auto g = make_graded_grid({pick(c.space_cells, 32), pick(c.space_points, 4), 4, 4});
  SampledBasis sb(b, g, setting_flavor(st));
  const MeasureTag m = setting_measure(st, c.nu);
  Normal rnd(c.seed);
  CoefficientVector coef{Eigen::VectorXd(N), setting_flavor(st), b};
  for (int n = 0; n < N; ++n) coef.values[n] = rnd();
  const TimeGrid tg = time_grid(c).with_time(1.0);
  int one = 0;
  for (int k = 0; k < tg.size(); ++k)
    if (tg.times[k] == 1.0) one = k;
  const FamilySamples fam = weyl_fractional_family(FractionalOrder::of(c.beta), coef, tg, sb);

  std::vector<double> seq{tg.times[0]};
  for (double t = 1.0; t > tg.times[tg.size() - 1]; t *= 0.5)
    if (t < seq.back()) seq.push_back(t);
  if (seq.back() > tg.times[tg.size() - 1]) seq.push_back(tg.times[tg.size() - 1]);

  const GridFunction V = variation_field(fam, RhoVariationSpec{c.rho, {}});
  const GridFunction V2 = variation_field(fam, RhoVariationSpec{2.0, {true}});
  const GridFunction O = variation_field(fam, OscillationSpec{make_brackets(tg, seq)});
  const GridFunction L = variation_field(fam, JumpSpec{c.lambda});
  const GridFunction S = variation_field(fam, ShortVariationSpec{});
  GridFunction TV{g, Eigen::VectorXd(g->size())};
  const int T = static_cast<int>(fam.values.rows());
  for (int i = 0; i < g->size(); ++i)
    TV.values[i] = (fam.values.col(i).tail(T - 1) - fam.values.col(i).head(T - 1)).cwiseAbs().sum();

  // exact inequalities, node by node
  int viol[5] = {0, 0, 0, 0, 0};
  const double eps = 1e-14;
  for (int i = 0; i < g->size(); ++i) {
    if (c.lambda * std::pow(L.values[i], 1.0 / c.rho) > V.values[i] * (1 + eps)) ++viol[0];
    if (O.values[i] > V2.values[i] * (1 + eps)) ++viol[1];
    if (S.values[i] > V2.values[i] * (1 + eps)) ++viol[2];
    if (V.values[i] > TV.values[i] * (1 + eps)) ++viol[3];
    const double sup = fam.values.col(i).cwiseAbs().maxCoeff();
    if (sup > (V.values[i] + std::abs(fam.values(one, i))) * (1 + eps)) ++viol[4];
  }
  Output o;
  o.report["modes"] = N;
  o.report["nodes"] = g->size();
  o.report["times"] = tg.size();
  o.report["family"] = fam.label;
  const std::pair<const char*, const GridFunction*> fields[] = {
      {"V_rho", &V}, {"V_2", &V2}, {"oscillation", &O}, {"jumps", &L}, {"short_variation", &S}, {"total_variation", &TV}};
  for (const auto& [name, f] : fields)
    o.report["norms"][name] = {{"L1", lp_norm(*f, 1.0, m)}, {"L2", lp_norm(*f, 2.0, m)},
                               {"weak_L1", weak_l1_quasinorm(*f, m)}};
  o.report["violations"] = {{"jump_vs_variation", viol[0]}, {"oscillation_vs_V2", viol[1]},
                            {"short_vs_V2", viol[2]},       {"variation_vs_total", viol[3]},
                            {"sup_vs_variation_plus_P1", viol[4]}};
  for (int v : viol) o.pass = o.pass && v == 0;
  Csv csv({"x", "V_rho", "V_2", "oscillation", "jumps", "short_variation", "total_variation"});
  for (int i = 0; i < g->size(); ++i)
    csv.row({num(g->nodes()[i]), num(V.values[i]), num(V2.values[i]), num(O.values[i]), num(L.values[i]),
             num(S.values[i]), num(TV.values[i])});
  o.csv = csv.str();
  return o;
}

Output cmd_gfunction(const ExperimentConfig& c) {
  const int N = pick(c.n_modes, 10);
  auto b = make_basis(c.nu, N);
  SampledBasis sb(b, reference_grid(c.nu), Flavor::phi);
  const MeasureTag m = MeasureTag::weighted(c.nu);
  const double C = g_function_constant(c.gamma);
  CoefficientVector e1{Eigen::VectorXd::Unit(N, 0), Flavor::phi, b};
  Normal rnd(c.seed);
  CoefficientVector f{Eigen::VectorXd(N), Flavor::phi, b};
  for (int n = 0; n < N; ++n) f.values[n] = rnd();
  const GridFunction g1 = g_function_field(e1, c.gamma, sb), gf = g_function_field(f, c.gamma, sb);
  const double r1 = std::pow(lp_norm(g1, 2.0, m), 2) / C;
  const double rf = std::pow(lp_norm(gf, 2.0, m), 2) / (C * f.values.squaredNorm());
  Output o;
  o.report["constant"] = C;
  o.report["ratio_phi1"] = r1;
  o.report["ratio_random"] = rf;
  o.report["tolerance"] = 1e-4;
  o.pass = std::abs(r1 - 1.0) <= 1e-4 && std::abs(rf - 1.0) <= 1e-4;
  Csv csv({"x", "g_phi1", "g_random"});
  for (int i = 0; i < sb.grid()->size(); ++i) csv.row({num(sb.grid()->nodes()[i]), num(g1.values[i]), num(gf.values[i])});
  o.csv = csv.str();
  return o;
}

json atom_json(const AtomSpec& a) {
  json j = {{"kind", a.kind == AtomKind::a ? "a" : "b"}, {"label", a.label()}};
  if (a.kind == AtomKind::b)
    j["j"] = a.j;
  else
    j["interval"] = {a.center - a.radius, a.center + a.radius};
  return j;
}

Output cmd_atoms(const ExperimentConfig& c) {
  const Setting s = parse_setting(c.setting);
  const auto fam = standard_atom_family(s, c.seed, c.atoms, c.j_max);
  const AtomExperimentReport r = atom_variation_experiment(fam, c.rho, c.nu, experiment_grid(c));
  Output o;
  o.report["setting"] = setting_name(s);
  o.report["modes"] = r.modes;
  o.report["nodes"] = r.nodes;
  o.report["times"] = r.times;
  o.report["max_norm"] = r.max_norm;
  o.report["min_norm"] = r.min_norm;
  o.report["ratio"] = jnum(r.ratio);
  o.report["envelope"] = r.envelope;
  o.report["unresolved"] = r.unresolved;
  o.report["pass"] = r.pass;
  for (const auto& [j, v] : r.b_growth) o.report["b_growth"].push_back({j, v});
  for (const auto& [rad, v] : r.a_growth) o.report["a_growth"].push_back({rad, v});
  Csv csv({"label", "kind", "j", "lo", "hi", "scale", "l1_norm", "tail_bound", "resolved"});
  for (const auto& a : r.atoms) {
    json aj = atom_json(a.spec);
    aj["scale"] = a.scale;
    aj["l1_norm"] = a.l1_norm;
    aj["tail_bound"] = a.tail_bound;
    aj["resolved"] = a.resolved;
    if (!a.error.empty()) aj["error"] = a.error;
    o.report["atoms"].push_back(aj);
    const Atom A = build_atom(a.spec, c.nu);
    csv.row({"\"" + a.label + "\"", a.spec.kind == AtomKind::a ? "a" : "b",
             a.spec.kind == AtomKind::b ? std::to_string(a.spec.j) : "", num(A.lo), num(A.hi), num(a.scale),
             num(a.l1_norm), num(a.tail_bound), a.resolved ? "1" : "0"});
  }
  o.csv = csv.str();
  o.pass = r.pass;
  return o;
}

Output cmd_h1(const ExperimentConfig& c) {
  const Setting s = parse_setting(c.setting);
  const auto fam = standard_h1_family(s, c.seed, c.combos);
  const H1Report r = h1_equivalence_experiment(s, fam, c.rho, c.nu, experiment_grid(c));
  Output o;
  o.report["setting"] = setting_name(s);
  o.report["modes"] = r.modes;
  o.report["K"] = r.k_envelope;
  o.report["K_first_half"] = r.k_half;
  o.report["lower_control"] = r.lower_control;
  Csv csv({"label", "f_norm", "maximal_norm", "variation_norm", "p1_norm", "q1", "q2", "ratio", "lower_control"});
  for (const auto& row : r.rows) {
    o.report["rows"].push_back({{"label", row.label},
                                {"q1", row.q1},
                                {"q2", row.q2},
                                {"ratio", row.ratio},
                                {"p1_norm", row.p1_norm},
                                {"tail_bound", row.tail_bound},
                                {"lower_control", row.lower_control}});
    csv.row({"\"" + row.label + "\"", num(row.f_norm), num(row.maximal_norm), num(row.variation_norm),
             num(row.p1_norm), num(row.q1), num(row.q2), num(row.ratio), row.lower_control ? "1" : "0"});
  }
  o.csv = csv.str();
  o.pass = r.lower_control;
  return o;
}

Output cmd_lp_ratio(const ExperimentConfig& c) {
  const Setting s = parse_setting(c.setting);
  const ExperimentGrid eg = experiment_grid(c);
  const std::vector<double> nus = c.nu_list.empty() ? std::vector<double>{c.nu} : c.nu_list;
  Csv csv({"nu", "p", "endpoint", "a", "b", "measure", "strong_ratio", "weak_ratio"});
  Output o;
  o.report["setting"] = setting_name(s);
  o.report["probes"] = json::array();
  for (double nu : nus) {
    std::vector<std::pair<double, bool>> ps;
    for (double p : c.p) ps.emplace_back(p, false);
    // restricted weak type endpoints for -1 < nu < -1/2
    if (s == Setting::s_nu && nu < -0.5) {
      ps.emplace_back(1.0 / (nu + 1.5), true);
      ps.emplace_back(-1.0 / (nu + 0.5), true);
    }
    for (const auto& [p, endpoint] : ps) {
      const LpProbeReport r = lp_ratio_probe(s, nu, c.rho, p, eg, c.seed, c.sets);
      o.report["probes"].push_back({{"nu", nu},
                                    {"p", p},
                                    {"endpoint", endpoint},
                                    {"modes", r.modes},
                                    {"strong_sup", r.strong_sup},
                                    {"restricted_weak_sup", r.weak_sup},
                                    {"tail_bound", r.tail_bound}});
      o.pass = o.pass && r.tail_bound <= eg.tail_tolerance;
      for (const auto& row : r.rows)
        csv.row({num(nu), num(p), endpoint ? "1" : "0", num(row.a), num(row.b), num(row.measure),
                 num(row.strong_ratio), num(row.weak_ratio)});
    }
  }
  o.csv = csv.str();
  return o;
}

using Command = Output (*)(const ExperimentConfig&);

const std::vector<std::pair<std::string, Command>>& commands() {
  static const std::vector<std::pair<std::string, Command>> table = {
      {"zeros", cmd_zeros},   {"ortho", cmd_ortho},         {"kernel-check", cmd_kernel_check},
      {"bounds", cmd_bounds}, {"variation", cmd_variation}, {"gfunction", cmd_gfunction},
      {"atoms", cmd_atoms},   {"h1", cmd_h1},               {"lp-ratio", cmd_lp_ratio}};
  return table;
}

const char* description(const std::string& name) {
  if (name == "zeros") return "Bessel zeros lambda_n and normalisers d_n as CSV";
  if (name == "ortho") return "Gram matrices of phi_n (weighted) and Psi_n (Lebesgue)";
  if (name == "kernel-check") return "Heat kernel envelopes and the free kernel comparison";
  if (name == "bounds") return "Size and regularity reports for the variation-norm kernels";
  if (name == "variation") return "Variation, oscillation, jump and short variation fields of a random family";
  if (name == "gfunction") return "L^2 identity of the g-function";
  if (name == "atoms") return "Variation norms of Hardy space atoms";
  if (name == "h1") return "Q1 / Q2 ratios of the two H^1 quantities";
  return "L^p and restricted weak type probes on indicator functions";
}

json error_record(const std::string& kind, const std::string& message, int code) {
  return {{"error", {{"type", kind}, {"message", message}, {"exit_code", code}}}};
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, f] : commands()) v.push_back(n);
    return v;
  }();
  return names;
}

json to_json(const ExperimentConfig& c) {
  return {{"experiment", c.experiment},
          {"nu", c.nu},
          {"nu_list", c.nu_list},
          {"n", c.n},
          {"n_modes", c.n_modes},
          {"rho", c.rho},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"setting", c.setting},
          {"space_cells", c.space_cells},
          {"space_points", c.space_points},
          {"time_points", c.time_points},
          {"t_min", c.t_min},
          {"t_max", c.t_max},
          {"tail_tolerance", c.tail_tolerance},
          {"refinement_tolerance", c.refinement_tolerance},
          {"atoms", c.atoms},
          {"j_max", c.j_max},
          {"combos", c.combos},
          {"sets", c.sets},
          {"p", c.p},
          {"seed", c.seed},
          {"out", c.out}};
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  auto real = [](const json& v, const std::string& k) {
    if (!v.is_number()) throw ConfigError("config key '" + k + "' must be a number");
    return v.get<double>();
  };
  auto integer = [](const json& v, const std::string& k) {
    if (!v.is_number_integer()) throw ConfigError("config key '" + k + "' must be an integer");
    return v.get<long long>();
  };
  auto reals = [&](const json& v, const std::string& k) {
    if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(real(e, k));
    return out;
  };
  auto text = [](const json& v, const std::string& k) {
    if (!v.is_string()) throw ConfigError("config key '" + k + "' must be a string");
    return v.get<std::string>();
  };
  const std::map<std::string, std::function<void(const json&, const std::string&)>> setters = {
      {"experiment", [&](const json& v, const std::string& k) { c.experiment = text(v, k); }},
      {"nu", [&](const json& v, const std::string& k) { c.nu = real(v, k); }},
      {"nu_list", [&](const json& v, const std::string& k) { c.nu_list = reals(v, k); }},
      {"n", [&](const json& v, const std::string& k) { c.n = static_cast<int>(integer(v, k)); }},
      {"n_modes", [&](const json& v, const std::string& k) { c.n_modes = static_cast<int>(integer(v, k)); }},
      {"rho", [&](const json& v, const std::string& k) { c.rho = real(v, k); }},
      {"beta", [&](const json& v, const std::string& k) { c.beta = real(v, k); }},
      {"gamma", [&](const json& v, const std::string& k) { c.gamma = real(v, k); }},
      {"lambda", [&](const json& v, const std::string& k) { c.lambda = real(v, k); }},
      {"setting", [&](const json& v, const std::string& k) { c.setting = text(v, k); }},
      {"space_cells", [&](const json& v, const std::string& k) { c.space_cells = static_cast<int>(integer(v, k)); }},
      {"space_points", [&](const json& v, const std::string& k) { c.space_points = static_cast<int>(integer(v, k)); }},
      {"time_points", [&](const json& v, const std::string& k) { c.time_points = static_cast<int>(integer(v, k)); }},
      {"t_min", [&](const json& v, const std::string& k) { c.t_min = real(v, k); }},
      {"t_max", [&](const json& v, const std::string& k) { c.t_max = real(v, k); }},
      {"tail_tolerance", [&](const json& v, const std::string& k) { c.tail_tolerance = real(v, k); }},
      {"refinement_tolerance", [&](const json& v, const std::string& k) { c.refinement_tolerance = real(v, k); }},
      {"atoms", [&](const json& v, const std::string& k) { c.atoms = static_cast<int>(integer(v, k)); }},
      {"j_max", [&](const json& v, const std::string& k) { c.j_max = static_cast<int>(integer(v, k)); }},
      {"combos", [&](const json& v, const std::string& k) { c.combos = static_cast<int>(integer(v, k)); }},
      {"sets", [&](const json& v, const std::string& k) { c.sets = static_cast<int>(integer(v, k)); }},
      {"p", [&](const json& v, const std::string& k) { c.p = reals(v, k); }},
      {"seed",
       [&](const json& v, const std::string& k) {
         if (!v.is_number_unsigned()) throw ConfigError("config key '" + k + "' must be a non-negative integer");
         c.seed = v.get<std::uint64_t>();
       }},
      {"out", [&](const json& v, const std::string& k) { c.out = text(v, k); }},
  };
  for (const auto& [k, v] : j.items()) {
    auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown config key '" + k + "'");
    it->second(v, k);
  }
  return c;
}

void validate(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  const auto& names = subcommands();
  need(std::find(names.begin(), names.end(), c.experiment) != names.end(), "unknown experiment '" + c.experiment + "'");
  auto order = [&](double nu) {
    std::ostringstream os;
    os << "nu must satisfy nu > -1 (got " << nu << ")";
    need(nu > -1.0 && std::isfinite(nu), os.str());
  };
  order(c.nu);
  for (double nu : c.nu_list) order(nu);
  need(c.setting == "delta_nu" || c.setting == "s_nu", "setting must be delta_nu or s_nu");
  need(c.n >= 1 && c.n <= 1000000, "n must be in [1, 1e6]");
  need(c.n_modes >= 0 && c.n_modes <= 1000000, "n_modes must be in [0, 1e6] (0 picks the default)");
  need(c.beta >= 0.0 && std::isfinite(c.beta), "beta must satisfy beta >= 0");
  need(c.gamma > 0.0 && std::isfinite(c.gamma), "gamma must satisfy gamma > 0");
  need(c.lambda > 0.0 && std::isfinite(c.lambda), "lambda must satisfy lambda > 0");
  need(c.space_cells >= 0 && c.space_cells <= 100000, "space_cells must be in [0, 1e5]");
  need(c.space_points >= 0 && c.space_points <= 64, "space_points must be in [0, 64]");
  need(c.time_points == 0 || (c.time_points >= 2 && c.time_points <= 100000), "time_points must be 0 or in [2, 1e5]");
  need(c.t_min >= 0.0 && c.t_max >= 0.0, "t_min and t_max must be positive (0 picks the default)");
  need(pick(c.t_min, 1e-3) < pick(c.t_max, 10.0), "t_min must be below t_max");
  need(c.tail_tolerance >= 0.0, "tail_tolerance must be >= 0 (0 picks the default)");
  need(c.refinement_tolerance > 0.0, "refinement_tolerance must be > 0");
  need(c.atoms >= 0 && c.j_max >= 0 && c.j_max <= 30, "atoms must be >= 0 and j_max in [0, 30]");
  need(c.combos >= 0 && c.sets >= 0, "combos and sets must be >= 0");
  for (double p : c.p) need(p >= 1.0 && std::isfinite(p), "every p must satisfy 1 <= p < inf");
  const std::string& e = c.experiment;
  if (e == "bounds" || e == "variation" || e == "atoms" || e == "h1" || e == "lp-ratio")
    need(c.rho > 2.0 && std::isfinite(c.rho), "rho must satisfy 2 < rho < inf");
  if ((e == "atoms" || e == "h1") && c.setting == "s_nu")
    need(c.nu > -0.5, "s_nu atom and H^1 experiments need nu > -1/2");
  if (e == "gfunction") need(pick(c.n_modes, 10) >= 1, "gfunction needs at least one mode");
}

std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("out");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Output run(const ExperimentConfig& c) {
  validate(c);
  for (const auto& [name, f] : commands()) {
    if (name != c.experiment) continue;
    Output o = f(c);
    json head = {{"experiment", c.experiment}, {"config", to_json(c)}, {"config_hash", config_hash(c)},
                 {"versions", versions()}, {"pass", o.pass}};
    head["config"].erase("out");
    for (auto& [k, v] : o.report.items()) head[k] = v;
    head["pass"] = o.pass;
    o.report = std::move(head);
    return o;
  }
  throw ConfigError("unknown experiment '" + c.experiment + "'");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fourier-Bessel variation experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  json flags = json::object();
  std::vector<std::function<void()>> commit;
  std::string config_path;

  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, description(name));
    auto opt = [&]<typename T>(const std::string& flag, const std::string& key, const std::string& help, T) {
      auto store = std::make_shared<T>();
      CLI::Option* o = sub->add_option(flag, *store, help);
      commit.push_back([&flags, o, store, key] {
        if (o->count() > 0) flags[key] = *store;
      });
    };
    opt("--nu", "nu", "Bessel order, nu > -1", 0.0);
    opt("--rho", "rho", "variation exponent, rho > 2", 0.0);
    opt("--beta", "beta", "order of the time derivative", 0.0);
    opt("--gamma", "gamma", "g-function order", 0.0);
    opt("--n-modes", "n_modes", "number of eigenfunctions (0: default or automatic)", 0);
    opt("--time-points", "time_points", "log-spaced time samples", 0);
    opt("--space-cells", "space_cells", "spatial cells (mesh size for bounds and kernel-check)", 0);
    opt("--space-points", "space_points", "Gauss points per cell", 0);
    opt("--t-min", "t_min", "smallest sampled time", 0.0);
    opt("--t-max", "t_max", "largest sampled time", 0.0);
    opt("--tail-tolerance", "tail_tolerance", "series truncation tolerance", 0.0);
    opt("--refinement-tolerance", "refinement_tolerance", "allowed change under mesh doubling", 0.0);
    opt("--seed", "seed", "random seed", std::uint64_t{0});
    opt("--out", "out", "output directory for <experiment>.json / .csv", std::string());
    sub->add_option("--config", config_path, "JSON config; flags override it");
    if (name == "zeros") opt("--n", "n", "number of zeros", 0);
    if (name == "variation") opt("--lambda", "lambda", "jump size", 0.0);
    if (name == "variation" || name == "atoms" || name == "h1" || name == "lp-ratio")
      opt("--setting", "setting", "delta_nu or s_nu", std::string());
    if (name == "atoms") {
      opt("--atoms", "atoms", "number of random a-atoms", 0);
      opt("--j-max", "j_max", "largest dyadic index of the b-atoms", 0);
    }
    if (name == "h1") opt("--combos", "combos", "number of random atomic sums", 0);
    if (name == "lp-ratio") {
      opt("--p", "p", "exponents", std::vector<double>());
      opt("--nu-list", "nu_list", "orders to probe (default: --nu)", std::vector<double>());
      opt("--sets", "sets", "random lattice intervals", 0);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << error_record("usage", e.what(), kConfigError).dump() << "\n";
    return kConfigError;
  }

  ExperimentConfig cfg;
  Output o;
  try {
    for (auto& f : commit) f();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read config file " + config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
      }
      cfg = config_from_json(j, cfg);
    }
    cfg = config_from_json(flags, cfg);
    cfg.experiment = app.get_subcommands().front()->get_name();
    o = run(cfg);
  } catch (const ConfigError& e) {
    err << error_record("config", e.what(), kConfigError).dump() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << error_record("domain", e.what(), kConfigError).dump() << "\n";
    return kConfigError;
  } catch (const ResolutionError& e) {
    json r = error_record("resolution", e.what(), kCheckFailed);
    r["error"]["tail_bound"] = jnum(e.tail_bound);
    err << r.dump() << "\n";
    return kCheckFailed;
  } catch (const std::exception& e) {
    err << error_record("runtime", e.what(), kCheckFailed).dump() << "\n";
    return kCheckFailed;
  }

  const std::string report = o.report.dump(2) + "\n";
  if (cfg.out.empty()) {
    out << (o.csv.empty() ? report : o.csv);
  } else {
    try {
      namespace fs = std::filesystem;
      fs::create_directories(cfg.out);
      const fs::path base = fs::path(cfg.out) / cfg.experiment;
      std::ofstream(base.string() + ".json", std::ios::binary) << report;
      json files = json::array({base.string() + ".json"});
      if (!o.csv.empty()) {
        std::ofstream(base.string() + ".csv", std::ios::binary) << o.csv;
        files.push_back(base.string() + ".csv");
      }
      out << json{{"pass", o.pass}, {"files", files}}.dump() << "\n";
    } catch (const std::exception& e) {
      err << error_record("io", e.what(), kCheckFailed).dump() << "\n";
      return kCheckFailed;
    }
  }
  return o.pass ? kOk : kCheckFailed;
}

}  // namespace fbvar::cli
