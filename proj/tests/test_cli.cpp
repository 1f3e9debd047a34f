#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "fbvar/errors.hpp"

using namespace fbvar;
using namespace fbvar::cli;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run call(std::vector<std::string> args) {
  args.insert(args.begin(), "fbvar");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fbvar_test_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config json round trip and rejection") {
  ExperimentConfig c;
  c.experiment = "atoms";
  c.nu = 0.25;
  c.p = {1.25, 3.0};
  c.seed = 99;
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  CHECK_THROWS_AS(config_from_json(json{{"nuu", 1.0}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"nu", "zero"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"n", 2.5}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"seed", -1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
  // keys not given keep the base value
  ExperimentConfig base;
  base.rho = 4.0;
  CHECK(config_from_json(json{{"nu", 1.0}}, base).rho == 4.0);
}

TEST_CASE("validation names the constraint") {
  ExperimentConfig c;
  c.experiment = "zeros";
  c.nu = -1.2;
  try {
    validate(c);
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nu > -1") != std::string::npos);
  }
  c.nu = 0.0;
  c.experiment = "atoms";
  c.rho = 2.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.rho = 3.0;
  c.setting = "s_nu";
  c.nu = -0.7;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.experiment = "lp-ratio";
  CHECK_NOTHROW(validate(c));
  c.experiment = "nope";
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("config hash ignores the output path") {
  ExperimentConfig a;
  a.experiment = "zeros";
  ExperimentConfig b = a;
  b.out = "/somewhere/else";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.nu = 0.5;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("zeros prints the closed form at nu = 1/2") {
  const Run r = call({"zeros", "--nu", "0.5", "--n", "10"});
  CHECK(r.code == kOk);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,lambda,d");
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const double lam = std::stod(line.substr(line.find(',') + 1));
    CHECK(lam == doctest::Approx(n * std::numbers::pi).epsilon(1e-12));
  }
  CHECK(n == 10);
}

TEST_CASE("gfunction ratio") {
  const auto dir = scratch("g");
  const Run r = call({"gfunction", "--gamma", "1", "--nu", "0", "--out", dir.string()});
  CHECK(r.code == kOk);
  const json j = json::parse(slurp(dir / "gfunction.json"));
  CHECK(j["ratio_phi1"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(j["constant"].get<double>() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(j["config_hash"].get<std::string>().size() == 16);
  CHECK(j["versions"].contains("hardy"));
  CHECK(std::filesystem::exists(dir / "gfunction.csv"));
}

TEST_CASE("bad input gives exit 2 and an error record") {
  Run r = call({"zeros", "--nu", "-1.2"});
  CHECK(r.code == kConfigError);
  CHECK(r.out.empty());
  const json e = json::parse(r.err);
  CHECK(e["error"]["type"] == "config");
  CHECK(e["error"]["exit_code"] == 2);
  CHECK(e["error"]["message"].get<std::string>().find("nu > -1") != std::string::npos);

  CHECK(call({}).code == kConfigError);
  CHECK(call({"zeros", "--nu", "abc"}).code == kConfigError);
  CHECK(call({"zeros", "--no-such-flag"}).code == kConfigError);
  CHECK(call({"atoms", "--rho", "1.5"}).code == kConfigError);
  CHECK(call({"zeros", "--config", "/nonexistent/config.json"}).code == kConfigError);
  CHECK(call({"--help"}).code == kOk);
  CHECK(call({"h1", "--help"}).code == kOk);
}

TEST_CASE("flags override the config file") {
  const auto dir = scratch("cfg");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"nu": 0.5, "n": 4, "rho": 5})";
  Run r = call({"zeros", "--config", (dir / "c.json").string(), "--n", "3", "--out", (dir / "o").string()});
  CHECK(r.code == kOk);
  const json j = json::parse(slurp(dir / "o" / "zeros.json"));
  CHECK(j["config"]["nu"] == 0.5);
  CHECK(j["config"]["n"] == 3);
  CHECK(j["config"]["rho"] == 5.0);
  CHECK_FALSE(j["config"].contains("out"));

  std::ofstream(dir / "bad.json") << R"({"nu": 0.5, "colour": 1})";
  CHECK(call({"zeros", "--config", (dir / "bad.json").string()}).code == kConfigError);
  std::ofstream(dir / "broken.json") << "{nu: ";
  CHECK(call({"zeros", "--config", (dir / "broken.json").string()}).code == kConfigError);
}

TEST_CASE("repeated runs are byte identical") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::vector<std::string> args = {"variation", "--nu", "0.3", "--n-modes", "12", "--seed", "5",
                                         "--space-cells", "8", "--time-points", "60"};
  auto with = [&](const std::filesystem::path& d) {
    auto v = args;
    v.push_back("--out");
    v.push_back(d.string());
    return v;
  };
  CHECK(call(with(a)).code == kOk);
  CHECK(call(with(b)).code == kOk);
  for (const char* f : {"variation.json", "variation.csv"}) CHECK(slurp(a / f) == slurp(b / f));
  const json j = json::parse(slurp(a / "variation.json"));
  for (const auto& [k, v] : j["violations"].items()) CHECK(v == 0);
  // a different seed changes the draw
  auto v = args;
  v[6] = "6";
  CHECK(call(v).out != call(args).out);
}

TEST_CASE("ortho and lp-ratio endpoints") {
  Run r = call({"ortho", "--nu", "-0.5", "--n-modes", "8"});
  CHECK(r.code == kOk);
  const auto dir = scratch("lp");
  r = call({"lp-ratio", "--setting", "s_nu", "--nu", "-0.75", "--p", "2", "--sets", "0", "--space-cells", "64",
            "--time-points", "60", "--out", dir.string()});
  CHECK(r.code == kOk);
  const json j = json::parse(slurp(dir / "lp-ratio.json"));
  REQUIRE(j["probes"].size() == 3);
  CHECK(j["probes"][1]["p"].get<double>() == doctest::Approx(4.0 / 3.0));
  CHECK(j["probes"][2]["p"].get<double>() == doctest::Approx(4.0));
  for (const auto& p : j["probes"]) CHECK(p["restricted_weak_sup"].get<double>() <= p["strong_sup"].get<double>() * (1 + 1e-12));
}
