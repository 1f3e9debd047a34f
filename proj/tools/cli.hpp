#pragma once

// Batch runner behind the fbvar executable. Every subcommand turns one
// ExperimentConfig into a JSON report and, for tabular output, a CSV file.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace fbvar::cli {

inline constexpr const char* kCliVersion = "1.0.0";

// Exit codes
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kConfigError = 2;

// Zero in a numeric field means "the subcommand's default".
struct ExperimentConfig {
  std::string experiment;  // the subcommand
  double nu = 0.0;
  std::vector<double> nu_list;  // lp-ratio; empty means {nu}
  int n = 10;                   // zeros: how many
  int n_modes = 0;
  double rho = 3.0;
  double beta = 0.0;
  double gamma = 1.0;
  double lambda = 0.1;  // jump size for the jump counting field
  std::string setting = "delta_nu";
  int space_cells = 0;
  int space_points = 0;
  int time_points = 0;
  double t_min = 0.0, t_max = 0.0;
  double tail_tolerance = 0.0;
  double refinement_tolerance = 0.10;
  int atoms = 20;   // random a-atoms
  int j_max = 6;    // b-atom indices
  int combos = 10;  // h1: random atomic sums
  int sets = 8;     // lp-ratio: random intervals
  std::vector<double> p{1.5, 2.0, 4.0};
  std::uint64_t seed = 1;
  std::string out;  // output directory; empty: stdout
};

nlohmann::json to_json(const ExperimentConfig& c);
// Unknown keys and wrong types are ConfigErrors.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
// Re-checks every constraint of the modules the subcommand uses.
void validate(const ExperimentConfig& c);
// FNV-1a 64 of the canonical JSON without the output path, as 16 hex digits
std::string config_hash(const ExperimentConfig& c);

const std::vector<std::string>& subcommands();

struct Output {
  nlohmann::json report;
  std::string csv;  // empty when the subcommand has no table
  bool pass = true;
};

Output run(const ExperimentConfig& c);

// Full command line handling: parsing, config merging, output files, error
// records on `err`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fbvar::cli
