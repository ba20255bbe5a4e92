#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "monoeit/fem.hpp"
#include "monoeit/monotonicity.hpp"
#include "monoeit/synthdata.hpp"

namespace monoeit {

// Flat experiment configuration; every key can come from the JSON file or --set.
struct RunConfig {
  double mesh_h = 0.012;
  double sim_mesh_h = 0.0064;  // about 3.5x the reconstruction nodes
  bool inverse_crime = false;  // simulate on the reconstruction mesh
  std::string mesh_file;       // optional reconstruction mesh in text format

  std::string phantom = "two_disk";  // preset name
  std::string phantom_file;          // JSON phantom, overrides the preset
  std::string data;                  // voltage CSV; defaults to <out>/data.csv

  int k = 16;
  double coverage = 0.5;
  BasisKind basis = BasisKind::trig;
  double z = 0.1;
  std::optional<double> gamma0;  // reconstruction background, phantom's by default

  double diam = 0.053;
  std::vector<double> beta{0.8};
  // Progression beta_offset + beta_step * j, j = 1..beta_stages; replaces `beta` when set.
  std::optional<double> beta_offset;
  std::optional<double> beta_step;
  std::optional<int> beta_stages;
  double mu = 1.01;
  std::optional<double> alpha;
  ProbeSign sign = ProbeSign::conductive;
  int algorithm = 1;

  double sigma = 0.0;
  std::uint64_t seed = 1;

  std::vector<int> k_list{8, 16, 32};
  bool sandwich = true;
  std::vector<double> sandwich_sigmas{0.0, 5e-3};
  double sandwich_beta = 0.5;
  double sandwich_diam = 0.053;
  int trig_order = 64;

  bool image = true;
  std::filesystem::path out = "out";

  std::vector<double> betas() const;
  // Cross-field consistency; throws InvalidArgument.
  void validate() const;
};

// Merges a JSON object (text) into the config; unknown keys are rejected.
void apply_json(RunConfig& config, const std::string& json_text);
// One `key=value` override; the value is read as JSON when it parses, else as a string.
void apply_override(RunConfig& config, const std::string& assignment);

Phantom resolve_phantom(const RunConfig& config);

void cmd_simulate(const RunConfig& config, std::ostream& log);
IndicatorField cmd_reconstruct(const RunConfig& config, std::ostream& log);
void cmd_convergence(const RunConfig& config, std::ostream& log);
// Returns false when any property fails.
bool cmd_selftest(const RunConfig& config, std::ostream& log);

// Full command line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace monoeit
