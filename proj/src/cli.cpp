#include "monoeit/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "monoeit/cm_bridge.hpp"
#include "monoeit/io.hpp"
#include "monoeit/selftest.hpp"
#include "monoeit/spectral.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace monoeit {

using nlohmann::json;

namespace {

class StageTimer {
 public:
  StageTimer(std::ostream& log, std::string name)
      : log_(log), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    log_ << "[stage] " << name_ << ' ' << s << " s\n";
  }

 private:
  std::ostream& log_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config key '" + key + "' has the wrong type");
  }
}

void set_key(RunConfig& c, const std::string& key, const json& v) {
  if (key == "mesh_h") c.mesh_h = get_as<double>(v, key);
  else if (key == "sim_mesh_h") c.sim_mesh_h = get_as<double>(v, key);
  else if (key == "inverse_crime") c.inverse_crime = get_as<bool>(v, key);
  else if (key == "mesh_file") c.mesh_file = get_as<std::string>(v, key);
  else if (key == "phantom") c.phantom = get_as<std::string>(v, key);
  else if (key == "phantom_file") c.phantom_file = get_as<std::string>(v, key);
  else if (key == "data") c.data = get_as<std::string>(v, key);
  else if (key == "k") c.k = get_as<int>(v, key);
  else if (key == "coverage") c.coverage = get_as<double>(v, key);
  else if (key == "basis") c.basis = parse_basis_kind(get_as<std::string>(v, key));
  else if (key == "z") c.z = get_as<double>(v, key);
  else if (key == "gamma0") c.gamma0 = get_as<double>(v, key);
  else if (key == "diam") c.diam = get_as<double>(v, key);
  else if (key == "beta") {
    if (v.is_array()) c.beta = get_as<std::vector<double>>(v, key);
    else c.beta = {get_as<double>(v, key)};
  } else if (key == "beta_offset") c.beta_offset = get_as<double>(v, key);
  else if (key == "beta_step") c.beta_step = get_as<double>(v, key);
  else if (key == "beta_stages") c.beta_stages = get_as<int>(v, key);
  else if (key == "mu") c.mu = get_as<double>(v, key);
  else if (key == "alpha") {
    if (v.is_null()) c.alpha.reset();
    else c.alpha = get_as<double>(v, key);
  } else if (key == "sign") c.sign = parse_probe_sign(get_as<std::string>(v, key));
  else if (key == "algorithm") c.algorithm = get_as<int>(v, key);
  else if (key == "sigma") c.sigma = get_as<double>(v, key);
  else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
  else if (key == "k_list") c.k_list = get_as<std::vector<int>>(v, key);
  else if (key == "sandwich") c.sandwich = get_as<bool>(v, key);
  else if (key == "sandwich_sigmas") c.sandwich_sigmas = get_as<std::vector<double>>(v, key);
  else if (key == "sandwich_beta") c.sandwich_beta = get_as<double>(v, key);
  else if (key == "sandwich_diam") c.sandwich_diam = get_as<double>(v, key);
  else if (key == "trig_order") c.trig_order = get_as<int>(v, key);
  else if (key == "image") c.image = get_as<bool>(v, key);
  else if (key == "out") c.out = get_as<std::string>(v, key);
  else throw InvalidArgument("unknown config key '" + key + "'");
}

Mesh reconstruction_mesh(const RunConfig& c) {
  if (!c.mesh_file.empty()) return read_mesh(c.mesh_file);
  return electrode_mesh(c.mesh_h, c.coverage);
}

std::filesystem::path data_path(const RunConfig& c) {
  return c.data.empty() ? c.out / "data.csv" : std::filesystem::path(c.data);
}

}  // namespace

std::vector<double> RunConfig::betas() const {
  if (!beta_offset && !beta_step && !beta_stages) return beta;
  if (!beta_offset || !beta_step || !beta_stages)
    throw InvalidArgument("beta_offset, beta_step and beta_stages must be given together");
  return beta_progression(*beta_offset + *beta_step, *beta_step, *beta_stages);
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be positive");
  };
  positive(mesh_h, "mesh_h");
  positive(sim_mesh_h, "sim_mesh_h");
  positive(z, "z");
  positive(diam, "diam");
  if (gamma0) positive(*gamma0, "gamma0");
  if (k < 2) throw InvalidArgument("k must be at least 2");
  if (!(coverage > 0.0 && coverage < 1.0)) throw InvalidArgument("coverage must lie in (0, 1)");
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  if (algorithm != 1 && algorithm != 2) throw InvalidArgument("algorithm must be 1 or 2");
  ReconstructionConfig rc{betas(), mu, sign, algorithm, alpha};
  rc.validate();
  if (k_list.empty()) throw InvalidArgument("k_list is empty");
  for (std::size_t i = 1; i < k_list.size(); ++i)
    if (k_list[i] <= k_list[i - 1]) throw InvalidArgument("k_list must be strictly increasing");
  if (trig_order < 2 || trig_order % 2 != 0) throw InvalidArgument("trig_order must be even");
}

void apply_json(RunConfig& config, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config JSON must be an object");
  for (const auto& [key, value] : j.items()) set_key(config, key, value);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw InvalidArgument("--set expects KEY=VALUE, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json obj = json::object();
  obj[key] = value;
  apply_json(config, obj.dump());
}

Phantom resolve_phantom(const RunConfig& config) {
  if (!config.phantom_file.empty()) return read_phantom(config.phantom_file);
  return preset_phantom(config.phantom);
}

void cmd_simulate(const RunConfig& c, std::ostream& log) {
  c.validate();
  const Phantom ph = resolve_phantom(c);
  Mesh mesh;
  {
    StageTimer st(log, "mesh");
    mesh = c.inverse_crime ? reconstruction_mesh(c) : electrode_mesh(c.sim_mesh_h, c.coverage);
  }
  log << "simulation mesh: " << mesh.num_nodes() << " nodes, " << mesh.num_triangles()
      << " triangles\n";
  const auto layout = build_electrode_layout(mesh, c.k, c.coverage);
  const auto basis = current_basis(c.basis, c.k);
  Mat v;
  {
    StageTimer st(log, "forward");
    const CemSystem sys(mesh, layout, rasterize_phantom(ph, mesh), ContactImpedance::uniform(c.k, c.z));
    v = sys.solve_voltages(basis.currents);
  }
  const NoisyData noisy = apply_noise(v, basis, NoiseSpec{c.sigma, c.seed});
  log << "relative error " << noisy.relative_error << ", delta " << noisy.delta_bound << '\n';
  StageTimer st(log, "write");
  write_voltages(data_path(c), VoltageData{noisy.noisy, c.k, c.basis, c.sigma, c.seed});
  log << "wrote " << data_path(c).string() << '\n';
}

IndicatorField cmd_reconstruct(const RunConfig& c, std::ostream& log) {
  c.validate();
  const VoltageData data = read_voltages(data_path(c));
  if (data.k != c.k) throw InvalidArgument("data has k = " + std::to_string(data.k) +
                                           " but the config asks for k = " + std::to_string(c.k));
  if (data.basis != c.basis)
    throw InvalidArgument("data basis " + to_string(data.basis) + " differs from config basis " +
                          to_string(c.basis));
  const double gamma0 = c.gamma0 ? *c.gamma0 : resolve_phantom(c).gamma0;

  Mesh mesh;
  {
    StageTimer st(log, "mesh");
    mesh = reconstruction_mesh(c);
  }
  log << "reconstruction mesh: " << mesh.num_nodes() << " nodes, " << mesh.num_triangles()
      << " triangles\n";
  const auto layout = build_electrode_layout(mesh, c.k, c.coverage);
  const auto basis = current_basis(c.basis, c.k);
  MeasurementMatrix r0;
  SensitivityTensor sens;
  {
    StageTimer st(log, "background");
    const CemSystem s0(mesh, layout, Conductivity::constant(mesh.num_triangles(), gamma0),
                       ContactImpedance::uniform(c.k, c.z));
    r0 = measurement_matrix(s0, basis);
    sens = sensitivity_tensor(s0, basis);
  }
  const auto rdelta = measurement_from_voltages(symmetrize_data(data.voltages, basis.currents), basis);
  TestSetCollection cells;
  std::vector<Mat> blocks;
  {
    StageTimer st(log, "cells");
    cells = build_hex_test_sets(mesh, c.diam);
    blocks = cell_sensitivities(sens, cells);
  }
  log << "test cells: " << cells.cells.size() << '\n';
  ReconstructionConfig rc{c.betas(), c.mu, c.sign, c.algorithm, c.alpha};
  IndicatorField field;
  {
    StageTimer st(log, "algorithm" + std::to_string(c.algorithm));
    field = c.algorithm == 1 ? algorithm1(blocks, r0, rdelta, cells, rc)
                             : algorithm2(blocks, r0, rdelta, cells, rc);
  }
  log << "alpha " << field.alpha << ", support " << field.support_size() << " of "
      << cells.cells.size() << " cells\n";
  StageTimer st(log, "write");
  write_indicator_csv(c.out / "indicator.csv", field);
  if (c.image) {
    // Rendered from the CSV so the image is a function of the file alone.
    write_pgm(c.out / "indicator.pgm",
              render_indicator_pgm(read_indicator_csv(c.out / "indicator.csv")));
  }
  return field;
}

void cmd_convergence(const RunConfig& c, std::ostream& log) {
  c.validate();
  const Phantom ph = resolve_phantom(c);
  Mesh mesh;
  {
    StageTimer st(log, "mesh");
    mesh = reconstruction_mesh(c);
  }
  const Conductivity gamma = rasterize_phantom(ph, mesh);
  std::vector<ConvergenceRow> rows;
  {
    StageTimer st(log, "convergence");
    rows = convergence_sweep(mesh, gamma, c.k_list, c.coverage, c.z);
  }
  for (const auto& r : rows)
    log << "k " << r.k << ": distance " << r.norm_estimate << ", ratio " << r.ratio_vs_prev << '\n';
  write_convergence_csv(c.out / "convergence.csv", rows);
  if (!c.sandwich) return;
  SandwichSetup setup;
  setup.mesh = &mesh;
  setup.phantom = ph;
  setup.beta = c.sandwich_beta;
  setup.diam = c.sandwich_diam;
  setup.coverage = c.coverage;
  setup.z = c.z;
  setup.reference_order = c.trig_order;
  setup.seed = c.seed;
  std::vector<SandwichRow> srows;
  {
    StageTimer st(log, "sandwich");
    srows = sandwich_experiment(setup, c.k_list, c.sandwich_sigmas);
  }
  for (const auto& r : srows)
    log << "k " << r.k << " sigma " << r.sigma << ": |M0| " << r.reference_count << ", |Ma| "
        << r.alpha_count << ", |Ml| " << r.lambda_count << ", violations " << r.left_violations
        << '/' << r.right_violations << ", symmetric difference " << r.symmetric_difference << '\n';
  write_sandwich_csv(c.out / "sandwich.csv", srows);
}

bool cmd_selftest(const RunConfig& c, std::ostream& log) {
  SelftestOptions opt;
  opt.seed = c.seed;
  const auto results = run_selftest(opt, &log);
  int passed = 0;
  for (const auto& r : results) passed += r.passed();
  log << passed << '/' << results.size() << " properties passed\n";
  return passed == static_cast<int>(results.size());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Monotonicity-based EIT reconstruction with the complete electrode model"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int threads = 0;
  app.option_defaults()->always_capture_default();
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--set", overrides, "KEY=VALUE override (repeatable)")->take_all();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads, 0 = automatic");
  auto* simulate = app.add_subcommand("simulate", "simulate voltage data for a phantom");
  auto* reconstruct = app.add_subcommand("reconstruct", "run Algorithm 1 or 2 on voltage data");
  auto* convergence = app.add_subcommand("convergence", "electrode-count convergence study");
  auto* selftest = app.add_subcommand("selftest", "property test suite");
  for (auto* sub : {simulate, reconstruct, convergence, selftest}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) {
      if (!std::filesystem::exists(config_path))
        throw InvalidArgument("config file not found: " + config_path);
      apply_json(config, read_text(config_path));
    }
    for (const auto& o : overrides) apply_override(config, o);
    if (!out_dir.empty()) config.out = out_dir;
    if (threads < 0) throw InvalidArgument("--threads must be >= 0");
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    std::ostream& log = std::cerr;
    if (simulate->parsed()) {
      cmd_simulate(config, log);
    } else if (reconstruct->parsed()) {
      cmd_reconstruct(config, log);
    } else if (convergence->parsed()) {
      cmd_convergence(config, log);
    } else if (selftest->parsed()) {
      if (!cmd_selftest(config, std::cout)) return 3;
    }
    return 0;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace monoeit
