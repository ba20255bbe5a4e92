#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "monoeit/cm_bridge.hpp"
#include "monoeit/fem.hpp"
#include "monoeit/mesh.hpp"
#include "monoeit/monotonicity.hpp"
#include "monoeit/synthdata.hpp"

namespace monoeit {

namespace fs = std::filesystem;

void write_mesh(const fs::path& path, const Mesh& mesh);
Mesh read_mesh(const fs::path& path);

void write_layout(const fs::path& path, const ElectrodeLayout& layout);
// Returns k, coverage and the arcs; mesh association is rebuilt by the caller.
ElectrodeLayout read_layout(const fs::path& path);

void write_measurement(const fs::path& path, const MeasurementMatrix& m);
// Entries and basis kind; the basis itself is regenerated from (kind, k).
MeasurementMatrix read_measurement(const fs::path& path);

struct VoltageData {
  Mat voltages;  // k x (k-1)
  int k = 0;
  BasisKind basis = BasisKind::trig;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// CSV plus a `<path>.meta` sidecar holding `k basis_kind sigma seed`.
void write_voltages(const fs::path& path, const VoltageData& data);
VoltageData read_voltages(const fs::path& path);

Phantom phantom_from_json(const std::string& text);
Phantom read_phantom(const fs::path& path);
std::string phantom_to_json(const Phantom& phantom);

struct IndicatorCsv {
  std::vector<Point> centers;
  std::vector<double> values;
};

void write_indicator_csv(const fs::path& path, const IndicatorField& field);
IndicatorCsv read_indicator_csv(const fs::path& path);

/// 256x256 P5 image of the hexagon cells over [-1,1]^2, max value at 255 and
/// background 0. The hexagon size is recovered from the centre spacing, so the
/// image depends only on the CSV contents.
std::vector<std::uint8_t> render_indicator_pgm(const IndicatorCsv& csv, int size = 256);
void write_pgm(const fs::path& path, const std::vector<std::uint8_t>& bytes);

void write_convergence_csv(const fs::path& path, const std::vector<ConvergenceRow>& rows);
void write_sandwich_csv(const fs::path& path, const std::vector<SandwichRow>& rows);

std::string read_text(const fs::path& path);

}  // namespace monoeit
