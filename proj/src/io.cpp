#include "monoeit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

namespace monoeit {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.precision(17);
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  return in;
}

void expect(std::istream& in, const std::string& word, const fs::path& path) {
  std::string got;
  if (!(in >> got) || got != word)
    throw InvalidArgument(path.string() + ": expected '" + word + "'");
}

template <typename T>
T read_value(std::istream& in, const fs::path& path) {
  T v;
  if (!(in >> v)) throw InvalidArgument(path.string() + ": truncated or malformed");
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (s.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(path.string() + ": bad number '" + s + "'");
  }
}

}  // namespace

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_mesh(const fs::path& path, const Mesh& mesh) {
  auto out = open_out(path);
  out << "nodes " << mesh.num_nodes() << '\n';
  for (const Point& p : mesh.nodes) out << fmt(p.x()) << ' ' << fmt(p.y()) << '\n';
  out << "triangles " << mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "boundary " << mesh.boundary.size() << '\n';
  for (const auto& e : mesh.boundary)
    out << e.a << ' ' << e.b << ' ' << fmt(e.theta_a) << ' ' << fmt(e.theta_b) << '\n';
}

Mesh read_mesh(const fs::path& path) {
  auto in = open_in(path);
  Mesh m;
  expect(in, "nodes", path);
  m.nodes.resize(read_value<std::size_t>(in, path));
  for (Point& p : m.nodes) {
    p.x() = read_value<double>(in, path);
    p.y() = read_value<double>(in, path);
  }
  expect(in, "triangles", path);
  m.triangles.resize(read_value<std::size_t>(in, path));
  for (auto& t : m.triangles)
    for (int& v : t) v = read_value<int>(in, path);
  expect(in, "boundary", path);
  m.boundary.resize(read_value<std::size_t>(in, path));
  for (auto& e : m.boundary) {
    e.a = read_value<int>(in, path);
    e.b = read_value<int>(in, path);
    e.theta_a = read_value<double>(in, path);
    e.theta_b = read_value<double>(in, path);
  }
  validate_mesh(m);
  return m;
}

void write_layout(const fs::path& path, const ElectrodeLayout& layout) {
  auto out = open_out(path);
  out << layout.k << ' ' << fmt(layout.coverage) << '\n';
  for (const Arc& a : layout.electrodes) out << fmt(a.start) << ' ' << fmt(a.end) << '\n';
}

ElectrodeLayout read_layout(const fs::path& path) {
  auto in = open_in(path);
  ElectrodeLayout layout;
  layout.k = read_value<int>(in, path);
  layout.coverage = read_value<double>(in, path);
  if (layout.k < 2) throw InvalidArgument(path.string() + ": k must be >= 2");
  layout.electrodes.resize(layout.k);
  for (Arc& a : layout.electrodes) {
    a.start = read_value<double>(in, path);
    a.end = read_value<double>(in, path);
  }
  return layout;
}

void write_measurement(const fs::path& path, const MeasurementMatrix& m) {
  auto out = open_out(path);
  out << m.basis.k() << ' ' << to_string(m.basis.kind) << '\n';
  for (Eigen::Index i = 0; i < m.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.entries.cols(); ++j)
      out << (j ? " " : "") << fmt(m.entries(i, j));
    out << '\n';
  }
}

MeasurementMatrix read_measurement(const fs::path& path) {
  auto in = open_in(path);
  const int k = read_value<int>(in, path);
  const BasisKind kind = parse_basis_kind(read_value<std::string>(in, path));
  MeasurementMatrix m;
  m.basis = current_basis(kind, k);
  m.entries.resize(k - 1, k - 1);
  for (int i = 0; i < k - 1; ++i)
    for (int j = 0; j < k - 1; ++j) m.entries(i, j) = read_value<double>(in, path);
  m.voltages = m.standard() * m.basis.currents;
  return m;
}

void write_voltages(const fs::path& path, const VoltageData& data) {
  {
    auto out = open_out(path);
    for (Eigen::Index i = 0; i < data.voltages.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.voltages.cols(); ++j)
        out << (j ? "," : "") << fmt(data.voltages(i, j));
      out << '\n';
    }
  }
  auto meta = open_out(path.string() + ".meta");
  meta << data.k << ' ' << to_string(data.basis) << ' ' << fmt(data.sigma) << ' ' << data.seed
       << '\n';
}

VoltageData read_voltages(const fs::path& path) {
  VoltageData d;
  {
    const fs::path meta_path = path.string() + ".meta";
    auto meta = open_in(meta_path);
    d.k = read_value<int>(meta, meta_path);
    d.basis = parse_basis_kind(read_value<std::string>(meta, meta_path));
    d.sigma = read_value<double>(meta, meta_path);
    d.seed = read_value<std::uint64_t>(meta, meta_path);
  }
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    for (const auto& cell : split_csv(line)) row.push_back(parse_double(cell, path));
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != d.k)
    throw InvalidArgument(path.string() + ": expected " + std::to_string(d.k) + " rows");
  d.voltages.resize(d.k, d.k - 1);
  for (int i = 0; i < d.k; ++i) {
    if (static_cast<int>(rows[i].size()) != d.k - 1)
      throw InvalidArgument(path.string() + ": expected " + std::to_string(d.k - 1) + " columns");
    for (int j = 0; j < d.k - 1; ++j) d.voltages(i, j) = rows[i][j];
  }
  return d;
}

Phantom phantom_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("phantom JSON: ") + e.what());
  }
  try {
    Phantom ph;
    ph.gamma0 = j.at("gamma0").get<double>();
    for (const auto& ji : j.value("inclusions", json::array())) {
      Inclusion inc;
      const std::string shape = ji.at("shape").get<std::string>();
      inc.contrast = ji.at("contrast").get<double>();
      const std::string sign = ji.value("sign", std::string("conductive"));
      if (sign != "conductive" && sign != "resistive")
        throw InvalidArgument("phantom JSON: unknown sign '" + sign + "'");
      inc.resistive = sign == "resistive";
      if (shape == "disk") {
        inc.shape = InclusionShape::disk;
        const auto c = ji.at("center").get<std::vector<double>>();
        if (c.size() != 2) throw InvalidArgument("phantom JSON: center needs two coordinates");
        inc.center = Point(c[0], c[1]);
        inc.radius = ji.at("radius").get<double>();
      } else if (shape == "polygon") {
        inc.shape = InclusionShape::polygon;
        for (const auto& v : ji.at("vertices").get<std::vector<std::vector<double>>>()) {
          if (v.size() != 2) throw InvalidArgument("phantom JSON: vertex needs two coordinates");
          inc.vertices.emplace_back(v[0], v[1]);
        }
      } else {
        throw InvalidArgument("phantom JSON: unknown shape '" + shape + "'");
      }
      ph.inclusions.push_back(std::move(inc));
    }
    ph.validate();
    return ph;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("phantom JSON: ") + e.what());
  }
}

Phantom read_phantom(const fs::path& path) {
  if (!fs::exists(path)) throw InvalidArgument("phantom file not found: " + path.string());
  return phantom_from_json(read_text(path));
}

std::string phantom_to_json(const Phantom& phantom) {
  using nlohmann::json;
  json j;
  j["gamma0"] = phantom.gamma0;
  j["inclusions"] = json::array();
  for (const Inclusion& inc : phantom.inclusions) {
    json ji;
    ji["contrast"] = inc.contrast;
    ji["sign"] = inc.resistive ? "resistive" : "conductive";
    if (inc.shape == InclusionShape::disk) {
      ji["shape"] = "disk";
      ji["center"] = {inc.center.x(), inc.center.y()};
      ji["radius"] = inc.radius;
    } else {
      ji["shape"] = "polygon";
      ji["vertices"] = json::array();
      for (const Point& v : inc.vertices) ji["vertices"].push_back({v.x(), v.y()});
    }
    j["inclusions"].push_back(ji);
  }
  return j.dump(2);
}

void write_indicator_csv(const fs::path& path, const IndicatorField& field) {
  auto out = open_out(path);
  out << "x,y,ind\n";
  for (std::size_t c = 0; c < field.values.size(); ++c)
    out << fmt(field.centers[c].x()) << ',' << fmt(field.centers[c].y()) << ','
        << fmt(field.values[c]) << '\n';
}

IndicatorCsv read_indicator_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y,ind", 0) != 0)
    throw InvalidArgument(path.string() + ": missing header x,y,ind");
  IndicatorCsv csv;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw InvalidArgument(path.string() + ": expected 3 columns");
    csv.centers.emplace_back(parse_double(cells[0], path), parse_double(cells[1], path));
    csv.values.push_back(parse_double(cells[2], path));
  }
  return csv;
}

std::vector<std::uint8_t> render_indicator_pgm(const IndicatorCsv& csv, int size) {
  const std::string header = "P5\n" + std::to_string(size) + " " + std::to_string(size) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  const std::size_t offset = bytes.size();
  bytes.resize(offset + static_cast<std::size_t>(size) * size, 0);
  const std::size_t n = csv.centers.size();
  if (n == 0) return bytes;

  // Neighbouring flat-top centres sit sqrt(3)/2 * diam apart.
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      spacing = std::min(spacing, (csv.centers[a] - csv.centers[b]).norm());
  const double diam = std::isfinite(spacing) && spacing > 0.0 ? 2.0 * spacing / std::sqrt(3.0) : 0.1;

  double vmax = 0.0;
  for (double v : csv.values) vmax = std::max(vmax, v);
  std::map<std::array<int, 2>, double> lookup;
  for (std::size_t c = 0; c < n; ++c) lookup[hex_axial(csv.centers[c], diam)] = csv.values[c];
  if (!(vmax > 0.0)) return bytes;

  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      const Point p(-1.0 + (col + 0.5) * 2.0 / size, 1.0 - (row + 0.5) * 2.0 / size);
      const auto it = lookup.find(hex_axial(p, diam));
      if (it == lookup.end() || !(it->second > 0.0)) continue;
      const double s = std::clamp(it->second / vmax, 0.0, 1.0);
      bytes[offset + static_cast<std::size_t>(row) * size + col] =
          static_cast<std::uint8_t>(std::lround(255.0 * s));
    }
  }
  return bytes;
}

void write_pgm(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_convergence_csv(const fs::path& path, const std::vector<ConvergenceRow>& rows) {
  auto out = open_out(path);
  out << "k,h_extended,norm_estimate,ratio_vs_prev\n";
  for (const auto& r : rows)
    out << r.k << ',' << fmt(r.h_extended) << ',' << fmt(r.norm_estimate) << ','
        << (std::isnan(r.ratio_vs_prev) ? std::string() : fmt(r.ratio_vs_prev)) << '\n';
}

void write_sandwich_csv(const fs::path& path, const std::vector<SandwichRow>& rows) {
  auto out = open_out(path);
  out << "k,sigma,delta,alpha,omega,lambda,reference_count,alpha_count,lambda_count,"
         "left_violations,right_violations,symmetric_difference\n";
  for (const auto& r : rows)
    out << r.k << ',' << fmt(r.sigma) << ',' << fmt(r.delta) << ',' << fmt(r.alpha) << ','
        << fmt(r.omega) << ',' << fmt(r.lambda) << ',' << r.reference_count << ','
        << r.alpha_count << ',' << r.lambda_count << ',' << r.left_violations << ','
        << r.right_violations << ',' << r.symmetric_difference << '\n';
}

}  // namespace monoeit
