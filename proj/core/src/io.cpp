#include "spikebox/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spikebox {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit_sweep_csv(const std::vector<SweepRecord>& records,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_sweep_csv: cannot write " + path);
  out << kSweepCsvHeader << '\n';
  for (const auto& r : records) {
    const double measure =
        r.level_measure.empty() ? 0.0 : r.level_measure.front();
    out << format_g17(r.eps) << ',' << format_g17(r.energy) << ','
        << format_g17(r.mass_p1) << ',' << format_g17(r.sup_u) << ','
        << format_g17(r.inf_u) << ',' << format_g17(measure) << ','
        << r.cube_count << ',' << (r.is_constant ? 1 : 0) << ','
        << format_g17(r.residual) << '\n';
  }
}

std::vector<SweepCsvRow> parse_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_sweep_csv: cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader)
    throw std::runtime_error("parse_sweep_csv: unexpected header in " + path);
  std::vector<SweepCsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9)
      throw std::runtime_error("parse_sweep_csv: malformed row: " + line);
    SweepCsvRow r;
    r.epsilon = std::stod(cells[0]);
    r.energy = std::stod(cells[1]);
    r.mass_p1 = std::stod(cells[2]);
    r.sup = std::stod(cells[3]);
    r.inf = std::stod(cells[4]);
    r.measure_eta1 = std::stod(cells[5]);
    r.cubes = std::stol(cells[6]);
    r.is_constant = std::stoi(cells[7]);
    r.residual = std::stod(cells[8]);
    rows.push_back(r);
  }
  return rows;
}

void Manifest::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
  } else {
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
  }
}

void Manifest::set(const std::string& key, double value) {
  set(key, format_g17(value));
}

void Manifest::set(const std::string& key, long value) {
  set(key, std::to_string(value));
}

void Manifest::set(const std::string& key, const std::vector<double>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ' ';
    joined += format_g17(values[i]);
  }
  set(key, joined);
}

std::optional<std::string> Manifest::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].second;
}

double Manifest::get_double(const std::string& key) const {
  auto v = get(key);
  if (!v) throw std::runtime_error("manifest: missing key " + key);
  return std::stod(*v);
}

std::vector<double> Manifest::get_doubles(const std::string& key) const {
  auto v = get(key);
  if (!v) throw std::runtime_error("manifest: missing key " + key);
  std::istringstream ss(*v);
  std::vector<double> out;
  double x;
  while (ss >> x) out.push_back(x);
  return out;
}

bool Manifest::has(const std::string& key) const { return index_.count(key) > 0; }

void Manifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

Manifest Manifest::load(const std::string& path) {
  Manifest m;
  for (const auto& [k, v] : read_key_values(path)) m.set(k, v);
  return m;
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

void emit_solution_report(const SolutionReport& report,
                          const std::string& path) {
  Manifest m;
  m.set("status", to_string(report.status));
  m.set("energy", report.energy);
  m.set("residual", report.residual_norm);
  m.set("nehari_defect", report.nehari_defect);
  m.set("sup", report.sup_u);
  m.set("inf", report.inf_u);
  m.set("is_constant", static_cast<long>(report.is_constant ? 1 : 0));
  m.set("descent_iterations", static_cast<long>(report.descent_iterations));
  m.set("newton_iterations", static_cast<long>(report.newton_iterations));
  m.set("wall_time_seconds", report.wall_time_seconds);
  m.save(path);
}

void emit_field_csv(const NodalField& field, const std::string& path,
                    const std::string& value_column) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_field_csv: cannot write " + path);
  const auto& dom = *field.domain;
  for (int a = 0; a < dom.dim(); ++a) out << 'x' << a << ',';
  out << value_column << '\n';
  for (std::int64_t i = 0; i < field.values.size(); ++i) {
    const auto x = dom.node_point(i);
    for (int a = 0; a < dom.dim(); ++a) out << format_g17(x[a]) << ',';
    out << format_g17(field.values[i]) << '\n';
  }
}

EigenImport load_eigen_import(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("eigen import: cannot read " + path);
  EigenImport imp;
  if (!(in >> imp.dim) || imp.dim < 1)
    throw std::runtime_error("eigen import: bad dimension header");
  imp.grid.resize(imp.dim);
  std::int64_t nodes = 1;
  for (int a = 0; a < imp.dim; ++a) {
    if (!(in >> imp.grid[a]) || imp.grid[a] < 1)
      throw std::runtime_error("eigen import: bad grid header");
    nodes *= imp.grid[a];
  }
  if (!(in >> imp.count) || imp.count < 1)
    throw std::runtime_error("eigen import: bad mode count");
  if (!(in >> imp.volume) || !(imp.volume > 0.0))
    throw std::runtime_error("eigen import: bad volume");
  imp.lambdas.resize(imp.count);
  imp.modes.resize(imp.count);
  for (int m = 0; m < imp.count; ++m) {
    if (!(in >> imp.lambdas[m]))
      throw std::runtime_error("eigen import: missing eigenvalue for mode " +
                               std::to_string(m));
    imp.modes[m].resize(nodes);
    for (std::int64_t i = 0; i < nodes; ++i)
      if (!(in >> imp.modes[m][i]))
        throw std::runtime_error("eigen import: mode " + std::to_string(m) +
                                 " truncated at value " + std::to_string(i));
  }
  return imp;
}

void validate_eigen_import(const EigenImport& imp) {
  for (int m = 1; m < imp.count; ++m)
    if (imp.lambdas[m] < imp.lambdas[m - 1] - 1e-12 * std::abs(imp.lambdas[m - 1]))
      throw std::runtime_error(
          "eigen import: eigenvalues not nondecreasing at mode " +
          std::to_string(m) + " (" + format_g17(imp.lambdas[m]) + " < " +
          format_g17(imp.lambdas[m - 1]) + ")");
  if (imp.count > 0) {
    const double expected = 1.0 / std::sqrt(imp.volume);
    const double dev = (imp.modes[0].array() - expected).abs().maxCoeff();
    if (dev > 1e-8)
      throw std::runtime_error(
          "eigen import: first mode deviates from 1/sqrt(volume) by " +
          format_g17(dev));
  }
  const double w = imp.volume / static_cast<double>(imp.modes[0].size());
  for (int i = 0; i < imp.count; ++i) {
    for (int j = i; j < imp.count; ++j) {
      const double g = w * imp.modes[i].dot(imp.modes[j]);
      const double target = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - target) > 1e-6)
        throw std::runtime_error("eigen import: modes (" + std::to_string(i) +
                                 ", " + std::to_string(j) +
                                 ") fail orthonormality: inner product " +
                                 format_g17(g));
    }
  }
}

}  // namespace spikebox
