#pragma once

#include "spikebox/experiments.hpp"
#include "spikebox/semilinear.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spikebox {

inline constexpr const char* kVersion = "0.1.0";

/// Doubles rendered with 17 significant digits so text round-trips are
/// bit-exact.
std::string format_g17(double v);

inline constexpr const char* kSweepCsvHeader =
    "epsilon,energy,mass_p1,sup,inf,measure_eta1,cubes,is_constant,residual";

void emit_sweep_csv(const std::vector<SweepRecord>& records,
                    const std::string& path);

struct SweepCsvRow {
  double epsilon = 0.0, energy = 0.0, mass_p1 = 0.0, sup = 0.0, inf = 0.0,
         measure_eta1 = 0.0, residual = 0.0;
  long cubes = 0;
  int is_constant = 0;
};
std::vector<SweepCsvRow> parse_sweep_csv(const std::string& path);

/// Ordered key = value text; keys keep insertion order so emitted files are
/// stable and diffable.
class Manifest {
public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long value);
  void set(const std::string& key, const std::vector<double>& values);
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  bool has(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  void save(const std::string& path) const;
  static Manifest load(const std::string& path);

private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// key = value files for configs (same grammar as manifests).
std::map<std::string, std::string> read_key_values(const std::string& path);

void emit_solution_report(const SolutionReport& report,
                          const std::string& path);
void emit_field_csv(const NodalField& field, const std::string& path,
                    const std::string& value_column = "value");

/// Precomputed eigenpairs for a non-separable domain: header then one
/// eigenvalue and a row-major nodal eigenfunction per mode.
struct EigenImport {
  int dim = 0;
  std::vector<int> grid;
  int count = 0;
  double volume = 0.0;
  std::vector<double> lambdas;
  std::vector<Vector> modes;
};

EigenImport load_eigen_import(const std::string& path);

/// Throws with a mode-specific diagnostic on non-monotone eigenvalues, a
/// non-constant first mode, or a non-orthonormal pair.
void validate_eigen_import(const EigenImport& imp);

}  // namespace spikebox
