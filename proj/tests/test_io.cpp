#include "spikebox/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace spikebox;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("spikebox_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

SweepRecord make_record(double eps) {
  SweepRecord r;
  r.eps = eps;
  r.energy = 0.123456789012345678 * eps;
  r.mass_p1 = 3.0 * eps / 7.0;
  r.sup_u = 2.7182818284590452;
  r.inf_u = 1.0 / 3.0;
  r.eta_list = {0.5};
  r.level_measure = {eps * 0.9999999999999};
  r.cube_count = 3;
  r.is_constant = false;
  r.residual = 1e-11 / 3.0;
  return r;
}

}  // namespace

TEST_CASE("sweep csv round trip is bitwise on numeric fields") {
  TempDir tmp;
  std::vector<SweepRecord> records{make_record(0.001), make_record(0.04)};
  const std::string path = tmp.file("sweep.csv");
  emit_sweep_csv(records, path);
  auto rows = parse_sweep_csv(path);
  REQUIRE(rows.size() == 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].epsilon == records[i].eps);
    CHECK(rows[i].energy == records[i].energy);
    CHECK(rows[i].mass_p1 == records[i].mass_p1);
    CHECK(rows[i].sup == records[i].sup_u);
    CHECK(rows[i].inf == records[i].inf_u);
    CHECK(rows[i].measure_eta1 == records[i].level_measure[0]);
    CHECK(rows[i].cubes == records[i].cube_count);
    CHECK(rows[i].residual == records[i].residual);
  }
}

TEST_CASE("empty record list yields a header-only csv") {
  TempDir tmp;
  const std::string path = tmp.file("empty.csv");
  emit_sweep_csv({}, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == kSweepCsvHeader);
  CHECK(!std::getline(in, line));
}

TEST_CASE("manifest keeps insertion order and round trips") {
  TempDir tmp;
  Manifest m;
  m.set("tool", "spikebox");
  m.set("alpha", 0.1 + 0.2);
  m.set("count", 42L);
  m.set("grid", std::vector<double>{1.0, 2.0, 3.0});
  const std::string path = tmp.file("manifest.txt");
  m.save(path);

  Manifest back = Manifest::load(path);
  CHECK(back.get("tool") == std::string("spikebox"));
  CHECK(back.get_double("alpha") == 0.1 + 0.2);
  CHECK(back.get_doubles("grid") == std::vector<double>{1.0, 2.0, 3.0});

  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "tool = spikebox");
}

TEST_CASE("config files parse key = value with comments") {
  TempDir tmp;
  const std::string path = tmp.file("config.txt");
  {
    std::ofstream out(path);
    out << "# a comment\n";
    out << "solver.p = 2.5\n";
    out << "  seed =  7   # trailing\n";
    out << "not a pair\n";
  }
  auto kv = read_key_values(path);
  CHECK(kv.at("solver.p") == "2.5");
  CHECK(kv.at("seed") == "7");
  CHECK(kv.count("not a pair") == 0);
}

TEST_CASE("eigen import accepts the cosine basis and rejects corruption") {
  TempDir tmp;
  const std::string path = tmp.file("eigen.txt");
  // 1d basis on [0,2] sampled at 16 midpoints
  const int n = 16;
  const double len = 2.0;
  auto write_import = [&](bool corrupt_lambda, bool corrupt_mode) {
    std::ofstream out(path);
    out << "1\n" << n << "\n3\n" << format_g17(len) << "\n";
    for (int k = 0; k < 3; ++k) {
      double lam = std::pow(3.14159265358979323846 * k / len, 2.0);
      if (corrupt_lambda && k == 2) lam = 0.1;
      out << format_g17(lam) << "\n";
      for (int j = 0; j < n; ++j) {
        const double x = len * (j + 0.5) / n;
        double v = (k == 0 ? std::sqrt(1.0 / len)
                           : std::sqrt(2.0 / len) *
                                 std::cos(3.14159265358979323846 * k * x / len));
        if (corrupt_mode && k == 1 && j == 3) v += 0.2;
        out << format_g17(v) << "\n";
      }
    }
  };

  write_import(false, false);
  auto imp = load_eigen_import(path);
  CHECK(imp.count == 3);
  CHECK_NOTHROW(validate_eigen_import(imp));

  write_import(true, false);
  CHECK_THROWS_WITH_AS(validate_eigen_import(load_eigen_import(path)),
                       doctest::Contains("not nondecreasing"),
                       std::runtime_error);

  write_import(false, true);
  CHECK_THROWS_WITH_AS(validate_eigen_import(load_eigen_import(path)),
                       doctest::Contains("orthonormality"),
                       std::runtime_error);
}

TEST_CASE("g17 formatting round trips doubles") {
  for (double v : {1.0 / 3.0, 2.718281828459045, 1e-300, 6.02214076e23}) {
    CHECK(std::stod(format_g17(v)) == v);
    CHECK(std::stod(format_g17(-v)) == -v);
  }
}
