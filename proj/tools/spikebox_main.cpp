#include "spikebox/experiments.hpp"
#include "spikebox/extension.hpp"
#include "spikebox/io.hpp"
#include "spikebox/linear.hpp"
#include "spikebox/operators.hpp"
#include "spikebox/semilinear.hpp"
#include "spikebox/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace spikebox;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;

std::vector<double> parse_eps_grid(const std::string& text) {
  // a:b:log:n, a:b:lin:n, or a comma list.
  std::vector<std::string> parts;
  {
    std::string cur;
    for (char c : text) {
      if (c == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    parts.push_back(cur);
  }
  std::vector<double> eps;
  if (parts.size() == 4) {
    const double a = std::stod(parts[0]);
    const double b = std::stod(parts[1]);
    const int n = std::stoi(parts[3]);
    if (n < 1 || !(a > 0.0) || !(b > 0.0))
      throw std::invalid_argument("bad eps grid: " + text);
    for (int i = 0; i < n; ++i) {
      const double s = (n == 1) ? 0.0 : static_cast<double>(i) / (n - 1);
      if (parts[2] == "log")
        eps.push_back(a * std::pow(b / a, s));
      else if (parts[2] == "lin")
        eps.push_back(a + (b - a) * s);
      else
        throw std::invalid_argument("eps grid kind must be log or lin");
    }
    return eps;
  }
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      if (!cur.empty()) eps.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (eps.empty()) throw std::invalid_argument("empty eps grid");
  return eps;
}

struct CommonOptions {
  int dim = 2;
  std::vector<double> lengths{1.0, 1.0};
  std::vector<int> grid{128, 128};
  std::vector<int> cutoff;
  double p = 2.0;
  double tau = 0.5;
  double descent_tol = 1e-10;
  double newton_tol = 1e-11;
  int max_descent = 4000;
  int max_newton = 60;
  int oversample = 2;
  std::uint64_t seed = 0;
  std::vector<double> center;

  DomainPtr make_domain() const {
    auto cut = cutoff.empty() ? grid : cutoff;
    return RectDomain::build(dim, lengths, grid, cut);
  }
  SemilinearConfig make_config(double eps) const {
    SemilinearConfig cfg;
    cfg.domain = make_domain();
    cfg.eps = eps;
    cfg.p = p;
    cfg.descent_step = tau;
    cfg.descent_tol = descent_tol;
    cfg.newton_tol = newton_tol;
    cfg.max_descent_iter = max_descent;
    cfg.max_newton_iter = max_newton;
    cfg.oversample = oversample;
    cfg.seed = seed;
    cfg.tent_center = center;
    return cfg;
  }
  void describe(Manifest& m) const {
    m.set("domain.dim", static_cast<long>(dim));
    m.set("domain.lengths", lengths);
    std::vector<double> g(grid.begin(), grid.end());
    m.set("domain.grid", g);
    auto cut = cutoff.empty() ? grid : cutoff;
    std::vector<double> c(cut.begin(), cut.end());
    m.set("domain.cutoff", c);
    m.set("solver.p", p);
    m.set("solver.tau", tau);
    m.set("solver.descent_tol", descent_tol);
    m.set("solver.newton_tol", newton_tol);
    m.set("solver.max_descent", static_cast<long>(max_descent));
    m.set("solver.max_newton", static_cast<long>(max_newton));
    m.set("solver.oversample", static_cast<long>(oversample));
    m.set("seed", static_cast<long>(seed));
    if (!center.empty()) m.set("solver.center", center);
  }
  void absorb(const Manifest& m) {
    dim = static_cast<int>(m.get_double("domain.dim"));
    lengths = m.get_doubles("domain.lengths");
    grid.clear();
    for (double v : m.get_doubles("domain.grid"))
      grid.push_back(static_cast<int>(v));
    cutoff.clear();
    for (double v : m.get_doubles("domain.cutoff"))
      cutoff.push_back(static_cast<int>(v));
    p = m.get_double("solver.p");
    tau = m.get_double("solver.tau");
    descent_tol = m.get_double("solver.descent_tol");
    newton_tol = m.get_double("solver.newton_tol");
    max_descent = static_cast<int>(m.get_double("solver.max_descent"));
    max_newton = static_cast<int>(m.get_double("solver.max_newton"));
    oversample = static_cast<int>(m.get_double("solver.oversample"));
    seed = static_cast<std::uint64_t>(m.get_double("seed"));
    if (m.has("solver.center")) center = m.get_doubles("solver.center");
  }
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--n", opt.dim, "space dimension");
  cmd->add_option("--lengths", opt.lengths, "side lengths per axis");
  cmd->add_option("--grid", opt.grid, "grid size per axis");
  cmd->add_option("--cutoff", opt.cutoff, "spectral cutoff per axis");
  cmd->add_option("--p", opt.p, "nonlinearity exponent");
  cmd->add_option("--tau", opt.tau, "descent step");
  cmd->add_option("--descent-tol", opt.descent_tol);
  cmd->add_option("--newton-tol", opt.newton_tol);
  cmd->add_option("--max-descent", opt.max_descent);
  cmd->add_option("--max-newton", opt.max_newton);
  cmd->add_option("--oversample", opt.oversample);
  cmd->add_option("--seed", opt.seed, "random seed");
  cmd->add_option("--center", opt.center, "tent center coordinates");
}

// nx/ny shorthand for the common planar case
void add_planar_flags(CLI::App* cmd, int& nx, int& ny) {
  cmd->add_option("--nx", nx, "grid size along x (2d shorthand)");
  cmd->add_option("--ny", ny, "grid size along y (2d shorthand)");
}

void apply_planar(CommonOptions& opt, int nx, int ny) {
  if (nx > 0 || ny > 0) {
    if (opt.dim != 2)
      throw std::invalid_argument("--nx/--ny only make sense with --n 2");
    if (nx > 0 && ny <= 0) ny = nx;
    if (ny > 0 && nx <= 0) nx = ny;
    opt.grid = {nx, ny};
  }
}

int run_solve(const CommonOptions& opt, double eps, const std::string& out_dir) {
  fs::create_directories(out_dir);
  SemilinearConfig cfg = opt.make_config(eps);
  SolutionReport rep = solve(cfg);

  Manifest m;
  m.set("tool", "spikebox");
  m.set("version", kVersion);
  m.set("kind", "solve");
  opt.describe(m);
  m.set("solve.eps", eps);
  m.set("files.report", "report.txt");
  m.set("files.solution", "solution.csv");
  m.set("timing.seconds", rep.wall_time_seconds);
  m.save(out_dir + "/manifest.txt");
  emit_solution_report(rep, out_dir + "/report.txt");
  emit_field_csv(to_nodal(rep.u), out_dir + "/solution.csv", "u");

  std::cout << "status " << to_string(rep.status) << "  energy "
            << format_g17(rep.energy) << "  residual "
            << format_g17(rep.residual_norm) << "  sup " << rep.sup_u
            << "  inf " << rep.inf_u
            << (rep.is_constant ? "  [constant]" : "") << '\n';
  return rep.accepted() ? kExitOk : kExitSolver;
}

int run_sweep_cmd(const CommonOptions& opt, const std::vector<double>& eps_list,
                  int threads, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  SweepConfig sweep;
  sweep.eps_list = eps_list;
  sweep.base = opt.make_config(eps_list.front());
  sweep.threads = threads;
  auto records = run_sweep(sweep);
  emit_sweep_csv(records, out_dir + "/sweep.csv");

  Manifest m;
  m.set("tool", "spikebox");
  m.set("version", kVersion);
  m.set("kind", "sweep");
  opt.describe(m);
  m.set("sweep.eps", eps_list);
  m.set("sweep.q_list", sweep.q_list);
  m.set("sweep.eta_factors", sweep.eta_factors);

  bool all_ok = true;
  for (const auto& r : records) all_ok = all_ok && r.status == "converged";

  try {
    auto fit = energy_scaling_fit(records);
    m.set("fit.energy_slope", fit.slope);
    m.set("fit.energy_intercept", fit.intercept);
    m.set("fit.energy_residual", fit.residual);
    auto band = lq_scaling(records, opt.p + 1.0, opt.dim);
    m.set("fit.mass_band_lo", band.lo);
    m.set("fit.mass_band_hi", band.hi);
    auto bound = uniform_bound_report(records);
    m.set("constants.C_sup", bound.max_sup);
    m.set("constants.sup_drift", bound.drift_ratio);

    auto fit_dom = RectDomain::build(
        opt.dim, opt.lengths, std::vector<int>(opt.dim, 48),
        std::vector<int>(opt.dim, 48));
    auto eq = fit_norm_equivalence(fit_dom, 24, opt.seed + 17);
    m.set("constants.C1", eq.c1);
    m.set("constants.C2", eq.c2);
    m.set("constants.eps_star",
          epsilon_star_estimate(opt.p, bound.max_sup, eq.c1, eq.c2));
  } catch (const std::exception& e) {
    m.set("fit.error", std::string(e.what()));
  }

  m.set("files.records", "sweep.csv");
  m.set("timing.seconds",
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count());
  m.save(out_dir + "/manifest.txt");

  std::cout << "sweep: " << records.size() << " records -> " << out_dir
            << "/sweep.csv\n";
  for (const auto& r : records)
    std::cout << "  eps " << format_g17(r.eps) << "  energy "
              << format_g17(r.energy) << (r.is_constant ? "  [constant]" : "")
              << "  [" << r.status << "]\n";
  return all_ok ? kExitOk : kExitSolver;
}

int run_kernels(const CommonOptions& opt, const std::vector<double>& t_list,
                const std::vector<double>& y_list, double eps,
                const std::string& out_path) {
  auto dom = opt.make_domain();
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "kind,param,x0,x1,z0,z1,value,tail\n";
  const std::vector<std::vector<double>> pts{
      {0.387, 0.544}, {0.12, 0.83}, {0.701, 0.299}};
  auto emit = [&](const std::string& kind, double param,
                  std::span<const double> x, std::span<const double> z,
                  KernelValue v) {
    out << kind << ',' << format_g17(param) << ',' << format_g17(x[0]) << ','
        << format_g17(x[1]) << ',' << format_g17(z[0]) << ','
        << format_g17(z[1]) << ',' << format_g17(v.value) << ','
        << format_g17(v.tail_bound) << '\n';
  };
  for (double t : t_list)
    for (const auto& x : pts)
      for (const auto& z : pts)
        emit("heat", t, x, z, heat_kernel(*dom, t, x, z));
  for (double y : y_list)
    for (const auto& x : pts)
      for (const auto& z : pts) {
        emit("poisson_direct", y, x, z,
             poisson_kernel(*dom, y, x, z, PoissonRoute::direct));
        emit("poisson_subordinated", y, x, z,
             poisson_kernel(*dom, y, x, z, PoissonRoute::subordinated));
      }
  for (const auto& x : pts)
    for (const auto& z : pts)
      if (x != z)
        emit("resolvent", eps, x, z,
             KernelValue{resolvent_kernel(*dom, eps, x, z), 0.0});
  std::cout << "kernel table -> " << out_path << '\n';
  return kExitOk;
}

int run_ks(const CommonOptions& opt, const KSParams& ks, bool constant_branch,
           const std::string& out_dir) {
  fs::create_directories(out_dir);
  ks.validate(opt.dim);
  const double eps = ks.implied_eps();

  CommonOptions adjusted = opt;
  adjusted.p = ks.exponent();
  SpectralField u;
  std::string status = "constant";
  if (constant_branch) {
    auto dom = adjusted.make_domain();
    u = SpectralField::zero(dom);
    u.coeff[0] = std::sqrt(dom->volume());
  } else {
    SolutionReport rep = solve(adjusted.make_config(eps));
    if (!rep.accepted()) {
      std::cerr << "ks: scalar solve failed: " << to_string(rep.status) << '\n';
      return kExitSolver;
    }
    u = rep.u;
    status = to_string(rep.status);
  }

  auto rec = keller_segel_reconstruct(u, ks, adjusted.oversample);
  emit_field_csv(rec.rho, out_dir + "/rho.csv", "rho");
  emit_field_csv(rec.chem, out_dir + "/chem.csv", "c");

  Manifest m;
  m.set("tool", "spikebox");
  m.set("version", kVersion);
  m.set("kind", "ks");
  adjusted.describe(m);
  m.set("ks.d1", ks.d1);
  m.set("ks.d2", ks.d2);
  m.set("ks.chi", ks.chi);
  m.set("ks.a", ks.a);
  m.set("ks.b", ks.b);
  m.set("ks.mean_density", ks.mean_density);
  m.set("ks.mapping", ks.mapping == KsMapping::linear ? "linear" : "squared");
  m.set("ks.eps_linear_mapping", ks.d2 / ks.a);
  m.set("ks.eps_squared_mapping", (ks.d2 / ks.a) * (ks.d2 / ks.a));
  m.set("ks.eps_used", eps);
  m.set("ks.lambda", rec.lambda);
  m.set("ks.beta", rec.beta);
  m.set("ks.flux_residual", rec.flux_residual);
  m.set("ks.chemical_residual", rec.chemical_residual);
  m.set("ks.solve_status", status);
  m.save(out_dir + "/manifest.txt");

  std::cout << "ks: lambda " << format_g17(rec.lambda) << "  flux residual "
            << format_g17(rec.flux_residual) << "  chemical residual "
            << format_g17(rec.chemical_residual) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral solver and verification harness for fractional "
               "Neumann spike problems"};
  app.require_subcommand(1);

  CommonOptions opt;
  int nx = 0, ny = 0;
  std::string out_dir = "run";
  std::string config_path;
  std::string manifest_path;

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "compute one least-energy solution");
  double eps_value = 0.01;
  add_common_flags(solve_cmd, opt);
  add_planar_flags(solve_cmd, nx, ny);
  solve_cmd->add_option("--epsilon", eps_value, "diffusion parameter");
  solve_cmd->add_option("--out", out_dir, "output directory");
  solve_cmd->add_option("--config", config_path, "key = value config file");
  solve_cmd->add_option("--from-manifest", manifest_path, "re-run a manifest");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "epsilon sweep with fits");
  std::string eps_grid = "1e-3:1e-1:log:9";
  int threads = 0;
  add_common_flags(sweep_cmd, opt);
  add_planar_flags(sweep_cmd, nx, ny);
  sweep_cmd->add_option("--eps", eps_grid, "grid a:b:log:n, a:b:lin:n, or list");
  sweep_cmd->add_option("--threads", threads, "record-level parallelism");
  sweep_cmd->add_option("--out", out_dir, "output directory");
  sweep_cmd->add_option("--config", config_path, "key = value config file");
  sweep_cmd->add_option("--from-manifest", manifest_path, "re-run a manifest");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run a named invariant suite");
  std::string suite = "operators";
  double tol = 1e-6;
  verify_cmd->add_option("--suite", suite,
                         "operators | extension | linear | semilinear");
  verify_cmd->add_option("--tol", tol, "tolerance for route-agreement checks");

  // kernels
  auto* kernels_cmd = app.add_subcommand("kernels", "kernel tables at samples");
  std::vector<double> t_list{0.05, 0.2, 1.0};
  std::vector<double> y_list{0.05, 0.2, 1.0};
  double kernel_eps = 1.0;
  std::string kernels_out = "kernels.csv";
  add_common_flags(kernels_cmd, opt);
  add_planar_flags(kernels_cmd, nx, ny);
  kernels_cmd->add_option("--t", t_list, "heat kernel times");
  kernels_cmd->add_option("--y", y_list, "poisson kernel heights");
  kernels_cmd->add_option("--epsilon", kernel_eps, "resolvent eps");
  kernels_cmd->add_option("--out", kernels_out, "output csv");

  // ks
  auto* ks_cmd = app.add_subcommand("ks", "Keller-Segel steady state");
  KSParams ks;
  std::string mapping = "linear";
  bool ks_constant = false;
  add_common_flags(ks_cmd, opt);
  add_planar_flags(ks_cmd, nx, ny);
  ks_cmd->add_option("--d1", ks.d1);
  ks_cmd->add_option("--d2", ks.d2);
  ks_cmd->add_option("--chi", ks.chi);
  ks_cmd->add_option("--a", ks.a);
  ks_cmd->add_option("--b", ks.b);
  ks_cmd->add_option("--ubar", ks.mean_density, "prescribed density mean");
  ks_cmd->add_option("--mapping", mapping, "linear | squared");
  ks_cmd->add_flag("--constant", ks_constant, "use the constant branch");
  ks_cmd->add_option("--out", out_dir, "output directory");

  // import-eigen
  auto* import_cmd = app.add_subcommand("import-eigen", "validate eigenpair file");
  std::string import_path;
  import_cmd->add_option("file", import_path, "eigenpair text file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // help and version requests
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // usage text to stderr
    return kExitValidation;
  }

  try {
    // Config file values override defaults; explicit flags override both.
    if (!config_path.empty()) {
      auto kv = read_key_values(config_path);
      auto take = [&](const char* key, auto& slot, auto parse) {
        auto it = kv.find(key);
        if (it != kv.end()) slot = parse(it->second);
      };
      CLI::App* active = solve_cmd->parsed() ? solve_cmd : sweep_cmd;
      auto unset = [&](const char* flag) {
        auto* o = active->get_option_no_throw(flag);
        return o == nullptr || o->count() == 0;
      };
      auto to_d = [](const std::string& s) { return std::stod(s); };
      auto to_i = [](const std::string& s) { return std::stoi(s); };
      auto to_dv = [](const std::string& s) {
        std::istringstream ss(s);
        std::vector<double> v;
        double x;
        while (ss >> x) v.push_back(x);
        return v;
      };
      auto to_iv = [&](const std::string& s) {
        std::vector<int> v;
        for (double x : to_dv(s)) v.push_back(static_cast<int>(x));
        return v;
      };
      if (unset("--n")) take("domain.dim", opt.dim, to_i);
      if (unset("--lengths")) take("domain.lengths", opt.lengths, to_dv);
      if (unset("--grid")) take("domain.grid", opt.grid, to_iv);
      if (unset("--cutoff")) take("domain.cutoff", opt.cutoff, to_iv);
      if (unset("--p")) take("solver.p", opt.p, to_d);
      if (unset("--tau")) take("solver.tau", opt.tau, to_d);
      if (unset("--descent-tol")) take("solver.descent_tol", opt.descent_tol, to_d);
      if (unset("--newton-tol")) take("solver.newton_tol", opt.newton_tol, to_d);
      if (unset("--max-descent")) take("solver.max_descent", opt.max_descent, to_i);
      if (unset("--max-newton")) take("solver.max_newton", opt.max_newton, to_i);
      if (unset("--center")) take("solver.center", opt.center, to_dv);
      if (unset("--seed")) take("seed", opt.seed, [](const std::string& s) {
        return static_cast<std::uint64_t>(std::stoull(s));
      });
      if (unset("--oversample")) take("solver.oversample", opt.oversample, to_i);
      if (unset("--epsilon")) take("solve.eps", eps_value, to_d);
      if (unset("--eps")) take("sweep.eps_grid", eps_grid,
                               [](const std::string& s) { return s; });
    }
    if (!manifest_path.empty()) {
      Manifest m = Manifest::load(manifest_path);
      opt.absorb(m);
      if (solve_cmd->parsed()) eps_value = m.get_double("solve.eps");
      if (sweep_cmd->parsed()) {
        std::vector<double> eps = m.get_doubles("sweep.eps");
        std::string joined;
        for (std::size_t i = 0; i < eps.size(); ++i)
          joined += (i ? "," : "") + format_g17(eps[i]);
        eps_grid = joined;
      }
    }
    apply_planar(opt, nx, ny);

    if (solve_cmd->parsed()) return run_solve(opt, eps_value, out_dir);
    if (sweep_cmd->parsed())
      return run_sweep_cmd(opt, parse_eps_grid(eps_grid), threads, out_dir);
    if (verify_cmd->parsed()) {
      auto results = run_verify_suite(suite, tol);
      for (const auto& r : results)
        std::cout << (r.passed ? "ok   " : "FAIL ") << r.name << "  ("
                  << format_g17(r.observed) << " vs " << format_g17(r.bound)
                  << ")\n";
      return all_passed(results) ? kExitOk : kExitValidation;
    }
    if (kernels_cmd->parsed())
      return run_kernels(opt, t_list, y_list, kernel_eps, kernels_out);
    if (ks_cmd->parsed()) {
      ks.mapping = (mapping == "squared") ? KsMapping::squared
                                          : KsMapping::linear;
      return run_ks(opt, ks, ks_constant, out_dir);
    }
    if (import_cmd->parsed()) {
      auto imp = load_eigen_import(import_path);
      validate_eigen_import(imp);
      std::cout << "eigen import ok: " << imp.count << " modes on a "
                << imp.dim << "d grid\n";
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
