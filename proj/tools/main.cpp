#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pbsolv/errors.hpp"
#include "pbsolv/grid.hpp"
#include "pbsolv/model.hpp"
#include "pbsolv/oracle.hpp"
#include "pbsolv/pipeline.hpp"
#include "pbsolv/singular.hpp"

namespace {

using namespace pbsolv;

struct CommonArgs {
  std::string pqr;
  std::string config_path;
  std::optional<double> h, padding, eps_in, eps_out, kappa, tol;
  std::optional<std::int64_t> max_iter;
  std::optional<std::string> precond;
  std::optional<std::string> surface_type;
  std::optional<double> radius;
  std::vector<double> center;
  std::optional<std::string> surface_path;
  bool explicit_vacuum = false;
  std::string dump_phi0, dump_phi_tilde;
  std::vector<int> dump_local;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool pqr_required = true) {
  cmd->set_help_flag("--help", "print this help message");
  auto* p = cmd->add_option("--pqr", a.pqr, "solute file: 'x y z q r' per line, '#' comments");
  if (pqr_required) p->required();
  cmd->add_option("--config", a.config_path, "JSON run configuration");
  cmd->add_option("--h,--grid-spacing", a.h, "grid spacing (A)");
  cmd->add_option("--padding", a.padding, "box padding beyond the atom spheres (A)");
  cmd->add_option("--eps-in", a.eps_in, "solute dielectric constant");
  cmd->add_option("--eps-out", a.eps_out, "solvent dielectric constant");
  cmd->add_option("--kappa", a.kappa, "Debye-Hueckel screening parameter (1/A)");
  cmd->add_option("--tol", a.tol, "linear solver relative tolerance");
  cmd->add_option("--max-iter", a.max_iter, "linear solver iteration cap");
  cmd->add_option("--precond", a.precond, "preconditioner: jacobi|ilu|none");
  cmd->add_option("--surface", a.surface_type,
                  "surface type: sphere|union_of_spheres|mesh|eulerian_file");
  cmd->add_option("--radius", a.radius, "sphere surface radius (A)");
  cmd->add_option("--center", a.center, "sphere surface center (three numbers)")->expected(3);
  cmd->add_option("--surface-path", a.surface_path, "mesh or eulerian surface file");
  cmd->add_flag("--explicit-vacuum", a.explicit_vacuum,
                "cross-check with an explicit uniform-dielectric solve");
  cmd->add_option("--dump-phi0", a.dump_phi0, "write the harmonic correction field to a file");
  cmd->add_option("--dump-phi-tilde", a.dump_phi_tilde, "write the regular field to a file");
  cmd->add_option("--dump-local", a.dump_local,
                  "print the local interface system at edge i j k axis")
      ->expected(4);
}

RunConfig build_config(const CommonArgs& a) {
  RunConfig c;
  if (!a.config_path.empty()) c = load_run_config(a.config_path);
  if (a.h) c.grid_spacing = *a.h;
  if (a.padding) c.padding = *a.padding;
  if (a.eps_in) c.dielectric.eps_solute = *a.eps_in;
  if (a.eps_out) c.dielectric.eps_solvent = *a.eps_out;
  if (a.kappa) c.dielectric.kappa_bar = *a.kappa;
  if (a.tol) c.solver.rel_tolerance = *a.tol;
  if (a.max_iter) c.solver.max_iterations = *a.max_iter;
  if (a.precond) c.solver.precond = parse_preconditioner(*a.precond);
  if (a.surface_type) {
    const std::string& t = *a.surface_type;
    if (t == "sphere") c.surface.type = SurfaceSpec::Type::sphere;
    else if (t == "union_of_spheres") c.surface.type = SurfaceSpec::Type::union_of_spheres;
    else if (t == "mesh") c.surface.type = SurfaceSpec::Type::mesh;
    else if (t == "eulerian_file") c.surface.type = SurfaceSpec::Type::eulerian_file;
    else fail(ErrorKind::config, "unknown surface type '" + t + "'");
  }
  if (a.radius) c.surface.radius = *a.radius;
  if (a.center.size() == 3) c.surface.center = {a.center[0], a.center[1], a.center[2]};
  if (a.surface_path) c.surface.path = *a.surface_path;
  if (a.explicit_vacuum) c.explicit_vacuum = true;
  c.dump_phi0 = a.dump_phi0;
  c.dump_phi_tilde = a.dump_phi_tilde;
  if (a.dump_local.size() == 4) {
    c.mib.dump_edge = {a.dump_local[0], a.dump_local[1], a.dump_local[2], a.dump_local[3]};
    c.mib.dump_stream = &std::cerr;
  }
  return c;
}

int cmd_solve(const CommonArgs& a, bool csv) {
  const SoluteModel model = load_pqr(a.pqr);
  const RunConfig config = build_config(a);
  const EnergyReport rep = run_single(model, config);
  if (csv) {
    std::cout << EnergyReport::csv_header() << "\n" << rep.csv_row() << "\n";
  } else {
    std::cout << rep.to_json() << "\n";
  }
  return 0;
}

int cmd_sweep(const CommonArgs& a, const std::vector<double>& grid_sizes,
              const std::string& format) {
  const SoluteModel model = load_pqr(a.pqr);
  const RunConfig config = build_config(a);
  SweepSpec spec;
  spec.grid_sizes = grid_sizes;
  if (format == "csv") spec.format = SweepSpec::Format::csv;
  else if (format == "json") spec.format = SweepSpec::Format::json;
  else if (format == "table") spec.format = SweepSpec::Format::table;
  else fail(ErrorKind::config, "unknown sweep format '" + format + "'");
  const SweepResult res = run_sweep(model, config, spec);
  std::cout << res.format(spec.format);
  return 0;
}

int cmd_oracle(const CommonArgs& a, std::optional<double> born_r, double born_q) {
  UnitSystem units;
  double eps_in = a.eps_in.value_or(1.0);
  double eps_out = a.eps_out.value_or(80.0);
  char buf[128];
  if (born_r) {
    const double e = born_energy(born_q, *born_r, eps_in, eps_out, units);
    std::snprintf(buf, sizeof buf, "born R=%g Q=%g eps=(%g,%g): %.6f kcal/mol\n", *born_r,
                  born_q, eps_in, eps_out, e);
    std::cout << buf;
    return 0;
  }
  if (a.pqr.empty() || !a.radius)
    fail(ErrorKind::config, "oracle: need --born R, or --pqr and --radius for the sphere series");
  const SoluteModel model = load_pqr(a.pqr);
  KirkwoodConfig kc;
  kc.radius = *a.radius;
  kc.eps_in = eps_in;
  kc.eps_out = eps_out;
  kc.units = units;
  Vec3 center{0, 0, 0};
  if (a.center.size() == 3) center = {a.center[0], a.center[1], a.center[2]};
  for (const auto& atom : model.atoms) kc.charges.push_back({atom.center - center, atom.charge});
  const auto res = kirkwood_energy(kc);
  std::snprintf(buf, sizeof buf,
                "kirkwood R=%g eps=(%g,%g) charges=%zu: %.6f kcal/mol (N=%d, tail %.2e)\n",
                kc.radius, eps_in, eps_out, kc.charges.size(), res.energy, res.terms_used,
                res.tail_estimate);
  std::cout << buf;
  return 0;
}

int cmd_export_surface(const CommonArgs& a, const std::string& out_path) {
  const SoluteModel model = load_pqr(a.pqr);
  const RunConfig config = build_config(a);
  const CartesianGrid grid = build_grid(model, config.grid_spacing, config.padding);
  const auto surface = make_surface(config.surface, model);
  const DomainRegistration reg = register_domain(grid, *surface, &model);
  export_eulerian(reg, out_path);
  std::int64_t solute = 0;
  for (const auto f : reg.flags)
    if (f == Domain::solute) ++solute;
  std::cout << "wrote " << out_path << ": " << grid.dims[0] << "x" << grid.dims[1] << "x"
            << grid.dims[2] << " nodes, " << solute << " solute, "
            << reg.intersections.size() << " intersections\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-difference Poisson-Boltzmann reaction-field solver"};
  app.require_subcommand(1);

  CommonArgs solve_args, sweep_args, oracle_args, export_args, import_args;
  bool solve_csv = false;
  std::vector<double> grid_sizes;
  std::string sweep_format = "table";
  std::optional<double> born_r;
  double born_q = 1.0;
  std::string export_out, import_path;

  auto* solve = app.add_subcommand("solve", "single reaction-field energy run");
  add_common(solve, solve_args);
  solve->add_flag("--csv", solve_csv, "emit a CSV row instead of JSON");

  auto* sweep = app.add_subcommand("sweep", "grid-size sweep with relative errors");
  add_common(sweep, sweep_args);
  sweep->add_option("--grid-sizes", grid_sizes, "grid spacings to run")->required()->expected(-2);
  sweep->add_option("--format", sweep_format, "table|csv|json");

  auto* oracle = app.add_subcommand("oracle", "closed-form reference energies");
  add_common(oracle, oracle_args, false);
  oracle->add_option("--born", born_r, "Born sphere radius (A)");
  oracle->add_option("--q", born_q, "Born charge (e)");

  auto* exps = app.add_subcommand("export-surface", "register a surface and write it in the "
                                                    "Eulerian text format");
  add_common(exps, export_args);
  exps->add_option("--out", export_out, "output path")->required();

  auto* imps = app.add_subcommand("import-surface", "validate an Eulerian surface file against "
                                                    "the grid implied by the solute");
  add_common(imps, import_args);
  imps->add_option("--path", import_path, "Eulerian surface file")->required();

  try {
    app.parse(argc, argv);
    if (solve->parsed()) return cmd_solve(solve_args, solve_csv);
    if (sweep->parsed()) return cmd_sweep(sweep_args, grid_sizes, sweep_format);
    if (oracle->parsed()) return cmd_oracle(oracle_args, born_r, born_q);
    if (exps->parsed()) return cmd_export_surface(export_args, export_out);
    if (imps->parsed()) {
      const SoluteModel model = load_pqr(import_args.pqr);
      const RunConfig config = build_config(import_args);
      const CartesianGrid grid = build_grid(model, config.grid_spacing, config.padding);
      const auto data = import_eulerian(import_path, grid);
      const DomainRegistration reg = register_from_eulerian(grid, data, &model);
      std::cout << "ok: " << reg.intersections.size() << " intersections, "
                << reg.flags.size() << " nodes\n";
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const pbsolv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
