#include "pbsolv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pbsolv/errors.hpp"
#include "pbsolv/oracle.hpp"
#include "pbsolv/singular.hpp"

#include "json.hpp"

namespace pbsolv {

namespace {

SurfaceSpec parse_surface(const nlohmann::json& j) {
  SurfaceSpec s;
  const std::string type = j.value("type", "union_of_spheres");
  if (type == "sphere") {
    s.type = SurfaceSpec::Type::sphere;
    if (!j.contains("radius")) fail(ErrorKind::config, "surface: sphere needs a radius");
    s.radius = j["radius"].get<double>();
    if (j.contains("center")) {
      const auto& c = j["center"];
      if (!c.is_array() || c.size() != 3) fail(ErrorKind::config, "surface: center must be [x,y,z]");
      s.center = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
    }
  } else if (type == "union_of_spheres") {
    s.type = SurfaceSpec::Type::union_of_spheres;
  } else if (type == "mesh") {
    s.type = SurfaceSpec::Type::mesh;
    if (!j.contains("path")) fail(ErrorKind::config, "surface: mesh needs a path");
    s.path = j["path"].get<std::string>();
  } else if (type == "eulerian_file") {
    s.type = SurfaceSpec::Type::eulerian_file;
    if (!j.contains("path")) fail(ErrorKind::config, "surface: eulerian_file needs a path");
    s.path = j["path"].get<std::string>();
  } else {
    fail(ErrorKind::config, "surface: unknown type '" + type + "'");
  }
  return s;
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("config: ") + e.what());
  }
  RunConfig c;
  try {
    c.grid_spacing = j.value("grid_spacing", c.grid_spacing);
    c.padding = j.value("padding", c.padding);
    c.dielectric.eps_solute = j.value("eps_solute", c.dielectric.eps_solute);
    c.dielectric.eps_solvent = j.value("eps_solvent", c.dielectric.eps_solvent);
    c.dielectric.kappa_bar = j.value("kappa_bar", c.dielectric.kappa_bar);
    if (j.contains("surface")) c.surface = parse_surface(j["surface"]);
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      c.solver.rel_tolerance = s.value("tol", c.solver.rel_tolerance);
      c.solver.max_iterations = s.value("max_iter", c.solver.max_iterations);
      if (s.contains("precond"))
        c.solver.precond = parse_preconditioner(s["precond"].get<std::string>());
    }
    c.explicit_vacuum = j.value("explicit_vacuum", false);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("config: ") + e.what());
  }
  validate(c.dielectric);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::unique_ptr<InterfaceQuery> make_surface(const SurfaceSpec& spec, const SoluteModel& model) {
  switch (spec.type) {
    case SurfaceSpec::Type::sphere:
      return std::make_unique<SphereSurface>(spec.center, spec.radius);
    case SurfaceSpec::Type::union_of_spheres:
      return std::make_unique<UnionOfSpheres>(model);
    case SurfaceSpec::Type::mesh:
      return std::make_unique<TriangulatedSurface>(load_off_mesh(spec.path));
    case SurfaceSpec::Type::eulerian_file:
      fail(ErrorKind::config, "eulerian_file surfaces are registered directly from the file");
  }
  fail(ErrorKind::config, "make_surface: bad surface type");
}

namespace {

void dump_field(const std::string& path, const CartesianGrid& g,
                const std::vector<double>& values) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) fail(ErrorKind::parse, "cannot open " + path + " for writing");
  char buf[128];
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        std::snprintf(buf, sizeof buf, "%d %d %d %.17g\n", i, j, k,
                      values[static_cast<std::size_t>(g.index(i, j, k))]);
        out << buf;
      }
}

struct SolvedState {
  std::vector<double> phi_tilde;
  FictitiousSet fict;
  SolveDiagnostics diagnostics;
};

SolvedState solve_regular_part(const DomainRegistration& reg, const SoluteModel& model,
                               const DielectricModel& eps, const UnitSystem& units,
                               const std::vector<double>& jump, const SolverConfig& solver,
                               const MibOptions& mib_options) {
  SolvedState st;
  st.fict = build_fictitious(reg, eps, jump, mib_options);
  const auto bc = boundary_values(reg, model, eps, units);
  auto sys = assemble(reg, eps, jump, bc, &st.fict);
  equilibrate_rows(sys);
  SolveResult sol;
  try {
    sol = solve(sys, solver);
  } catch (const SolverFailure& f) {
    fail(ErrorKind::solver, std::string("regular-part solve failed: ") + f.what());
  }
  st.phi_tilde = std::move(sol.x);
  st.diagnostics = sol.diagnostics;
  return st;
}

} // namespace

EnergyReport run_single(const SoluteModel& model, const RunConfig& config) {
  validate(config.dielectric);
  if (model.atoms.empty()) fail(ErrorKind::model, "run_single: empty model");

  const CartesianGrid grid = build_grid(model, config.grid_spacing, config.padding);

  DomainRegistration reg;
  if (config.surface.type == SurfaceSpec::Type::eulerian_file) {
    const auto data = import_eulerian(config.surface.path, grid);
    reg = register_from_eulerian(grid, data, &model);
  } else {
    const auto surface = make_surface(config.surface, model);
    reg = register_domain(grid, *surface, &model);
  }

  const Phi0Field phi0 = solve_phi0(reg, model, config.dielectric, config.units, config.solver);
  const std::vector<double> jump = jump_rhs_all(phi0, model, config.dielectric, config.units);

  const SolvedState solvated = solve_regular_part(reg, model, config.dielectric, config.units,
                                                  jump, config.solver, config.mib);
  dump_field(config.dump_phi0, grid, phi0.values);
  dump_field(config.dump_phi_tilde, grid, solvated.phi_tilde);

  ReactionField field = extend_reaction_field(reg, solvated.phi_tilde, phi0, solvated.fict, model);

  if (config.explicit_vacuum) {
    // Reference solve with the solvent dielectric switched to the solute
    // value (and no screening); phi_rec is then the difference of the two
    // full potentials, which cancels the singular part exactly.
    DielectricModel vac = config.dielectric;
    vac.eps_solvent = vac.eps_solute;
    vac.kappa_bar = 0.0;
    const SolvedState vacuum = solve_regular_part(reg, model, vac, config.units, jump,
                                                  config.solver, MibOptions{});
    const ReactionField vac_field =
        extend_reaction_field(reg, vacuum.phi_tilde, phi0, vacuum.fict, model);
    // Both fields carry phi_tilde + phi0 (the extension rules are linear in
    // the extended quantities), so the difference is the reaction potential
    // phi_dielec - phi_vac with the singular part cancelled exactly.
    for (std::size_t q = 0; q < field.value.size(); ++q) {
      if (field.provenance[q] == ExtendProvenance::none) continue;
      if (vac_field.provenance[q] != field.provenance[q])
        fail(ErrorKind::extension, "explicit vacuum: extension provenance mismatch");
      field.value[q] -= vac_field.value[q];
    }
  }

  EnergyReport rep = reaction_field_energy(model, field, reg);
  rep.phi0_solve = phi0.diagnostics;
  rep.phi_tilde_solve = solvated.diagnostics;
  rep.mib = solvated.fict.stats;
  rep.subgrid_warnings = reg.subgrid_warnings;
  rep.phi0_stencil_fallbacks = phi0.stencil_fallbacks;
  return rep;
}

SweepResult run_sweep(const SoluteModel& model, const RunConfig& config, const SweepSpec& sweep) {
  if (sweep.grid_sizes.size() < 2)
    fail(ErrorKind::config, "run_sweep: need at least two grid sizes");
  auto sizes = sweep.grid_sizes;
  std::sort(sizes.begin(), sizes.end(), std::greater<double>());

  SweepResult result;
  result.reference_h = sizes.back();

  if (config.surface.type == SurfaceSpec::Type::sphere) {
    KirkwoodConfig kc;
    kc.radius = config.surface.radius;
    kc.eps_in = config.dielectric.eps_solute;
    kc.eps_out = config.dielectric.eps_solvent;
    kc.units = config.units;
    for (const auto& a : model.atoms)
      kc.charges.push_back({a.center - config.surface.center, a.charge});
    result.oracle_delta_G = kirkwood_energy(kc).energy;
  }

  for (const double h : sizes) {
    SweepRow row;
    row.h = h;
    RunConfig rc = config;
    rc.grid_spacing = h;
    try {
      const auto rep = run_single(model, rc);
      row.delta_G = rep.delta_G;
      if (result.oracle_delta_G)
        row.rel_err_vs_oracle =
            std::fabs(row.delta_G - *result.oracle_delta_G) / std::fabs(*result.oracle_delta_G);
    } catch (const Error& e) {
      row.error = e.what();
    }
    result.rows.push_back(row);
  }

  // relative error vs the finest grid that succeeded
  const auto& ref_row = result.rows.back();
  if (ref_row.error.empty()) {
    result.reference_delta_G = ref_row.delta_G;
    for (auto& row : result.rows)
      if (row.error.empty())
        row.rel_err_vs_reference = std::fabs(row.delta_G - result.reference_delta_G) /
                                   std::fabs(result.reference_delta_G);
  }
  return result;
}

std::string SweepResult::format(SweepSpec::Format f) const {
  std::ostringstream out;
  char buf[256];
  if (f == SweepSpec::Format::csv) {
    out << "h,delta_G_kcal_mol,rel_err_vs_finest" << (oracle_delta_G ? ",rel_err_vs_oracle" : "")
        << "\n";
    for (const auto& r : rows) {
      if (!r.error.empty()) {
        std::snprintf(buf, sizeof buf, "%.10g,failed,,", r.h);
        out << buf << "\n";
        continue;
      }
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.6g", r.h, r.delta_G, r.rel_err_vs_reference);
      out << buf;
      if (r.rel_err_vs_oracle) {
        std::snprintf(buf, sizeof buf, ",%.6g", *r.rel_err_vs_oracle);
        out << buf;
      }
      out << "\n";
    }
    return out.str();
  }
  if (f == SweepSpec::Format::json) {
    nlohmann::ordered_json j;
    j["reference_h"] = reference_h;
    if (oracle_delta_G) j["oracle_delta_G"] = *oracle_delta_G;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json jr;
      jr["h"] = r.h;
      if (!r.error.empty()) {
        jr["error"] = r.error;
      } else {
        jr["delta_G_kcal_mol"] = r.delta_G;
        jr["rel_err_vs_finest"] = r.rel_err_vs_reference;
        if (r.rel_err_vs_oracle) jr["rel_err_vs_oracle"] = *r.rel_err_vs_oracle;
      }
      j["rows"].push_back(jr);
    }
    return j.dump(2);
  }
  out << "    h        dG(kcal/mol)   rel.err(finest)";
  if (oracle_delta_G) out << "  rel.err(oracle)";
  out << "\n";
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::snprintf(buf, sizeof buf, "  %6.3f   failed: %s", r.h, r.error.c_str());
      out << buf << "\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "  %6.3f   %12.4f   %10.4f%%", r.h, r.delta_G,
                  100.0 * r.rel_err_vs_reference);
    out << buf;
    if (r.rel_err_vs_oracle) {
      std::snprintf(buf, sizeof buf, "   %10.4f%%", 100.0 * *r.rel_err_vs_oracle);
      out << buf;
    }
    out << "\n";
  }
  if (oracle_delta_G) {
    std::snprintf(buf, sizeof buf, "  oracle   %12.4f\n", *oracle_delta_G);
    out << buf;
  }
  return out.str();
}

} // namespace pbsolv
