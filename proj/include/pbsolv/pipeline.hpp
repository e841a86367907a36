#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pbsolv/energy.hpp"
#include "pbsolv/grid.hpp"
#include "pbsolv/mib.hpp"
#include "pbsolv/model.hpp"
#include "pbsolv/solver.hpp"
#include "pbsolv/surface.hpp"

namespace pbsolv {

struct SurfaceSpec {
  enum class Type { sphere, union_of_spheres, mesh, eulerian_file };
  Type type = Type::union_of_spheres;
  Vec3 center{0, 0, 0}; // sphere
  double radius = 0.0;  // sphere
  std::string path;     // mesh / eulerian_file
};

struct RunConfig {
  double grid_spacing = 0.5;
  double padding = 4.0;
  DielectricModel dielectric;
  UnitSystem units;
  SurfaceSpec surface;
  SolverConfig solver;
  bool explicit_vacuum = false; // cross-check phi_rec against a uniform-eps solve
  MibOptions mib;
  std::string dump_phi0;      // optional field dump paths
  std::string dump_phi_tilde;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

std::unique_ptr<InterfaceQuery> make_surface(const SurfaceSpec& spec, const SoluteModel& model);

// register -> decompose -> assemble -> solve -> extend -> energy
EnergyReport run_single(const SoluteModel& model, const RunConfig& config);

struct SweepSpec {
  std::vector<double> grid_sizes;
  enum class Format { table, csv, json } format = Format::table;
};

struct SweepRow {
  double h = 0.0;
  double delta_G = 0.0;
  double rel_err_vs_reference = 0.0;
  std::optional<double> rel_err_vs_oracle;
  std::string error; // non-empty when this grid size failed
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double reference_h = 0.0;
  double reference_delta_G = 0.0;
  std::optional<double> oracle_delta_G;

  std::string format(SweepSpec::Format f) const;
};

// One pipeline run per grid size with a fixed box/padding; the finest grid is
// the reference for the relative-error column. Single failures are recorded
// in-row and the sweep continues.
SweepResult run_sweep(const SoluteModel& model, const RunConfig& config, const SweepSpec& sweep);

} // namespace pbsolv
