#pragma once

#include <vector>

#include "pbsolv/grid.hpp"
#include "pbsolv/model.hpp"
#include "pbsolv/solver.hpp"
#include "pbsolv/vec3.hpp"

namespace pbsolv {

// Coulomb field of the solute charges in a uniform eps_solute medium,
// kcal/(mol e). Evaluation at an atom center is a singularity error;
// zero-charge atoms contribute nothing.
double phi_star(const SoluteModel& model, const DielectricModel& eps, const UnitSystem& units,
                const Vec3& point);
Vec3 phi_star_gradient(const SoluteModel& model, const DielectricModel& eps,
                       const UnitSystem& units, const Vec3& point);

// Harmonic correction on the solute domain with Dirichlet data on the
// interface; the data is -phi_star for the physical decomposition but is kept
// injectable so harmonic reproduction can be checked directly.
struct Phi0Field {
  const DomainRegistration* reg = nullptr;
  std::vector<double> values;    // per node; meaningful on solute nodes
  std::vector<double> dirichlet; // per intersection, the value on Gamma
  SolveDiagnostics diagnostics;
  mutable std::size_t stencil_fallbacks = 0; // 2-point one-sided substitutions

  double value(int i, int j, int k) const {
    return values[static_cast<std::size_t>(reg->grid.index(i, j, k))];
  }

  // Quadratic extension of the solute-side field across intersection `slot`
  // to the solvent endpoint of its edge.
  double extend_across(std::int32_t slot) const;

  // One-sided gradient at intersection `slot` from interior values plus the
  // Dirichlet value, projected later onto the interface normal.
  Vec3 gradient_at(std::int32_t slot) const;
};

Phi0Field solve_phi0_with_dirichlet(const DomainRegistration& reg,
                                    std::vector<double> dirichlet_per_intersection,
                                    const SolverConfig& config);

Phi0Field solve_phi0(const DomainRegistration& reg, const SoluteModel& model,
                     const DielectricModel& eps, const UnitSystem& units,
                     const SolverConfig& config);

// Flux-jump data eps_m * grad(phi_star + phi0) . n at one intersection / all
// intersections.
double jump_rhs(const Phi0Field& phi0, const SoluteModel& model, const DielectricModel& eps,
                const UnitSystem& units, std::int32_t slot);
std::vector<double> jump_rhs_all(const Phi0Field& phi0, const SoluteModel& model,
                                 const DielectricModel& eps, const UnitSystem& units);

// Debye-Hueckel values on the grid boundary for the regular-part solve:
// sum_i ke Qi exp(-kappa |r-ri|) / (eps_s |r-ri|). Returned per node
// (interior entries are zero).
std::vector<double> boundary_values(const DomainRegistration& reg, const SoluteModel& model,
                                    const DielectricModel& eps, const UnitSystem& units);

} // namespace pbsolv
