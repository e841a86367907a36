#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbsolv/grid.hpp"
#include "pbsolv/mib.hpp"
#include "pbsolv/model.hpp"
#include "pbsolv/singular.hpp"

namespace pbsolv {

enum class ExtendProvenance : std::uint8_t { none, interior, extended_top, extended_mid, extended_low };

// phi_rec = regular part + harmonic correction on solute nodes, extended to
// the solvent-side nodes the per-atom interpolation stencils touch.
// Extended values never feed back into any solve.
struct ReactionField {
  const CartesianGrid* grid = nullptr;
  std::vector<double> value;
  std::vector<ExtendProvenance> provenance;
  std::size_t count_top = 0, count_mid = 0, count_low = 0;

  double at(int i, int j, int k) const {
    return value[static_cast<std::size_t>(grid->index(i, j, k))];
  }
};

struct ExtensionStats {
  std::size_t top = 0, mid = 0, low = 0;
};

// Nearest solute-flagged node to `center` (ties lexicographic); geometry
// error when no solute node exists nearby.
std::array<int, 3> anchor_node(const DomainRegistration& reg, const Vec3& center);

// Extends phi_rec to every solvent node referenced by the atoms' 27-point
// stencils, by priority: fictitious value + extended harmonic correction,
// then 3-point extrapolation along an axis, then the parallelogram rule.
ReactionField extend_reaction_field(const DomainRegistration& reg,
                                    const std::vector<double>& phi_tilde,
                                    const Phi0Field& phi0, const FictitiousSet& fict,
                                    const SoluteModel& model);

// Tensor-product 3-point Lagrange interpolation over the 27-node block
// around the anchor.
double interpolate_at_center(const ReactionField& field, const DomainRegistration& reg,
                             const Vec3& center);

struct EnergyReport {
  double delta_G = 0.0; // kcal/mol
  struct AtomEntry {
    int index;
    double charge;
    double phi_rec; // kcal/(mol e)
  };
  std::vector<AtomEntry> atoms;
  double h = 0.0;
  std::array<int, 3> dims{};
  // diagnostics
  SolveDiagnostics phi0_solve;
  SolveDiagnostics phi_tilde_solve;
  ExtensionStats extension;
  MibStats mib;
  std::size_t subgrid_warnings = 0;
  std::size_t phi0_stencil_fallbacks = 0;

  std::string to_json() const;
  std::string csv_row() const;
  static std::string csv_header();
};

EnergyReport reaction_field_energy(const SoluteModel& model, const ReactionField& field,
                                   const DomainRegistration& reg);

} // namespace pbsolv
