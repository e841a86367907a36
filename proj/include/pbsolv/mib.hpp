#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "pbsolv/grid.hpp"
#include "pbsolv/model.hpp"
#include "pbsolv/sparse.hpp"

namespace pbsolv {

// Linear functional of the real grid unknowns plus a constant.
struct LinFunc {
  std::vector<std::pair<std::int64_t, double>> terms;
  double constant = 0.0;

  void add_term(std::int64_t idx, double c) { terms.emplace_back(idx, c); }
  void axpy(double s, const LinFunc& f);
  void scale(double s);
  void compress(); // sort by index, merge duplicates, drop zeros
  double evaluate(const std::vector<double>& u) const;
};

// One fictitious value: the smooth extension of `side` onto `target`,
// expressed through real unknowns in the correct domains plus known jump
// data. Produced at the crossing on edge (edge_node, edge_axis).
struct FictitiousEquation {
  std::int64_t target = -1;
  Domain side = Domain::solute;
  LinFunc expr;
  std::array<int, 3> edge_node{};
  int edge_axis = 0;
  enum class Scheme : std::uint8_t { smooth, sharp, degraded } scheme = Scheme::smooth;
};

struct MibStats {
  std::size_t smooth_edges = 0;
  std::size_t sharp_edges = 0;
  std::size_t degraded_edges = 0;
  std::size_t dropped_tangential = 0;
  std::size_t two_point_tangential = 0;
};

struct MibOptions {
  // Dump the local system built at the crossing on this edge (i, j, k, axis).
  std::optional<std::array<int, 4>> dump_edge;
  std::ostream* dump_stream = nullptr;
};

// Fictitious equations for every registered crossing; equations are looked
// up per edge and per impersonated endpoint.
struct FictitiousSet {
  std::vector<FictitiousEquation> equations;
  // Per intersection slot: index of the equation whose target is the solvent
  // endpoint (impersonating the solute side, used by the solute-side row)
  // and of the converse one.
  std::vector<std::int32_t> at_solvent_node;
  std::vector<std::int32_t> at_solute_node;
  MibStats stats;

  const FictitiousEquation& for_row(std::int32_t slot, Domain row_domain) const {
    const auto idx = row_domain == Domain::solute ? at_solvent_node[static_cast<std::size_t>(slot)]
                                                  : at_solute_node[static_cast<std::size_t>(slot)];
    return equations[static_cast<std::size_t>(idx)];
  }
};

FictitiousSet build_fictitious(const DomainRegistration& reg, const DielectricModel& eps,
                               const std::vector<double>& jump_data,
                               const MibOptions& options = {});

// Interface-corrected operator for -div(eps grad u) = 0 with Dirichlet
// boundary rows. Regular nodes carry the 7-point scheme; cross-domain
// neighbours of irregular nodes are replaced by fictitious values.
SparseSystem assemble(const DomainRegistration& reg, const DielectricModel& eps,
                      const std::vector<double>& jump_data,
                      const std::vector<double>& boundary_values,
                      const FictitiousSet* fictitious = nullptr);

} // namespace pbsolv
