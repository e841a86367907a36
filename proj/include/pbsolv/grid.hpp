#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pbsolv/model.hpp"
#include "pbsolv/surface.hpp"
#include "pbsolv/vec3.hpp"

namespace pbsolv {

struct CartesianGrid {
  Vec3 origin;
  Vec3 spacing;              // dx, dy, dz
  std::array<int, 3> dims{}; // node counts, >= 4 each

  std::int64_t node_count() const {
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  }
  std::int64_t index(int i, int j, int k) const {
    return (static_cast<std::int64_t>(k) * dims[1] + j) * dims[0] + i;
  }
  std::array<int, 3> unpack(std::int64_t idx) const {
    const int i = static_cast<int>(idx % dims[0]);
    const int j = static_cast<int>((idx / dims[0]) % dims[1]);
    const int k = static_cast<int>(idx / (static_cast<std::int64_t>(dims[0]) * dims[1]));
    return {i, j, k};
  }
  Vec3 position(int i, int j, int k) const {
    return {origin.x + i * spacing.x, origin.y + j * spacing.y, origin.z + k * spacing.z};
  }
  bool in_grid(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  bool is_boundary(int i, int j, int k) const {
    return i == 0 || j == 0 || k == 0 || i == dims[0] - 1 || j == dims[1] - 1 ||
           k == dims[2] - 1;
  }
};

// Interface crossing registered on a specific grid edge. The edge runs from
// `node` to its +axis neighbor; t is the parameter along it.
struct RegisteredIntersection {
  std::array<int, 3> node;
  int axis;
  double t;
  Vec3 location;
  Vec3 normal;
};

struct DomainRegistration {
  CartesianGrid grid;
  std::vector<Domain> flags;                       // per node
  std::vector<RegisteredIntersection> intersections;
  std::vector<std::int32_t> edge_slot;             // 3*node_count, -1 = none
  std::vector<std::uint8_t> irregular;             // per node
  std::size_t subgrid_warnings = 0;

  Domain flag(int i, int j, int k) const {
    return flags[static_cast<std::size_t>(grid.index(i, j, k))];
  }
  bool is_solute(int i, int j, int k) const { return flag(i, j, k) == Domain::solute; }

  std::int64_t edge_key(std::int64_t node_idx, int axis) const {
    return node_idx * 3 + axis;
  }
  // Intersection on the edge from (i,j,k) towards +axis, or -1.
  std::int32_t intersection_on_edge(int i, int j, int k, int axis) const {
    return edge_slot[static_cast<std::size_t>(edge_key(grid.index(i, j, k), axis))];
  }

  // Rebuilds edge_slot and the irregular set from flags/intersections and
  // validates flag/crossing consistency (registration error on mismatch).
  void finalize();
};

// Box = bounding box of atom spheres expanded by `padding`, snapped so the
// node counts are integers. Requires padding >= max atom radius + 2*spacing.
// If an atom center lands on a grid node the origin is nudged by 1e-6*h so
// the Coulomb field stays finite on all nodes.
CartesianGrid build_grid(const SoluteModel& model, double spacing, double padding);

// Classify nodes, locate edge crossings, detect irregular points. The
// interface must be strictly inside the grid box; when `model` is given,
// every atom center must classify as solute.
DomainRegistration register_domain(const CartesianGrid& grid, const InterfaceQuery& surface,
                                   const SoluteModel* model = nullptr);

// Registration from verbatim Eulerian data (no surface queries involved).
DomainRegistration register_from_eulerian(const CartesianGrid& grid, const EulerianData& data,
                                          const SoluteModel* model = nullptr);

// Text format:
//   EULER nx ny nz h x0 y0 z0
//   i j k flag            (one per node; 1 = solute, 0 = solvent)
//   i j k axis t nx ny nz (one per intersection; axis in {x,y,z})
void export_eulerian(const DomainRegistration& reg, const std::string& path);
std::string eulerian_to_string(const DomainRegistration& reg);

} // namespace pbsolv
