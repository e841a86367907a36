#include "pbsolv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pbsolv/errors.hpp"

namespace pbsolv {

void DomainRegistration::finalize() {
  const std::int64_t n = grid.node_count();
  if (flags.size() != static_cast<std::size_t>(n))
    fail(ErrorKind::registration, "registration: flag count does not match grid");

  edge_slot.assign(static_cast<std::size_t>(3 * n), -1);
  for (std::size_t s = 0; s < intersections.size(); ++s) {
    const auto& x = intersections[s];
    if (!grid.in_grid(x.node[0], x.node[1], x.node[2]))
      fail(ErrorKind::registration, "registration: intersection node outside grid");
    if (x.axis < 0 || x.axis > 2)
      fail(ErrorKind::registration, "registration: bad intersection axis");
    const std::int64_t key = edge_key(grid.index(x.node[0], x.node[1], x.node[2]), x.axis);
    if (edge_slot[static_cast<std::size_t>(key)] != -1)
      fail(ErrorKind::registration, "registration: duplicate intersection on one edge");
    edge_slot[static_cast<std::size_t>(key)] = static_cast<std::int32_t>(s);
  }

  // Flag/crossing consistency: endpoints differ in flag <=> edge stores
  // exactly one crossing. Raised, never silently patched.
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        const std::int64_t idx = grid.index(i, j, k);
        for (int ax = 0; ax < 3; ++ax) {
          int ni = i + (ax == 0), nj = j + (ax == 1), nk = k + (ax == 2);
          if (!grid.in_grid(ni, nj, nk)) {
            if (edge_slot[static_cast<std::size_t>(edge_key(idx, ax))] != -1)
              fail(ErrorKind::registration, "registration: intersection on nonexistent edge");
            continue;
          }
          const bool differ =
              flags[static_cast<std::size_t>(idx)] !=
              flags[static_cast<std::size_t>(grid.index(ni, nj, nk))];
          const bool stored = edge_slot[static_cast<std::size_t>(edge_key(idx, ax))] != -1;
          if (differ != stored) {
            std::ostringstream msg;
            msg << "registration: flag/crossing mismatch on edge (" << i << "," << j << ","
                << k << ") axis " << ax << (differ ? ": crossing missing" : ": spurious crossing");
            fail(ErrorKind::registration, msg.str());
          }
        }
      }

  irregular.assign(static_cast<std::size_t>(n), 0);
  for (const auto& x : intersections) {
    const auto [i, j, k] = x.node;
    irregular[static_cast<std::size_t>(grid.index(i, j, k))] = 1;
    const int ni = i + (x.axis == 0), nj = j + (x.axis == 1), nk = k + (x.axis == 2);
    irregular[static_cast<std::size_t>(grid.index(ni, nj, nk))] = 1;
  }
}

CartesianGrid build_grid(const SoluteModel& model, double spacing, double padding) {
  if (!(spacing > 0.0)) fail(ErrorKind::config, "build_grid: spacing must be positive");
  if (model.atoms.empty()) fail(ErrorKind::model, "build_grid: empty model");
  const double max_r = model.max_radius();
  if (!(padding >= max_r + 2.0 * spacing - 1e-12 * (max_r + spacing + 1.0))) {
    std::ostringstream msg;
    msg << "build_grid: padding " << padding << " must be >= max radius + 2h = "
        << max_r + 2.0 * spacing;
    fail(ErrorKind::config, msg.str());
  }

  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi = -lo;
  for (const auto& a : model.atoms) {
    for (int ax = 0; ax < 3; ++ax) {
      lo[ax] = std::min(lo[ax], a.center[ax] - a.radius);
      hi[ax] = std::max(hi[ax], a.center[ax] + a.radius);
    }
  }

  CartesianGrid g;
  g.spacing = {spacing, spacing, spacing};
  for (int ax = 0; ax < 3; ++ax) {
    g.origin[ax] = lo[ax] - padding;
    const double span = hi[ax] + padding - g.origin[ax];
    int n = static_cast<int>(std::ceil(span / spacing - 1e-12)) + 1;
    g.dims[ax] = std::max(n, 4);
  }

  // Keep atom centers off grid nodes so the Coulomb part stays finite there.
  for (int attempt = 0; attempt < 4; ++attempt) {
    bool clash = false;
    for (const auto& a : model.atoms) {
      Vec3 nearest;
      for (int ax = 0; ax < 3; ++ax) {
        const double rel = (a.center[ax] - g.origin[ax]) / spacing;
        nearest[ax] = g.origin[ax] + std::round(rel) * spacing;
      }
      if (norm(a.center - nearest) < 1e-9) {
        clash = true;
        break;
      }
    }
    if (!clash) break;
    for (int ax = 0; ax < 3; ++ax) g.origin[ax] -= spacing * 1e-6 * (attempt + 1);
  }
  return g;
}

namespace {

void check_interface_enclosed(const CartesianGrid& grid, const InterfaceQuery& surface) {
  Vec3 lo, hi;
  surface.bounds(lo, hi);
  for (int ax = 0; ax < 3; ++ax) {
    const double gmin = grid.origin[ax];
    const double gmax = grid.origin[ax] + (grid.dims[ax] - 1) * grid.spacing[ax];
    if (!(gmin < lo[ax] && hi[ax] < gmax))
      fail(ErrorKind::registration, "register_domain: interface not strictly inside grid box");
  }
}

} // namespace

DomainRegistration register_domain(const CartesianGrid& grid, const InterfaceQuery& surface,
                                   const SoluteModel* model) {
  for (int ax = 0; ax < 3; ++ax) {
    if (!(grid.spacing[ax] > 0.0)) fail(ErrorKind::config, "register_domain: bad spacing");
    if (grid.dims[ax] < 4) fail(ErrorKind::config, "register_domain: dims must be >= 4");
  }
  check_interface_enclosed(grid, surface);

  DomainRegistration reg;
  reg.grid = grid;
  const std::int64_t n = grid.node_count();
  reg.flags.resize(static_cast<std::size_t>(n));
  bool any_solute = false;
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        const Domain d = surface.classify(grid.position(i, j, k));
        reg.flags[static_cast<std::size_t>(grid.index(i, j, k))] = d;
        if (d == Domain::solute) {
          any_solute = true;
          if (grid.is_boundary(i, j, k))
            fail(ErrorKind::registration,
                 "register_domain: solute flag on grid boundary (interface not enclosed)");
        }
      }
  if (!any_solute)
    fail(ErrorKind::registration, "register_domain: interface not enclosed (no solute nodes)");

  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i)
        for (int ax = 0; ax < 3; ++ax) {
          const int ni = i + (ax == 0), nj = j + (ax == 1), nk = k + (ax == 2);
          if (!grid.in_grid(ni, nj, nk)) continue;
          const Domain da = reg.flag(i, j, k);
          const Domain db = reg.flag(ni, nj, nk);
          if (da == db) continue;
          const Vec3 a = grid.position(i, j, k);
          const Vec3 b = grid.position(ni, nj, nk);
          const auto c = surface.cross(a, b, da, db);
          if (!c) {
            std::ostringstream msg;
            msg << "register_domain: flags differ but no crossing found on edge (" << i << ","
                << j << "," << k << ") axis " << ax;
            fail(ErrorKind::registration, msg.str());
          }
          RegisteredIntersection x;
          x.node = {i, j, k};
          x.axis = ax;
          const double seg = grid.spacing[ax];
          x.t = std::clamp(dot(c->location - a, b - a) / (seg * seg), 0.0, 1.0);
          x.location = c->location;
          const double nl = norm(c->normal);
          if (std::fabs(nl - 1.0) > 1e-6)
            fail(ErrorKind::format, "register_domain: non-unit interface normal");
          x.normal = c->normal / nl;
          if (c->subgrid_feature) ++reg.subgrid_warnings;
          reg.intersections.push_back(x);
        }

  if (model) {
    for (std::size_t ai = 0; ai < model->atoms.size(); ++ai)
      if (surface.classify(model->atoms[ai].center) != Domain::solute) {
        std::ostringstream msg;
        msg << "register_domain: atom " << ai << " center classifies as solvent";
        fail(ErrorKind::model, msg.str());
      }
  }

  reg.finalize();
  return reg;
}

DomainRegistration register_from_eulerian(const CartesianGrid& grid, const EulerianData& data,
                                          const SoluteModel* model) {
  DomainRegistration reg;
  reg.grid = grid;
  if (data.flags.size() != static_cast<std::size_t>(grid.node_count()))
    fail(ErrorKind::dimension, "register_from_eulerian: node count mismatch");
  reg.flags = data.flags;
  reg.intersections.reserve(data.intersections.size());
  for (const auto& e : data.intersections) {
    RegisteredIntersection x;
    x.node = e.node;
    x.axis = e.axis;
    x.t = e.t;
    Vec3 p = grid.position(e.node[0], e.node[1], e.node[2]);
    p[e.axis] += e.t * grid.spacing[e.axis];
    x.location = p;
    x.normal = e.normal;
    reg.intersections.push_back(x);
  }
  reg.finalize();

  if (model) {
    // With file-based surfaces the atom check uses the nearest node's flag.
    for (std::size_t ai = 0; ai < model->atoms.size(); ++ai) {
      const Vec3& c = model->atoms[ai].center;
      int idx[3];
      for (int ax = 0; ax < 3; ++ax) {
        idx[ax] = static_cast<int>(std::round((c[ax] - grid.origin[ax]) / grid.spacing[ax]));
        idx[ax] = std::clamp(idx[ax], 0, grid.dims[ax] - 1);
      }
      if (reg.flag(idx[0], idx[1], idx[2]) != Domain::solute) {
        std::ostringstream msg;
        msg << "register_from_eulerian: atom " << ai << " sits in the solvent domain";
        fail(ErrorKind::model, msg.str());
      }
    }
  }
  return reg;
}

} // namespace pbsolv
