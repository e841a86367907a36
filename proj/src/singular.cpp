#include "pbsolv/singular.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pbsolv/errors.hpp"
#include "pbsolv/fd_weights.hpp"
#include "pbsolv/sparse.hpp"

namespace pbsolv {

double phi_star(const SoluteModel& model, const DielectricModel& eps, const UnitSystem& units,
                const Vec3& point) {
  double phi = 0.0;
  for (const auto& a : model.atoms) {
    if (a.charge == 0.0) continue;
    const double r = norm(point - a.center);
    if (r < 1e-12) fail(ErrorKind::singularity, "phi_star: evaluation at an atom center");
    phi += a.charge / r;
  }
  return units.coulomb_constant * phi / eps.eps_solute;
}

Vec3 phi_star_gradient(const SoluteModel& model, const DielectricModel& eps,
                       const UnitSystem& units, const Vec3& point) {
  Vec3 g{0, 0, 0};
  for (const auto& a : model.atoms) {
    if (a.charge == 0.0) continue;
    const Vec3 d = point - a.center;
    const double r = norm(d);
    if (r < 1e-12) fail(ErrorKind::singularity, "phi_star_gradient: evaluation at an atom center");
    g -= d * (a.charge / (r * r * r));
  }
  return g * (units.coulomb_constant / eps.eps_solute);
}

namespace {

// Intersections within this fraction of the spacing of a node make the node
// effectively on Gamma; its value is imposed strongly.
constexpr double kNodeOnGammaTol = 1e-6;
// Minimum separation (in units of h) between 1-D sample points; closer pairs
// would amplify noise in interpolation/differentiation weights.
constexpr double kMinSeparation = 0.05;

struct EdgeNeighborInfo {
  bool is_solute_node = false; // neighbor node carries the unknown
  bool is_dirichlet = false;   // crossed edge: known interface value
  double offset = 0.0;         // coordinate relative to the center node
  std::int64_t node_idx = -1;
  std::int32_t slot = -1;
};

// Looks one step from (i,j,k) along signed direction dir of `axis`.
EdgeNeighborInfo probe_neighbor(const DomainRegistration& reg, int i, int j, int k, int axis,
                                int dir) {
  const auto& g = reg.grid;
  EdgeNeighborInfo info;
  const int ni = i + (axis == 0) * dir, nj = j + (axis == 1) * dir, nk = k + (axis == 2) * dir;
  if (!g.in_grid(ni, nj, nk)) return info; // stays "unavailable"
  const double h = g.spacing[axis];
  if (reg.flag(ni, nj, nk) == Domain::solute) {
    info.is_solute_node = true;
    info.offset = dir * h;
    info.node_idx = g.index(ni, nj, nk);
    return info;
  }
  // crossed edge: pick up the interface point
  std::int32_t slot;
  double t_from_center;
  if (dir > 0) {
    slot = reg.intersection_on_edge(i, j, k, axis);
    t_from_center = slot >= 0 ? reg.intersections[static_cast<std::size_t>(slot)].t : 0.0;
  } else {
    slot = reg.intersection_on_edge(ni, nj, nk, axis);
    t_from_center =
        slot >= 0 ? (1.0 - reg.intersections[static_cast<std::size_t>(slot)].t) : 0.0;
  }
  if (slot < 0) fail(ErrorKind::registration, "phi0: crossed edge without intersection");
  info.is_dirichlet = true;
  info.slot = slot;
  info.offset = dir * t_from_center * h;
  return info;
}

struct Sample {
  double coord; // in the dir-oriented frame of the base node
  double value;
  bool exact = false; // interface Dirichlet data rather than a solved value
};

// Solute-node values plus interface Dirichlet values available on the mesh
// line through `base` along `axis`, coordinates oriented so that +1 is one
// step towards `dir`. Offsets scanned: nodes -2..+2, crossings between them.
// The contiguous same-domain run of solute nodes through `base`, terminated
// on each side by its interface point (an exact Dirichlet sample). Empty when
// the base node is not solute. Coordinates are oriented so +1 is one step
// towards `dir`.
std::vector<Sample> collect_line_samples(const DomainRegistration& reg,
                                         const std::vector<double>& values,
                                         const std::vector<double>& dirichlet, int bi, int bj,
                                         int bk, int axis, int dir) {
  const auto& g = reg.grid;
  const double h = g.spacing[axis];
  std::vector<Sample> out;
  if (!g.in_grid(bi, bj, bk) || reg.flag(bi, bj, bk) != Domain::solute) return out;

  auto node_at = [&](int m, int& i, int& j, int& k) {
    i = bi + (axis == 0) * dir * m;
    j = bj + (axis == 1) * dir * m;
    k = bk + (axis == 2) * dir * m;
    return g.in_grid(i, j, k);
  };
  auto crossing_sample = [&](int m_lo, int m_hi) -> Sample {
    // crossing on the edge between dir-offsets m_lo < m_hi
    int i0, j0, k0, i1, j1, k1;
    node_at(m_lo, i0, j0, k0);
    node_at(m_hi, i1, j1, k1);
    std::int32_t slot;
    double xi;
    if (dir > 0) {
      slot = reg.intersection_on_edge(i0, j0, k0, axis);
      xi = (m_lo + (slot >= 0 ? reg.intersections[static_cast<std::size_t>(slot)].t : 0.0)) * h;
    } else {
      slot = reg.intersection_on_edge(i1, j1, k1, axis);
      xi = (m_hi - (slot >= 0 ? reg.intersections[static_cast<std::size_t>(slot)].t : 0.0)) * h;
    }
    if (slot < 0) fail(ErrorKind::registration, "line samples: crossed edge without intersection");
    return {xi, dirichlet[static_cast<std::size_t>(slot)], true};
  };

  out.push_back({0.0, values[static_cast<std::size_t>(g.index(bi, bj, bk))], false});
  for (int sgn = -1; sgn <= 1; sgn += 2) {
    for (int m = sgn; std::abs(m) <= 2; m += sgn) {
      int i, j, k;
      if (!node_at(m, i, j, k)) break;
      if (reg.flag(i, j, k) == Domain::solute) {
        out.push_back({m * h, values[static_cast<std::size_t>(g.index(i, j, k))], false});
      } else {
        out.push_back(sgn > 0 ? crossing_sample(m - 1, m) : crossing_sample(m, m + 1));
        break;
      }
    }
  }
  return out;
}

// Nearest <=max_pts samples to `at`, greedily enforcing pairwise separation.
// Exact interface values may sit arbitrarily close to each other (thin
// features): separating them loses no accuracy, only solved node values
// suffer noise amplification near an exact point.
std::vector<Sample> pick_samples(std::vector<Sample> samples, double at, double h,
                                 std::size_t max_pts = 3) {
  std::sort(samples.begin(), samples.end(), [&](const Sample& a, const Sample& b) {
    const double da = std::fabs(a.coord - at), db = std::fabs(b.coord - at);
    if (da != db) return da < db;
    return a.coord < b.coord;
  });
  std::vector<Sample> picked;
  for (const auto& s : samples) {
    bool ok = true;
    for (const auto& p : picked) {
      const double sep = (p.exact && s.exact) ? 1e-9 * h : kMinSeparation * h;
      if (std::fabs(p.coord - s.coord) < sep) ok = false;
    }
    if (ok) picked.push_back(s);
    if (picked.size() == max_pts) break;
  }
  return picked;
}

double combine(const std::vector<Sample>& pts, double at, int order) {
  std::vector<double> coords(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) coords[q] = pts[q].coord;
  const auto w = fd_weights(coords, at, order);
  double out = 0.0;
  for (std::size_t q = 0; q < pts.size(); ++q) out += w.weights[q] * pts[q].value;
  return out;
}

} // namespace

Phi0Field solve_phi0_with_dirichlet(const DomainRegistration& reg,
                                    std::vector<double> dirichlet_per_intersection,
                                    const SolverConfig& config) {
  const auto& g = reg.grid;
  if (dirichlet_per_intersection.size() != reg.intersections.size())
    fail(ErrorKind::domain, "phi0: dirichlet data does not cover all intersections");

  // Compact numbering of solute nodes.
  std::vector<std::int64_t> compact(static_cast<std::size_t>(g.node_count()), -1);
  std::vector<std::int64_t> solute_nodes;
  for (std::int64_t idx = 0; idx < g.node_count(); ++idx)
    if (reg.flags[static_cast<std::size_t>(idx)] == Domain::solute) {
      compact[static_cast<std::size_t>(idx)] = static_cast<std::int64_t>(solute_nodes.size());
      solute_nodes.push_back(idx);
    }
  if (solute_nodes.empty()) fail(ErrorKind::domain, "phi0: empty solute region");

  SparseSystem sys;
  sys.resize(static_cast<std::int64_t>(solute_nodes.size()));

  Phi0Field field;
  field.reg = &reg;
  field.dirichlet = std::move(dirichlet_per_intersection);

  for (std::size_t row = 0; row < solute_nodes.size(); ++row) {
    const auto [i, j, k] = g.unpack(solute_nodes[row]);

    // Node effectively on Gamma: impose the interface value directly.
    bool imposed = false;
    for (int ax = 0; ax < 3 && !imposed; ++ax) {
      for (int dir = -1; dir <= 1 && !imposed; dir += 2) {
        const auto nb = probe_neighbor(reg, i, j, k, ax, dir);
        if (nb.is_dirichlet && std::fabs(nb.offset) < kNodeOnGammaTol * g.spacing[ax]) {
          sys.add(static_cast<std::int64_t>(row), static_cast<std::int64_t>(row), 1.0);
          sys.rhs[row] = field.dirichlet[static_cast<std::size_t>(nb.slot)];
          imposed = true;
        }
      }
    }
    if (imposed) continue;

    for (int ax = 0; ax < 3; ++ax) {
      const auto minus = probe_neighbor(reg, i, j, k, ax, -1);
      const auto plus = probe_neighbor(reg, i, j, k, ax, +1);
      if ((!minus.is_solute_node && !minus.is_dirichlet) ||
          (!plus.is_solute_node && !plus.is_dirichlet))
        fail(ErrorKind::domain, "phi0: solute node touches the grid boundary");

      // Rows with an interface point are widened by one more interior node
      // when available; the plain nonuniform 3-point stencil is only
      // first-order consistent there.
      struct Pt {
        double coord;
        std::int64_t col;  // compact unknown, or -1
        double known = 0.0;
      };
      std::vector<Pt> pts;
      auto push_side = [&](const EdgeNeighborInfo& nb, int dir) {
        if (nb.is_solute_node) {
          pts.push_back({nb.offset, compact[static_cast<std::size_t>(nb.node_idx)], 0.0});
          const auto far = probe_neighbor(reg, i + (ax == 0) * dir, j + (ax == 1) * dir,
                                          k + (ax == 2) * dir, ax, dir);
          const bool other_crossed = dir > 0 ? plus.is_dirichlet || minus.is_dirichlet
                                             : minus.is_dirichlet || plus.is_dirichlet;
          if (other_crossed && far.is_solute_node)
            pts.push_back({nb.offset + far.offset,
                           compact[static_cast<std::size_t>(far.node_idx)], 0.0});
        } else {
          pts.push_back({nb.offset, -1, field.dirichlet[static_cast<std::size_t>(nb.slot)]});
        }
      };
      push_side(minus, -1);
      pts.push_back({0.0, static_cast<std::int64_t>(row), 0.0});
      push_side(plus, +1);

      std::vector<double> coords(pts.size());
      for (std::size_t q = 0; q < pts.size(); ++q) coords[q] = pts[q].coord;
      const auto w = fd_weights(coords, 0.0, 2);
      for (std::size_t q = 0; q < pts.size(); ++q) {
        if (pts[q].col >= 0)
          sys.add(static_cast<std::int64_t>(row), pts[q].col, w.weights[q]);
        else
          sys.rhs[row] -= w.weights[q] * pts[q].known;
      }
    }
  }

  // Row equilibration: crossings close to a node give that row coefficients
  // of order 1/t, which would dominate the residual norm and let errors in
  // ordinary rows pass the tolerance unchecked.
  equilibrate_rows(sys);

  SolveResult sol;
  try {
    sol = solve(sys, config);
  } catch (const SolverFailure& f) {
    fail(ErrorKind::solver, std::string("phi0 solve failed: ") + f.what());
  }

  field.values.assign(static_cast<std::size_t>(g.node_count()), 0.0);
  for (std::size_t row = 0; row < solute_nodes.size(); ++row)
    field.values[static_cast<std::size_t>(solute_nodes[row])] = sol.x[row];
  field.diagnostics = sol.diagnostics;
  return field;
}

Phi0Field solve_phi0(const DomainRegistration& reg, const SoluteModel& model,
                     const DielectricModel& eps, const UnitSystem& units,
                     const SolverConfig& config) {
  std::vector<double> dirichlet(reg.intersections.size());
  for (std::size_t s = 0; s < reg.intersections.size(); ++s)
    dirichlet[s] = -phi_star(model, eps, units, reg.intersections[s].location);
  return solve_phi0_with_dirichlet(reg, std::move(dirichlet), config);
}

namespace {

// Solute endpoint of the edge carrying intersection `slot` and the signed
// direction towards the solvent endpoint.
struct EdgeSide {
  int si, sj, sk;
  int dir;
  int axis;
  double gamma_off; // interface coordinate in the dir-oriented frame (>0)
};

EdgeSide solute_side(const DomainRegistration& reg, std::int32_t slot) {
  const auto& x = reg.intersections[static_cast<std::size_t>(slot)];
  EdgeSide f;
  f.axis = x.axis;
  const auto [i, j, k] = x.node;
  const int ni = i + (x.axis == 0), nj = j + (x.axis == 1), nk = k + (x.axis == 2);
  if (reg.flag(i, j, k) == Domain::solute) {
    f.si = i; f.sj = j; f.sk = k;
    f.dir = +1;
    f.gamma_off = x.t * reg.grid.spacing[x.axis];
  } else {
    f.si = ni; f.sj = nj; f.sk = nk;
    f.dir = -1;
    f.gamma_off = (1.0 - x.t) * reg.grid.spacing[x.axis];
  }
  return f;
}

} // namespace

double Phi0Field::extend_across(std::int32_t slot) const {
  const auto& g = reg->grid;
  const auto f = solute_side(*reg, slot);
  const double h = g.spacing[f.axis];
  auto samples = collect_line_samples(*reg, values, dirichlet, f.si, f.sj, f.sk, f.axis, f.dir);
  // restrict to the solute side of this crossing (plus the crossing itself)
  std::vector<Sample> usable;
  for (const auto& s : samples)
    if (s.coord <= f.gamma_off + 1e-12 * h) usable.push_back(s);
  const auto picked = pick_samples(std::move(usable), f.gamma_off, h);
  if (picked.empty()) fail(ErrorKind::stencil, "phi0 extension: no usable samples");
  return combine(picked, h, 0); // value at the solvent endpoint (coord +h)
}

Vec3 Phi0Field::gradient_at(std::int32_t slot) const {
  const auto& g = reg->grid;
  const auto f = solute_side(*reg, slot);
  const double h_ax = g.spacing[f.axis];

  Vec3 grad{0, 0, 0};

  // Along the edge axis: one-sided stencil of interior values plus the
  // interface value, differentiated at the interface point.
  {
    auto samples =
        collect_line_samples(*reg, values, dirichlet, f.si, f.sj, f.sk, f.axis, f.dir);
    std::vector<Sample> usable;
    for (const auto& s : samples)
      if (s.coord <= f.gamma_off + 1e-12 * h_ax) usable.push_back(s);
    auto picked = pick_samples(std::move(usable), f.gamma_off, h_ax);
    if (picked.size() < 2) {
      // thin-feature fallback: node value and interface value, whatever
      // their separation
      stencil_fallbacks += 1;
      picked.clear();
      if (std::fabs(f.gamma_off) > 1e-9 * h_ax) {
        picked.push_back({0.0, value(f.si, f.sj, f.sk), false});
        picked.push_back({f.gamma_off, dirichlet[static_cast<std::size_t>(slot)], true});
      }
    }
    // sample coordinates are oriented towards the solvent; flip back to the
    // global axis direction
    grad[f.axis] = picked.size() < 2 ? 0.0 : f.dir * combine(picked, f.gamma_off, 1);
  }

  // Cross axes: interpolate along the edge axis at the interface coordinate
  // on neighbouring rows, then difference across rows.
  for (int a = 0; a < 3; ++a) {
    if (a == f.axis) continue;
    const double h_a = g.spacing[a];
    static const int windows[3][3] = {{-1, 0, 1}, {0, 1, 2}, {-2, -1, 0}};
    bool done = false;
    for (const auto& win : windows) {
      std::vector<Sample> rows;
      bool ok = true;
      for (int wi = 0; wi < 3 && ok; ++wi) {
        const int l = win[wi];
        const int ri = f.si + (a == 0) * l, rj = f.sj + (a == 1) * l, rk = f.sk + (a == 2) * l;
        if (!g.in_grid(ri, rj, rk)) { ok = false; break; }
        auto samples = collect_line_samples(*reg, values, dirichlet, ri, rj, rk, f.axis, f.dir);
        const auto picked = pick_samples(std::move(samples), f.gamma_off, h_ax);
        if (picked.size() < 2) { ok = false; break; }
        rows.push_back({l * h_a, combine(picked, f.gamma_off, 0)});
      }
      if (!ok) continue;
      grad[a] = combine(rows, 0.0, 1);
      done = true;
      break;
    }
    if (!done) {
      // two-point nodal fallback
      stencil_fallbacks += 1;
      double d = 0.0;
      for (int dir = -1; dir <= 1; dir += 2) {
        const int ni = f.si + (a == 0) * dir, nj = f.sj + (a == 1) * dir,
                  nk = f.sk + (a == 2) * dir;
        if (g.in_grid(ni, nj, nk) && reg->flag(ni, nj, nk) == Domain::solute) {
          d = (values[static_cast<std::size_t>(g.index(ni, nj, nk))] -
               value(f.si, f.sj, f.sk)) /
              (dir * h_a);
          break;
        }
      }
      grad[a] = d;
    }
  }
  return grad;
}

double jump_rhs(const Phi0Field& phi0, const SoluteModel& model, const DielectricModel& eps,
                const UnitSystem& units, std::int32_t slot) {
  const auto& x = phi0.reg->intersections[static_cast<std::size_t>(slot)];
  const Vec3 gstar = phi_star_gradient(model, eps, units, x.location);
  const Vec3 g0 = phi0.gradient_at(slot);
  return eps.eps_solute * dot(gstar + g0, x.normal);
}

std::vector<double> jump_rhs_all(const Phi0Field& phi0, const SoluteModel& model,
                                 const DielectricModel& eps, const UnitSystem& units) {
  std::vector<double> out(phi0.reg->intersections.size());
  for (std::size_t s = 0; s < out.size(); ++s)
    out[s] = jump_rhs(phi0, model, eps, units, static_cast<std::int32_t>(s));
  return out;
}

std::vector<double> boundary_values(const DomainRegistration& reg, const SoluteModel& model,
                                    const DielectricModel& eps, const UnitSystem& units) {
  const auto& g = reg.grid;
  std::vector<double> bc(static_cast<std::size_t>(g.node_count()), 0.0);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        if (!g.is_boundary(i, j, k)) continue;
        const Vec3 p = g.position(i, j, k);
        double v = 0.0;
        for (const auto& a : model.atoms) {
          if (a.charge == 0.0) continue;
          const double r = norm(p - a.center);
          v += a.charge * std::exp(-eps.kappa_bar * r) / r;
        }
        bc[static_cast<std::size_t>(g.index(i, j, k))] =
            units.coulomb_constant * v / eps.eps_solvent;
      }
  return bc;
}

} // namespace pbsolv
