#include "pbsolv/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "pbsolv/errors.hpp"
#include "pbsolv/fd_weights.hpp"

#include "json.hpp"

namespace pbsolv {

std::array<int, 3> anchor_node(const DomainRegistration& reg, const Vec3& center) {
  const auto& g = reg.grid;
  int start[3];
  for (int ax = 0; ax < 3; ++ax) {
    start[ax] = static_cast<int>(std::round((center[ax] - g.origin[ax]) / g.spacing[ax]));
    start[ax] = std::clamp(start[ax], 0, g.dims[ax] - 1);
  }
  const double hmin = std::min({g.spacing.x, g.spacing.y, g.spacing.z});

  double best_d2 = std::numeric_limits<double>::infinity();
  std::array<int, 3> best{-1, -1, -1};
  const int max_shell = 12;
  for (int shell = 0; shell <= max_shell; ++shell) {
    if (best[0] >= 0 && (shell - 1) * hmin > std::sqrt(best_d2)) break;
    for (int dk = -shell; dk <= shell; ++dk)
      for (int dj = -shell; dj <= shell; ++dj)
        for (int di = -shell; di <= shell; ++di) {
          if (std::max({std::abs(di), std::abs(dj), std::abs(dk)}) != shell) continue;
          const int i = start[0] + di, j = start[1] + dj, k = start[2] + dk;
          if (!g.in_grid(i, j, k)) continue;
          if (reg.flag(i, j, k) != Domain::solute) continue;
          const Vec3 p = g.position(i, j, k);
          const double d2 = norm2(p - center);
          const std::array<int, 3> cand{i, j, k};
          if (d2 < best_d2 - 1e-15 ||
              (std::fabs(d2 - best_d2) <= 1e-15 && cand < best)) {
            best_d2 = d2;
            best = cand;
          }
        }
  }
  if (best[0] < 0)
    fail(ErrorKind::geometry, "anchor_node: no solute node near the atom center");
  return best;
}

namespace {

// Deterministic pick of a crossed edge at solvent node N whose other
// endpoint is solute; returns the intersection slot or -1.
std::int32_t fictitious_slot_at(const DomainRegistration& reg, int i, int j, int k) {
  const auto& g = reg.grid;
  for (int ax = 0; ax < 3; ++ax)
    for (int dir = -1; dir <= 1; dir += 2) {
      const int si = i + (ax == 0) * dir, sj = j + (ax == 1) * dir, sk = k + (ax == 2) * dir;
      if (!g.in_grid(si, sj, sk)) continue;
      if (reg.flag(si, sj, sk) != Domain::solute) continue;
      const std::int32_t slot = dir > 0 ? reg.intersection_on_edge(i, j, k, ax)
                                        : reg.intersection_on_edge(si, sj, sk, ax);
      if (slot >= 0) return slot;
    }
  return -1;
}

// 26-neighbourhood offsets ordered by distance, then lexicographically, so
// the parallelogram rule prefers the nearest (best resolved) neighbours.
std::vector<std::array<int, 3>> neighbour_offsets() {
  std::vector<std::array<int, 3>> out;
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        out.push_back({di, dj, dk});
      }
  std::stable_sort(out.begin(), out.end(),
                   [](const std::array<int, 3>& a, const std::array<int, 3>& b) {
                     const int na = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
                     const int nb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
                     return na < nb;
                   });
  return out;
}

} // namespace

ReactionField extend_reaction_field(const DomainRegistration& reg,
                                    const std::vector<double>& phi_tilde,
                                    const Phi0Field& phi0, const FictitiousSet& fict,
                                    const SoluteModel& model) {
  const auto& g = reg.grid;
  if (phi_tilde.size() != static_cast<std::size_t>(g.node_count()))
    fail(ErrorKind::extension, "extend_reaction_field: field size mismatch");

  ReactionField field;
  field.grid = &g;
  field.value.assign(static_cast<std::size_t>(g.node_count()), 0.0);
  field.provenance.assign(static_cast<std::size_t>(g.node_count()), ExtendProvenance::none);

  for (std::int64_t idx = 0; idx < g.node_count(); ++idx)
    if (reg.flags[static_cast<std::size_t>(idx)] == Domain::solute) {
      field.value[static_cast<std::size_t>(idx)] =
          phi_tilde[static_cast<std::size_t>(idx)] + phi0.values[static_cast<std::size_t>(idx)];
      field.provenance[static_cast<std::size_t>(idx)] = ExtendProvenance::interior;
    }

  // Solvent nodes the atoms' 27-point stencils touch, in index order.
  std::set<std::int64_t> needed;
  for (const auto& atom : model.atoms) {
    const auto a = anchor_node(reg, atom.center);
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int i = a[0] + di, j = a[1] + dj, k = a[2] + dk;
          if (!g.in_grid(i, j, k))
            fail(ErrorKind::geometry,
                 "extend_reaction_field: interpolation stencil leaves the grid");
          if (reg.flag(i, j, k) != Domain::solute) needed.insert(g.index(i, j, k));
        }
  }

  const auto offsets = neighbour_offsets();
  for (const std::int64_t nidx : needed) {
    const auto [i, j, k] = g.unpack(nidx);
    const auto sidx = static_cast<std::size_t>(nidx);

    // Top: fictitious value of the solute extension plus the extended
    // harmonic correction, both taken across the same crossing.
    const std::int32_t slot = fictitious_slot_at(reg, i, j, k);
    if (slot >= 0) {
      const auto& fe = fict.for_row(slot, Domain::solute);
      if (fe.target != nidx)
        fail(ErrorKind::extension, "extend_reaction_field: fictitious target mismatch");
      field.value[sidx] = fe.expr.evaluate(phi_tilde) + phi0.extend_across(slot);
      field.provenance[sidx] = ExtendProvenance::extended_top;
      field.count_top += 1;
      continue;
    }

    // Middle: three consecutive solute nodes along an axis direction; the
    // run may start a few steps out (the adjacent-node case is already
    // covered by the top rule). Smallest extrapolation distance wins, ties
    // by axis then by negative direction first.
    bool done = false;
    for (int s = 1; s <= 3 && !done; ++s)
      for (int ax = 0; ax < 3 && !done; ++ax)
        for (int dir = -1; dir <= 1 && !done; dir += 2) {
          int ni[3], mj[3], mk[3];
          bool ok = true;
          for (int m = 0; m < 3 && ok; ++m) {
            const int d = s + m;
            const int ii = i + (ax == 0) * dir * d, jj = j + (ax == 1) * dir * d,
                      kk = k + (ax == 2) * dir * d;
            if (!g.in_grid(ii, jj, kk) || reg.flag(ii, jj, kk) != Domain::solute) ok = false;
            else { ni[m] = ii; mj[m] = jj; mk[m] = kk; }
          }
          if (!ok) continue;
          const double h = g.spacing[ax];
          const auto w = fd_weights({s * h, (s + 1) * h, (s + 2) * h}, 0.0, 0);
          double v = 0.0;
          for (int m = 0; m < 3; ++m)
            v += w.weights[static_cast<std::size_t>(m)] *
                 field.value[static_cast<std::size_t>(g.index(ni[m], mj[m], mk[m]))];
          field.value[sidx] = v;
          field.provenance[sidx] = ExtendProvenance::extended_mid;
          field.count_mid += 1;
          done = true;
        }
    if (done) continue;

    // Low: parallelogram rule phi(i1) = phi(i2) + phi(i3) - phi(i4) with
    // i4 = i2 + i3 - i1, all three interior. The degenerate collinear form
    // (i2 = i3, i4 = 2 i2 - i1) is still linear-exact and handles corner
    // nodes with a single interior neighbour; a plain copy of the nearest
    // interior neighbour is the last resort.
    for (std::size_t p = 0; p < offsets.size() && !done; ++p)
      for (std::size_t q = p + 1; q < offsets.size() && !done; ++q) {
        const auto& d2 = offsets[p];
        const auto& d3 = offsets[q];
        const int i2[3] = {i + d2[0], j + d2[1], k + d2[2]};
        const int i3[3] = {i + d3[0], j + d3[1], k + d3[2]};
        const int i4[3] = {i + d2[0] + d3[0], j + d2[1] + d3[1], k + d2[2] + d3[2]};
        if (!g.in_grid(i2[0], i2[1], i2[2]) || !g.in_grid(i3[0], i3[1], i3[2]) ||
            !g.in_grid(i4[0], i4[1], i4[2]))
          continue;
        if (reg.flag(i2[0], i2[1], i2[2]) != Domain::solute ||
            reg.flag(i3[0], i3[1], i3[2]) != Domain::solute ||
            reg.flag(i4[0], i4[1], i4[2]) != Domain::solute)
          continue;
        field.value[sidx] = field.at(i2[0], i2[1], i2[2]) + field.at(i3[0], i3[1], i3[2]) -
                            field.at(i4[0], i4[1], i4[2]);
        field.provenance[sidx] = ExtendProvenance::extended_low;
        field.count_low += 1;
        done = true;
      }
    for (std::size_t p = 0; p < offsets.size() && !done; ++p) {
      const auto& d2 = offsets[p];
      const int i2[3] = {i + d2[0], j + d2[1], k + d2[2]};
      const int i4[3] = {i + 2 * d2[0], j + 2 * d2[1], k + 2 * d2[2]};
      if (!g.in_grid(i2[0], i2[1], i2[2]) || !g.in_grid(i4[0], i4[1], i4[2])) continue;
      if (reg.flag(i2[0], i2[1], i2[2]) != Domain::solute ||
          reg.flag(i4[0], i4[1], i4[2]) != Domain::solute)
        continue;
      field.value[sidx] = 2.0 * field.at(i2[0], i2[1], i2[2]) - field.at(i4[0], i4[1], i4[2]);
      field.provenance[sidx] = ExtendProvenance::extended_low;
      field.count_low += 1;
      done = true;
    }
    for (std::size_t p = 0; p < offsets.size() && !done; ++p) {
      const auto& d2 = offsets[p];
      const int i2[3] = {i + d2[0], j + d2[1], k + d2[2]};
      if (!g.in_grid(i2[0], i2[1], i2[2])) continue;
      if (reg.flag(i2[0], i2[1], i2[2]) != Domain::solute) continue;
      field.value[sidx] = field.at(i2[0], i2[1], i2[2]);
      field.provenance[sidx] = ExtendProvenance::extended_low;
      field.count_low += 1;
      done = true;
    }
    if (!done) {
      std::ostringstream msg;
      msg << "extend_reaction_field: no extension rule applies at node (" << i << "," << j
          << "," << k << ")";
      fail(ErrorKind::extension, msg.str());
    }
  }
  return field;
}

double interpolate_at_center(const ReactionField& field, const DomainRegistration& reg,
                             const Vec3& center) {
  const auto& g = reg.grid;
  const auto a = anchor_node(reg, center);
  std::array<FDWeights, 3> w;
  for (int ax = 0; ax < 3; ++ax) {
    const double c0 = g.origin[ax] + a[ax] * g.spacing[ax];
    w[static_cast<std::size_t>(ax)] =
        fd_weights({c0 - g.spacing[ax], c0, c0 + g.spacing[ax]}, center[ax], 0);
  }
  double v = 0.0;
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int i = a[0] + di, j = a[1] + dj, k = a[2] + dk;
        if (!g.in_grid(i, j, k))
          fail(ErrorKind::geometry, "interpolate_at_center: stencil leaves the grid");
        const auto sidx = static_cast<std::size_t>(g.index(i, j, k));
        if (field.provenance[sidx] == ExtendProvenance::none)
          fail(ErrorKind::interpolation, "interpolate_at_center: stencil node has no value");
        v += w[0].weights[static_cast<std::size_t>(di + 1)] *
             w[1].weights[static_cast<std::size_t>(dj + 1)] *
             w[2].weights[static_cast<std::size_t>(dk + 1)] * field.value[sidx];
      }
  return v;
}

EnergyReport reaction_field_energy(const SoluteModel& model, const ReactionField& field,
                                   const DomainRegistration& reg) {
  EnergyReport rep;
  rep.h = reg.grid.spacing.x;
  rep.dims = reg.grid.dims;
  double sum = 0.0;
  for (std::size_t ai = 0; ai < model.atoms.size(); ++ai) {
    const auto& atom = model.atoms[ai];
    const double phi = interpolate_at_center(field, reg, atom.center);
    rep.atoms.push_back({static_cast<int>(ai), atom.charge, phi});
    sum += atom.charge * phi;
  }
  rep.delta_G = 0.5 * sum;
  rep.extension = {field.count_top, field.count_mid, field.count_low};
  return rep;
}

std::string EnergyReport::to_json() const {
  nlohmann::ordered_json j;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return nlohmann::ordered_json::parse(buf);
  };
  j["delta_G_kcal_mol"] = num(delta_G);
  j["h"] = num(h);
  j["dims"] = {dims[0], dims[1], dims[2]};
  j["atoms"] = nlohmann::ordered_json::array();
  for (const auto& a : atoms)
    j["atoms"].push_back({{"index", a.index}, {"q", num(a.charge)}, {"phi_rec", num(a.phi_rec)}});
  j["solver"] = {
      {"phi0_iterations", phi0_solve.iterations},
      {"phi0_residual", num(phi0_solve.final_relative_residual)},
      {"phi_tilde_iterations", phi_tilde_solve.iterations},
      {"phi_tilde_residual", num(phi_tilde_solve.final_relative_residual)},
  };
  j["extension"] = {{"top", extension.top}, {"mid", extension.mid}, {"low", extension.low}};
  j["mib"] = {{"smooth", mib.smooth_edges},
              {"sharp", mib.sharp_edges},
              {"degraded", mib.degraded_edges},
              {"dropped_tangential", mib.dropped_tangential},
              {"two_point_tangential", mib.two_point_tangential}};
  j["warnings"] = {{"subgrid_features", subgrid_warnings},
                   {"phi0_stencil_fallbacks", phi0_stencil_fallbacks}};
  return j.dump(2);
}

std::string EnergyReport::csv_header() {
  return "h,delta_G_kcal_mol,phi0_iterations,phi_tilde_iterations,ext_top,ext_mid,ext_low";
}

std::string EnergyReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.10g,%.10g,%lld,%lld,%zu,%zu,%zu", h, delta_G,
                static_cast<long long>(phi0_solve.iterations),
                static_cast<long long>(phi_tilde_solve.iterations), extension.top,
                extension.mid, extension.low);
  return buf;
}

} // namespace pbsolv
