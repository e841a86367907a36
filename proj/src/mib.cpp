#include "pbsolv/mib.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <ostream>
#include <sstream>

#include "pbsolv/errors.hpp"
#include "pbsolv/fd_weights.hpp"

namespace pbsolv {

void LinFunc::axpy(double s, const LinFunc& f) {
  if (s == 0.0) return;
  for (const auto& [idx, c] : f.terms) terms.emplace_back(idx, s * c);
  constant += s * f.constant;
}

void LinFunc::scale(double s) {
  for (auto& [idx, c] : terms) c *= s;
  constant *= s;
}

void LinFunc::compress() {
  std::sort(terms.begin(), terms.end());
  std::size_t w = 0;
  for (std::size_t r = 0; r < terms.size();) {
    std::int64_t idx = terms[r].first;
    double sum = 0.0;
    while (r < terms.size() && terms[r].first == idx) sum += terms[r++].second;
    if (sum != 0.0) terms[w++] = {idx, sum};
  }
  terms.resize(w);
}

double LinFunc::evaluate(const std::vector<double>& u) const {
  double v = constant;
  for (const auto& [idx, c] : terms) v += c * u[static_cast<std::size_t>(idx)];
  return v;
}

namespace {

constexpr int kMaxF = 4;

struct LocalExpr {
  std::array<double, kMaxF> f{};
  LinFunc real;

  void axpy(double s, const LocalExpr& o) {
    if (s == 0.0) return;
    for (int q = 0; q < kMaxF; ++q) f[static_cast<std::size_t>(q)] += s * o.f[static_cast<std::size_t>(q)];
    real.axpy(s, o.real);
  }
};

// Solves the k x k system "sum_j eq.f[j] F_j + eq.real = 0" for the
// fictitious values as linear functionals of real unknowns.
std::array<LinFunc, kMaxF> solve_local(std::vector<LocalExpr> eqs, int k,
                                       const std::string& what) {
  if (static_cast<int>(eqs.size()) != k)
    fail(ErrorKind::conditioning, what + ": local system is not square");

  // Row equilibration keeps the pivot test meaningful across scales. A row
  // whose fictitious coefficients all vanish against its real part cannot
  // constrain the unknowns.
  for (auto& e : eqs) {
    double m = 0.0;
    for (int q = 0; q < k; ++q) m = std::max(m, std::fabs(e.f[static_cast<std::size_t>(q)]));
    double mr = std::fabs(e.real.constant);
    for (const auto& [i, c] : e.real.terms) mr = std::max(mr, std::fabs(c));
    if (m < 1e-12 * std::max(mr, 1.0))
      fail(ErrorKind::conditioning, what + ": interface equation does not touch the fictitious values");
    for (int q = 0; q < k; ++q) e.f[static_cast<std::size_t>(q)] /= m;
    e.real.scale(1.0 / m);
  }

  for (int col = 0; col < k; ++col) {
    int pivot = col;
    for (int r = col + 1; r < k; ++r)
      if (std::fabs(eqs[static_cast<std::size_t>(r)].f[static_cast<std::size_t>(col)]) >
          std::fabs(eqs[static_cast<std::size_t>(pivot)].f[static_cast<std::size_t>(col)]))
        pivot = r;
    std::swap(eqs[static_cast<std::size_t>(col)], eqs[static_cast<std::size_t>(pivot)]);
    const double p = eqs[static_cast<std::size_t>(col)].f[static_cast<std::size_t>(col)];
    if (std::fabs(p) < 1e-10)
      fail(ErrorKind::conditioning, what + ": rank-deficient local interface system");
    for (int r = 0; r < k; ++r) {
      if (r == col) continue;
      const double m = eqs[static_cast<std::size_t>(r)].f[static_cast<std::size_t>(col)] / p;
      if (m == 0.0) continue;
      for (int q = 0; q < k; ++q)
        eqs[static_cast<std::size_t>(r)].f[static_cast<std::size_t>(q)] -=
            m * eqs[static_cast<std::size_t>(col)].f[static_cast<std::size_t>(q)];
      eqs[static_cast<std::size_t>(r)].f[static_cast<std::size_t>(col)] = 0.0;
      eqs[static_cast<std::size_t>(r)].real.axpy(-m, eqs[static_cast<std::size_t>(col)].real);
    }
  }

  std::array<LinFunc, kMaxF> out;
  for (int col = 0; col < k; ++col) {
    LinFunc v = eqs[static_cast<std::size_t>(col)].real;
    v.scale(-1.0 / eqs[static_cast<std::size_t>(col)].f[static_cast<std::size_t>(col)]);
    v.compress();
    out[static_cast<std::size_t>(col)] = std::move(v);
  }
  return out;
}

struct Builder {
  const DomainRegistration& reg;
  const DielectricModel& eps;
  const std::vector<double>& jump;
  const MibOptions& options;
  FictitiousSet& out;

  const CartesianGrid& grid() const { return reg.grid; }

  std::array<int, 3> step(const std::array<int, 3>& n, int axis, int delta) const {
    auto r = n;
    r[static_cast<std::size_t>(axis)] += delta;
    return r;
  }
  bool in_grid(const std::array<int, 3>& n) const { return grid().in_grid(n[0], n[1], n[2]); }
  Domain flag(const std::array<int, 3>& n) const { return reg.flag(n[0], n[1], n[2]); }
  std::int64_t idx(const std::array<int, 3>& n) const { return grid().index(n[0], n[1], n[2]); }

  // ---- 1-D samples along a mesh line (real unknowns only) ----
  struct LineSample {
    double coord; // signed global-axis offset from the reference node
    std::int64_t node;
  };

  // Contiguous same-domain run of nodes on the mesh line through `base`
  // along `axis`. The run is anchored at the in-domain node nearest to the
  // `prefer` coordinate (offsets up to +-2) and expanded while the domain
  // holds; coordinates are relative to `base`.
  std::vector<LineSample> line_run(const std::array<int, 3>& base, int axis, Domain dom,
                                   double prefer) const {
    std::vector<LineSample> run;
    if (!in_grid(base)) return run;
    const double h = grid().spacing[axis];
    int anchor = INT_MAX;
    double anchor_dist = 0.0;
    for (int m = -2; m <= 2; ++m) {
      const auto n = step(base, axis, m);
      if (!in_grid(n) || flag(n) != dom) continue;
      const double d = std::fabs(m * h - prefer);
      if (anchor == INT_MAX || d < anchor_dist - 1e-15 ||
          (std::fabs(d - anchor_dist) <= 1e-15 && m < anchor)) {
        anchor = m;
        anchor_dist = d;
      }
    }
    if (anchor == INT_MAX) return run;
    run.push_back({anchor * h, idx(step(base, axis, anchor))});
    for (int sgn = -1; sgn <= 1; sgn += 2) {
      for (int m = anchor + sgn; std::abs(m) <= 2; m += sgn) {
        const auto n = step(base, axis, m);
        if (!in_grid(n) || flag(n) != dom) break;
        run.push_back({m * h, idx(n)});
      }
    }
    return run;
  }

  // Lagrange combination of the <=3 run samples nearest `at`.
  std::optional<std::pair<LinFunc, int>> run_combine(const std::vector<LineSample>& run,
                                                     double at, int order, double h) const {
    if (static_cast<int>(run.size()) < order + 1 || run.size() < 2) return std::nullopt;
    auto sorted = run;
    std::sort(sorted.begin(), sorted.end(), [&](const LineSample& a, const LineSample& b) {
      const double da = std::fabs(a.coord - at), db = std::fabs(b.coord - at);
      if (da != db) return da < db;
      return a.coord < b.coord;
    });
    if (sorted.size() > 3) sorted.resize(3);
    std::sort(sorted.begin(), sorted.end(),
              [](const LineSample& a, const LineSample& b) { return a.coord < b.coord; });
    std::vector<double> coords(sorted.size());
    for (std::size_t q = 0; q < sorted.size(); ++q) coords[q] = sorted[q].coord;
    const auto w = fd_weights(coords, at, order);
    LinFunc out;
    for (std::size_t q = 0; q < sorted.size(); ++q) out.add_term(sorted[q].node, w.weights[q]);
    (void)h;
    return std::make_pair(out, static_cast<int>(sorted.size()));
  }

  // ---- tangential derivatives ----
  struct TangentialCand {
    Domain side;
    int axis; // cross axis
    int cost = INT_MAX;
    LocalExpr expr;
  };

  // d/d(axis_a) of the `side` limit at the crossing point, discretized from
  // same-domain nodes near the crossing. `base` is the side's edge endpoint,
  // `gamma` the crossing coordinate relative to it along the edge axis.
  TangentialCand tangential_derivative(const std::array<int, 3>& base, int edge_axis,
                                       double gamma, Domain dom, int a,
                                       MibStats& stats) const {
    TangentialCand cand;
    cand.side = dom;
    cand.axis = a;
    const double h_a = grid().spacing[a];
    const double h_d = grid().spacing[edge_axis];

    static const int win3[3][3] = {{-1, 0, 1}, {0, 1, 2}, {-2, -1, 0}};
    static const int win2[2][2] = {{0, 1}, {-1, 0}};

    for (int wi = 0; wi < 3; ++wi) {
      int cost = wi == 0 ? 0 : 1;
      std::vector<double> coords;
      std::vector<LinFunc> vals;
      bool ok = true;
      for (int q = 0; q < 3 && ok; ++q) {
        const int l = win3[wi][q];
        const auto row_base = step(base, a, l);
        const auto run = line_run(row_base, edge_axis, dom, gamma);
        const auto v = run_combine(run, gamma, 0, h_d);
        if (!v) { ok = false; break; }
        cost += 3 - v->second;
        coords.push_back(l * h_a);
        vals.push_back(v->first);
      }
      if (!ok) continue;
      const auto w = fd_weights(coords, 0.0, 1);
      for (std::size_t q = 0; q < coords.size(); ++q)
        cand.expr.real.axpy(w.weights[q], vals[q]);
      cand.cost = cost;
      return cand;
    }
    for (int wi = 0; wi < 2; ++wi) {
      std::vector<double> coords;
      std::vector<LinFunc> vals;
      bool ok = true;
      for (int q = 0; q < 2 && ok; ++q) {
        const int l = win2[wi][q];
        const auto row_base = step(base, a, l);
        const auto run = line_run(row_base, edge_axis, dom, gamma);
        const auto v = run_combine(run, gamma, 0, h_d);
        if (!v) { ok = false; break; }
        coords.push_back(l * h_a);
        vals.push_back(v->first);
      }
      if (!ok) continue;
      const auto w = fd_weights(coords, 0.0, 1);
      for (std::size_t q = 0; q < coords.size(); ++q)
        cand.expr.real.axpy(w.weights[q], vals[q]);
      cand.cost = 6;
      stats.two_point_tangential += 1;
      return cand;
    }
    return cand; // unavailable
  }

  // ---- one crossing: interface equations ----
  struct CrossingEquations {
    LocalExpr zeroth;   // [u] = 0
    LocalExpr combined; // flux + tangential rows with two derivatives eliminated
    bool well_posed = true;
  };

  // val/deriv exprs for each side must be provided by the caller in terms of
  // the local fictitious unknowns; this routine handles the tangential
  // bookkeeping and the elimination. Candidate eliminations are tried in
  // order of stencil cost, but a pair whose null vector decouples the
  // combined equation from the fictitious values is rejected: the local
  // system must stay solvable.
  CrossingEquations interface_equations(std::int32_t slot, const std::array<int, 3>& m_base,
                                        const std::array<int, 3>& s_base, double gamma_m,
                                        double gamma_s, const LocalExpr& val_m,
                                        const LocalExpr& val_s, const LocalExpr& d_m,
                                        const LocalExpr& d_s) {
    const auto& x = reg.intersections[static_cast<std::size_t>(slot)];
    const int d_axis = x.axis;
    const LocalFrame frame = local_frame(x.normal);
    const double psi = jump[static_cast<std::size_t>(slot)];

    CrossingEquations eq;
    eq.zeroth.axpy(1.0, val_s);
    eq.zeroth.axpy(-1.0, val_m);

    std::array<TangentialCand, 4> cands;
    int ci = 0;
    for (const Domain dom : {Domain::solute, Domain::solvent})
      for (int a = 0; a < 3; ++a) {
        if (a == d_axis) continue;
        const auto& base = dom == Domain::solute ? m_base : s_base;
        const double gamma = dom == Domain::solute ? gamma_m : gamma_s;
        cands[static_cast<std::size_t>(ci++)] =
            tangential_derivative(base, d_axis, gamma, dom, a, out.stats);
      }

    auto column = [&](const TangentialCand& c) {
      const double sgn = c.side == Domain::solvent ? 1.0 : -1.0;
      const double ef = c.side == Domain::solvent ? eps.eps_solvent : eps.eps_solute;
      const double na = x.normal[c.axis];
      return Vec3{sgn * ef * na, sgn * frame.tangent1[c.axis], sgn * frame.tangent2[c.axis]};
    };

    const double nd = x.normal[d_axis];
    const double t1d = frame.tangent1[d_axis], t2d = frame.tangent2[d_axis];

    auto max_real = [](const LocalExpr& e) {
      double m2 = 0.0;
      for (const auto& [i, c] : e.real.terms) m2 = std::max(m2, std::fabs(c));
      return m2;
    };

    // Conditioning proxy for a candidate null vector. Two requirements: the
    // zeroth-order row and the combined row must constrain independent
    // directions of the fictitious values, and the combined row's coupling
    // to them must not be negligible against its real-node coefficients
    // (otherwise solving for the fictitious values amplifies everything by
    // the inverse coupling).
    auto pair_score = [&](const Vec3& lambda, const bool* eliminated) {
      const double cs = lambda.x * eps.eps_solvent * nd + lambda.y * t1d + lambda.z * t2d;
      const double cm = -(lambda.x * eps.eps_solute * nd + lambda.y * t1d + lambda.z * t2d);
      std::array<double, kMaxF> fc{};
      for (int q = 0; q < kMaxF; ++q)
        fc[static_cast<std::size_t>(q)] = cs * d_s.f[static_cast<std::size_t>(q)] +
                                          cm * d_m.f[static_cast<std::size_t>(q)];
      double n_fc = 0.0, n_e1 = 0.0, det2 = 0.0;
      for (int a2 = 0; a2 < kMaxF; ++a2) {
        n_fc += fc[static_cast<std::size_t>(a2)] * fc[static_cast<std::size_t>(a2)];
        n_e1 += eq.zeroth.f[static_cast<std::size_t>(a2)] * eq.zeroth.f[static_cast<std::size_t>(a2)];
        for (int b2 = a2 + 1; b2 < kMaxF; ++b2) {
          const double d = eq.zeroth.f[static_cast<std::size_t>(a2)] * fc[static_cast<std::size_t>(b2)] -
                           eq.zeroth.f[static_cast<std::size_t>(b2)] * fc[static_cast<std::size_t>(a2)];
          det2 += d * d;
        }
      }
      if (n_fc == 0.0 || n_e1 == 0.0) return 0.0;
      const double angle = std::sqrt(det2 / (n_fc * n_e1));

      double real_scale = std::fabs(cs) * max_real(d_s) + std::fabs(cm) * max_real(d_m);
      for (int c = 0; c < 4; ++c) {
        if (eliminated[c]) continue;
        const auto& cand = cands[static_cast<std::size_t>(c)];
        if (cand.cost == INT_MAX) continue;
        const Vec3 col = column(cand);
        const double coef = lambda.x * col.x + lambda.y * col.y + lambda.z * col.z;
        real_scale += std::fabs(coef) * max_real(cand.expr);
      }
      const double coupling = std::sqrt(n_fc) / (std::sqrt(n_fc) + real_scale);
      return std::min(angle, coupling);
    };

    // Candidate order: descending stencil cost, ties by axis then side.
    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int l, int r) {
      const auto& a = cands[static_cast<std::size_t>(l)];
      const auto& b = cands[static_cast<std::size_t>(r)];
      if (a.cost != b.cost) return a.cost > b.cost;
      if (a.axis != b.axis) return a.axis < b.axis;
      return a.side < b.side;
    });
    static const int pair_order[6][2] = {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3}};
    Vec3 lambda{0, 0, 0};
    bool elim[4] = {false, false, false, false};
    double best_score = -1.0;
    Vec3 best_lambda{1, 0, 0};
    int best_e0 = -1, best_e1 = -1;
    // Among rank-valid pairs, prefer those that eliminate the unavailable
    // derivatives (they would otherwise be dropped), then the pair whose
    // local system is best conditioned.
    int best_removed = -1;
    for (const auto& pr : pair_order) {
      const int e0 = order[static_cast<std::size_t>(pr[0])];
      const int e1 = order[static_cast<std::size_t>(pr[1])];
      const Vec3 c0 = column(cands[static_cast<std::size_t>(e0)]);
      const Vec3 c1 = column(cands[static_cast<std::size_t>(e1)]);
      const Vec3 lam = cross(c0, c1);
      if (norm(lam) <= 1e-9 * (norm(c0) * norm(c1) + 1e-30)) continue;
      int removed = 0;
      if (cands[static_cast<std::size_t>(e0)].cost == INT_MAX) ++removed;
      if (cands[static_cast<std::size_t>(e1)].cost == INT_MAX) ++removed;
      const Vec3 lam_unit = lam / norm(lam);
      bool trial_elim[4] = {false, false, false, false};
      trial_elim[e0] = trial_elim[e1] = true;
      const double score = pair_score(lam_unit, trial_elim);
      if (score < 1e-6) continue;
      if (removed > best_removed || (removed == best_removed && score > best_score)) {
        best_removed = removed;
        best_score = score;
        best_lambda = lam_unit;
        best_e0 = e0;
        best_e1 = e1;
      }
    }
    if (best_e0 < 0) {
      eq.well_posed = false;
      return eq;
    }
    lambda = best_lambda;
    elim[best_e0] = elim[best_e1] = true;

    const double coef_s = lambda.x * eps.eps_solvent * nd + lambda.y * t1d + lambda.z * t2d;
    const double coef_m = -(lambda.x * eps.eps_solute * nd + lambda.y * t1d + lambda.z * t2d);
    eq.combined.axpy(coef_s, d_s);
    eq.combined.axpy(coef_m, d_m);
    // surviving tangential terms
    for (int c = 0; c < 4; ++c) {
      if (elim[c]) continue;
      const auto& cand = cands[static_cast<std::size_t>(c)];
      const Vec3 col = column(cand);
      const double coef = lambda.x * col.x + lambda.y * col.y + lambda.z * col.z;
      if (cand.cost == INT_MAX) {
        if (std::fabs(coef) > 1e-12) out.stats.dropped_tangential += 1;
        continue;
      }
      eq.combined.axpy(coef, cand.expr);
    }
    eq.combined.real.constant -= lambda.x * psi;
    return eq;
  }

  void dump_local(std::int32_t slot, const std::vector<LocalExpr>& eqs, int k) const {
    if (!options.dump_edge || !options.dump_stream) return;
    const auto& x = reg.intersections[static_cast<std::size_t>(slot)];
    const auto& d = *options.dump_edge;
    if (x.node[0] != d[0] || x.node[1] != d[1] || x.node[2] != d[2] || x.axis != d[3]) return;
    auto& os = *options.dump_stream;
    const LocalFrame f = local_frame(x.normal);
    os << "local system at edge (" << d[0] << "," << d[1] << "," << d[2] << ") axis " << d[3]
       << "\n  location " << x.location.x << " " << x.location.y << " " << x.location.z
       << " t=" << x.t << "\n  n  = " << f.normal.x << " " << f.normal.y << " " << f.normal.z
       << "\n  t1 = " << f.tangent1.x << " " << f.tangent1.y << " " << f.tangent1.z
       << "\n  t2 = " << f.tangent2.x << " " << f.tangent2.y << " " << f.tangent2.z << "\n";
    for (int e = 0; e < static_cast<int>(eqs.size()); ++e) {
      os << "  eq" << e << " F:";
      for (int q = 0; q < k; ++q) os << " " << eqs[static_cast<std::size_t>(e)].f[static_cast<std::size_t>(q)];
      os << " | const " << eqs[static_cast<std::size_t>(e)].real.constant << " | terms";
      for (const auto& [i, c] : eqs[static_cast<std::size_t>(e)].real.terms) {
        const auto ijk = grid().unpack(i);
        os << " [" << ijk[0] << "," << ijk[1] << "," << ijk[2] << "]*" << c;
      }
      os << "\n";
    }
  }

  // ---- registration helpers ----
  std::int32_t push_equation(FictitiousEquation e) {
    e.expr.compress();
    out.equations.push_back(std::move(e));
    return static_cast<std::int32_t>(out.equations.size() - 1);
  }

  void register_pair(std::int32_t slot, std::int32_t eq_at_solvent,
                     std::int32_t eq_at_solute) {
    out.at_solvent_node[static_cast<std::size_t>(slot)] = eq_at_solvent;
    out.at_solute_node[static_cast<std::size_t>(slot)] = eq_at_solute;
  }

  bool slot_done(std::int32_t slot) const {
    return out.at_solvent_node[static_cast<std::size_t>(slot)] >= 0;
  }

  // ---- schemes ----
  void build_smooth(std::int32_t slot) {
    const auto& x = reg.intersections[static_cast<std::size_t>(slot)];
    const int ax = x.axis;
    const double h = grid().spacing[ax];
    const auto lo = x.node;
    const auto hi = step(lo, ax, +1);
    const bool lo_solute = flag(lo) == Domain::solute;
    const auto m_node = lo_solute ? lo : hi;
    const auto s_node = lo_solute ? hi : lo;
    const int dir = lo_solute ? +1 : -1; // from m towards s along the axis
    // crossing coordinate relative to m_node (signed, global axis)
    const double gamma_m = lo_solute ? x.t * h : -(1.0 - x.t) * h;
    const double gamma_s = gamma_m - dir * h; // relative to s_node

    const auto far_m = step(m_node, ax, -dir);
    const auto far_s = step(s_node, ax, +dir);

    // unknowns: F0 = solvent extension at m_node, F1 = solute extension at s_node.
    // Side stencils widen to four points when another same-domain node is
    // available, which keeps coarse grids accurate.
    LocalExpr val_m, d_m, val_s, d_s;
    {
      std::vector<double> coords{-dir * h, 0.0, dir * h};
      std::vector<std::int64_t> nodes{idx(far_m), idx(m_node), -1}; // -1 marks F1
      const auto far2 = step(m_node, ax, -2 * dir);
      if (in_grid(far2) && flag(far2) == Domain::solute) {
        coords.insert(coords.begin(), -2.0 * dir * h);
        nodes.insert(nodes.begin(), idx(far2));
      }
      const auto w0 = fd_weights(coords, gamma_m, 0);
      const auto w1 = fd_weights(coords, gamma_m, 1);
      for (std::size_t q = 0; q < coords.size(); ++q) {
        if (nodes[q] < 0) {
          val_m.f[1] += w0.weights[q];
          d_m.f[1] += w1.weights[q];
        } else {
          val_m.real.add_term(nodes[q], w0.weights[q]);
          d_m.real.add_term(nodes[q], w1.weights[q]);
        }
      }
    }
    {
      std::vector<double> coords{0.0, dir * h, 2.0 * dir * h};
      std::vector<std::int64_t> nodes{-1, idx(s_node), idx(far_s)};
      const auto far2 = step(s_node, ax, 2 * dir);
      if (in_grid(far2) && flag(far2) == Domain::solvent) {
        coords.push_back(3.0 * dir * h);
        nodes.push_back(idx(far2));
      }
      const auto w0 = fd_weights(coords, gamma_m, 0);
      const auto w1 = fd_weights(coords, gamma_m, 1);
      for (std::size_t q = 0; q < coords.size(); ++q) {
        if (nodes[q] < 0) {
          val_s.f[0] += w0.weights[q];
          d_s.f[0] += w1.weights[q];
        } else {
          val_s.real.add_term(nodes[q], w0.weights[q]);
          d_s.real.add_term(nodes[q], w1.weights[q]);
        }
      }
    }

    const auto eq = interface_equations(slot, m_node, s_node, gamma_m, gamma_s, val_m, val_s,
                                        d_m, d_s);
    if (!eq.well_posed) {
      build_degraded(slot);
      return;
    }
    std::vector<LocalExpr> sys{eq.zeroth, eq.combined};
    dump_local(slot, sys, 2);
    std::array<LinFunc, kMaxF> F;
    try {
      F = solve_local(std::move(sys), 2, "smooth scheme");
    } catch (const Error&) {
      build_degraded(slot);
      return;
    }

    FictitiousEquation e0;
    e0.target = idx(m_node);
    e0.side = Domain::solvent;
    e0.expr = std::move(F[0]);
    e0.edge_node = x.node;
    e0.edge_axis = ax;
    e0.scheme = FictitiousEquation::Scheme::smooth;
    FictitiousEquation e1;
    e1.target = idx(s_node);
    e1.side = Domain::solute;
    e1.expr = std::move(F[1]);
    e1.edge_node = x.node;
    e1.edge_axis = ax;
    e1.scheme = FictitiousEquation::Scheme::smooth;
    const auto i0 = push_equation(std::move(e0));
    const auto i1 = push_equation(std::move(e1));
    register_pair(slot, i1, i0);
    out.stats.smooth_edges += 1;
  }

  // center C has both axis neighbours across the interface
  void build_sharp(const std::array<int, 3>& C, int ax) {
    const auto A = step(C, ax, -1);
    const auto B = step(C, ax, +1);
    const double h = grid().spacing[ax];
    const std::int32_t slotA = reg.intersection_on_edge(A[0], A[1], A[2], ax);
    const std::int32_t slotB = reg.intersection_on_edge(C[0], C[1], C[2], ax);
    if (slotA < 0 || slotB < 0)
      fail(ErrorKind::registration, "sharp scheme: missing intersection on a crossed edge");

    const auto& xA = reg.intersections[static_cast<std::size_t>(slotA)];
    const auto& xB = reg.intersections[static_cast<std::size_t>(slotB)];
    const double gA = -(1.0 - xA.t) * h; // relative to C
    const double gB = xB.t * h;
    if (std::fabs(gB - gA) < 1e-12 * h)
      fail(ErrorKind::conditioning,
           "sharp scheme: coincident crossings (degenerate thin feature)");

    const Domain mid = flag(C);
    const Domain outer = mid == Domain::solute ? Domain::solvent : Domain::solute;

    // unknowns: F0 mid-ext at A, F1 outer-ext at C (edge A-C),
    //           F2 outer-ext at C (edge C-B), F3 mid-ext at B
    LocalExpr mid_val_A, mid_d_A, mid_val_B, mid_d_B;
    {
      const std::vector<double> coords{-h, 0.0, h};
      for (const double g : {gA, gB}) {
        const auto w0 = fd_weights(coords, g, 0);
        const auto w1 = fd_weights(coords, g, 1);
        LocalExpr v, d;
        v.f[0] += w0.weights[0];
        d.f[0] += w1.weights[0];
        v.real.add_term(idx(C), w0.weights[1]);
        d.real.add_term(idx(C), w1.weights[1]);
        v.f[3] += w0.weights[2];
        d.f[3] += w1.weights[2];
        if (g == gA) { mid_val_A = v; mid_d_A = d; }
        else { mid_val_B = v; mid_d_B = d; }
      }
    }
    LocalExpr out_val_A, out_d_A, out_val_B, out_d_B;
    {
      std::vector<double> coords{-h, 0.0};
      std::vector<std::int64_t> nodes{idx(A), -1}; // -1 marks F1
      for (int fs = 1; fs <= 2; ++fs) {
        const auto far = step(A, ax, -fs);
        if (!in_grid(far) || flag(far) != outer) break;
        coords.insert(coords.begin(), -(fs + 1.0) * h);
        nodes.insert(nodes.begin(), idx(far));
      }
      const auto w0 = fd_weights(coords, gA, 0);
      const auto w1 = fd_weights(coords, gA, 1);
      for (std::size_t q = 0; q < coords.size(); ++q) {
        if (nodes[q] < 0) {
          out_val_A.f[1] += w0.weights[q];
          out_d_A.f[1] += w1.weights[q];
        } else {
          out_val_A.real.add_term(nodes[q], w0.weights[q]);
          out_d_A.real.add_term(nodes[q], w1.weights[q]);
        }
      }
    }
    {
      std::vector<double> coords{0.0, h};
      std::vector<std::int64_t> nodes{-2, idx(B)}; // -2 marks F2
      for (int fs = 1; fs <= 2; ++fs) {
        const auto far = step(B, ax, +fs);
        if (!in_grid(far) || flag(far) != outer) break;
        coords.push_back((fs + 1.0) * h);
        nodes.push_back(idx(far));
      }
      const auto w0 = fd_weights(coords, gB, 0);
      const auto w1 = fd_weights(coords, gB, 1);
      for (std::size_t q = 0; q < coords.size(); ++q) {
        if (nodes[q] == -2) {
          out_val_B.f[2] += w0.weights[q];
          out_d_B.f[2] += w1.weights[q];
        } else {
          out_val_B.real.add_term(nodes[q], w0.weights[q]);
          out_d_B.real.add_term(nodes[q], w1.weights[q]);
        }
      }
    }

    // map mid/outer onto solute/solvent per crossing
    const bool mid_is_solute = mid == Domain::solute;
    const auto eqA = interface_equations(
        slotA, mid_is_solute ? C : A, mid_is_solute ? A : C, mid_is_solute ? gA : gA - (-h),
        mid_is_solute ? gA - (-h) : gA,
        mid_is_solute ? mid_val_A : out_val_A, mid_is_solute ? out_val_A : mid_val_A,
        mid_is_solute ? mid_d_A : out_d_A, mid_is_solute ? out_d_A : mid_d_A);
    const auto eqB = interface_equations(
        slotB, mid_is_solute ? C : B, mid_is_solute ? B : C, mid_is_solute ? gB : gB - h,
        mid_is_solute ? gB - h : gB,
        mid_is_solute ? mid_val_B : out_val_B, mid_is_solute ? out_val_B : mid_val_B,
        mid_is_solute ? mid_d_B : out_d_B, mid_is_solute ? out_d_B : mid_d_B);

    if (!eqA.well_posed || !eqB.well_posed) {
      if (!slot_done(slotA)) build_degraded(slotA);
      if (!slot_done(slotB)) build_degraded(slotB);
      return;
    }
    std::vector<LocalExpr> sys{eqA.zeroth, eqA.combined, eqB.zeroth, eqB.combined};
    dump_local(slotA, sys, 4);
    dump_local(slotB, sys, 4);
    std::array<LinFunc, kMaxF> F;
    try {
      F = solve_local(std::move(sys), 4, "sharp scheme");
    } catch (const Error&) {
      // numerically rank-deficient local geometry: keep the run alive with
      // the first-order treatment on both edges, counted in the stats
      if (!slot_done(slotA)) build_degraded(slotA);
      if (!slot_done(slotB)) build_degraded(slotB);
      return;
    }

    auto make = [&](std::int64_t target, Domain side, LinFunc expr,
                    const RegisteredIntersection& x) {
      FictitiousEquation e;
      e.target = target;
      e.side = side;
      e.expr = std::move(expr);
      e.edge_node = x.node;
      e.edge_axis = x.axis;
      e.scheme = FictitiousEquation::Scheme::sharp;
      return e;
    };

    if (!slot_done(slotA)) {
      const auto iF0 = push_equation(make(idx(A), mid, F[0], xA));
      const auto iF1 = push_equation(make(idx(C), outer, F[1], xA));
      // at_solvent_node must target the solvent-flagged endpoint
      if (mid_is_solute)
        register_pair(slotA, iF0, iF1); // A is solvent
      else
        register_pair(slotA, iF1, iF0); // C is solvent
    }
    if (!slot_done(slotB)) {
      const auto iF3 = push_equation(make(idx(B), mid, F[3], xB));
      const auto iF2 = push_equation(make(idx(C), outer, F[2], xB));
      if (mid_is_solute)
        register_pair(slotB, iF3, iF2);
      else
        register_pair(slotB, iF2, iF3);
    }
    out.stats.sharp_edges += 1;
  }

  // last-resort two-point treatment; first order, counted in the stats
  void build_degraded(std::int32_t slot) {
    const auto& x = reg.intersections[static_cast<std::size_t>(slot)];
    const int ax = x.axis;
    const double h = grid().spacing[ax];
    const auto lo = x.node;
    const auto hi = step(lo, ax, +1);
    const bool lo_solute = flag(lo) == Domain::solute;
    const auto m_node = lo_solute ? lo : hi;
    const auto s_node = lo_solute ? hi : lo;
    const int dir = lo_solute ? +1 : -1;
    const double gamma = lo_solute ? x.t * h : -(1.0 - x.t) * h; // from m_node

    const double nd = x.normal[ax];
    const double psi = jump[static_cast<std::size_t>(slot)];

    // F0 = solvent ext at m_node, F1 = solute ext at s_node
    LocalExpr val_m, val_s, d_m, d_s;
    {
      const std::vector<double> coords{0.0, dir * h};
      const auto w0 = fd_weights(coords, gamma, 0);
      const auto w1 = fd_weights(coords, gamma, 1);
      val_m.real.add_term(idx(m_node), w0.weights[0]);
      val_m.f[1] += w0.weights[1];
      d_m.real.add_term(idx(m_node), w1.weights[0]);
      d_m.f[1] += w1.weights[1];
      val_s.f[0] += w0.weights[0];
      val_s.real.add_term(idx(s_node), w0.weights[1]);
      d_s.f[0] += w1.weights[0];
      d_s.real.add_term(idx(s_node), w1.weights[1]);
    }

    std::vector<LocalExpr> sys;
    LocalExpr zeroth;
    zeroth.axpy(1.0, val_s);
    zeroth.axpy(-1.0, val_m);
    sys.push_back(zeroth);
    if (std::fabs(nd) > 1e-3) {
      LocalExpr flux;
      flux.axpy(eps.eps_solvent * nd, d_s);
      flux.axpy(-eps.eps_solute * nd, d_m);
      flux.real.constant -= psi;
      sys.push_back(flux);
    } else {
      // grazing crossing: constant extension on each side
      LocalExpr ext;
      ext.f[0] = 1.0;
      ext.real.add_term(idx(s_node), -1.0);
      sys.push_back(ext);
      sys[0] = LocalExpr{};
      sys[0].f[1] = 1.0;
      sys[0].real.add_term(idx(m_node), -1.0);
    }
    dump_local(slot, sys, 2);
    auto F = solve_local(std::move(sys), 2, "degraded scheme");

    FictitiousEquation e0;
    e0.target = idx(m_node);
    e0.side = Domain::solvent;
    e0.expr = std::move(F[0]);
    e0.edge_node = x.node;
    e0.edge_axis = ax;
    e0.scheme = FictitiousEquation::Scheme::degraded;
    FictitiousEquation e1;
    e1.target = idx(s_node);
    e1.side = Domain::solute;
    e1.expr = std::move(F[1]);
    e1.edge_node = x.node;
    e1.edge_axis = ax;
    e1.scheme = FictitiousEquation::Scheme::degraded;
    const auto i0 = push_equation(std::move(e0));
    const auto i1 = push_equation(std::move(e1));
    register_pair(slot, i1, i0);
    out.stats.degraded_edges += 1;
  }

  void build_all() {
    const auto n_slots = static_cast<std::int32_t>(reg.intersections.size());
    for (std::int32_t slot = 0; slot < n_slots; ++slot) {
      if (slot_done(slot)) continue;
      const auto& x = reg.intersections[static_cast<std::size_t>(slot)];
      const int ax = x.axis;
      const auto lo = x.node;
      const auto hi = step(lo, ax, +1);
      const bool lo_solute = flag(lo) == Domain::solute;
      const auto m_node = lo_solute ? lo : hi;
      const auto s_node = lo_solute ? hi : lo;
      const int dir = lo_solute ? +1 : -1;

      const auto far_m = step(m_node, ax, -dir);
      const auto far_s = step(s_node, ax, +dir);
      const bool far_m_ok = in_grid(far_m) && flag(far_m) == Domain::solute;
      const bool far_s_ok = in_grid(far_s) && flag(far_s) == Domain::solvent;

      if (far_m_ok && far_s_ok) {
        build_smooth(slot);
      } else if (in_grid(far_m) && flag(far_m) == Domain::solvent) {
        try {
          build_sharp(m_node, ax); // solvent - solute - solvent
        } catch (const Error&) {
          // degenerate thin feature (e.g. coincident crossings): first-order
          // treatment keeps the run alive, flagged in the stats
          if (!slot_done(slot)) build_degraded(slot);
        }
      } else if (in_grid(far_s) && flag(far_s) == Domain::solute) {
        try {
          build_sharp(s_node, ax); // solute - solvent - solute
        } catch (const Error&) {
          if (!slot_done(slot)) build_degraded(slot);
        }
      } else {
        build_degraded(slot); // interface hugging the box edge
      }
    }
    for (std::int32_t slot = 0; slot < n_slots; ++slot)
      if (!slot_done(slot))
        fail(ErrorKind::registration, "fictitious construction left an edge uncovered");
  }
};

} // namespace

FictitiousSet build_fictitious(const DomainRegistration& reg, const DielectricModel& eps,
                               const std::vector<double>& jump_data,
                               const MibOptions& options) {
  if (jump_data.size() != reg.intersections.size())
    fail(ErrorKind::domain, "build_fictitious: jump data does not cover every intersection");
  FictitiousSet set;
  set.at_solvent_node.assign(reg.intersections.size(), -1);
  set.at_solute_node.assign(reg.intersections.size(), -1);
  Builder b{reg, eps, jump_data, options, set};
  b.build_all();
  return set;
}

SparseSystem assemble(const DomainRegistration& reg, const DielectricModel& eps,
                      const std::vector<double>& jump_data,
                      const std::vector<double>& boundary_values,
                      const FictitiousSet* fictitious) {
  const auto& g = reg.grid;
  if (jump_data.size() != reg.intersections.size())
    fail(ErrorKind::domain, "assemble: jump data does not cover every intersection");
  if (boundary_values.size() != static_cast<std::size_t>(g.node_count()))
    fail(ErrorKind::domain, "assemble: boundary values must be provided per node");

  FictitiousSet local;
  if (!fictitious) {
    local = build_fictitious(reg, eps, jump_data);
    fictitious = &local;
  }

  SparseSystem sys;
  sys.resize(g.node_count());
  sys.triplets.reserve(static_cast<std::size_t>(7 * g.node_count()));

  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::int64_t row = g.index(i, j, k);
        if (g.is_boundary(i, j, k)) {
          sys.add(row, row, 1.0);
          sys.rhs[static_cast<std::size_t>(row)] =
              boundary_values[static_cast<std::size_t>(row)];
          continue;
        }
        const Domain dom = reg.flag(i, j, k);
        const double ed = dom == Domain::solute ? eps.eps_solute : eps.eps_solvent;
        for (int ax = 0; ax < 3; ++ax) {
          const double w = ed / (g.spacing[ax] * g.spacing[ax]);
          sys.add(row, row, 2.0 * w);
          for (int dir = -1; dir <= 1; dir += 2) {
            const int ni = i + (ax == 0) * dir, nj = j + (ax == 1) * dir,
                      nk = k + (ax == 2) * dir;
            const std::int64_t nidx = g.index(ni, nj, nk);
            if (reg.flag(ni, nj, nk) == dom) {
              sys.add(row, nidx, -w);
              continue;
            }
            const std::int32_t slot = dir > 0 ? reg.intersection_on_edge(i, j, k, ax)
                                              : reg.intersection_on_edge(ni, nj, nk, ax);
            if (slot < 0)
              fail(ErrorKind::registration, "assemble: crossed edge without intersection");
            const auto& fe = fictitious->for_row(slot, dom);
            if (fe.target != nidx)
              fail(ErrorKind::registration, "assemble: fictitious equation target mismatch");
            for (const auto& [col, c] : fe.expr.terms) sys.add(row, col, -w * c);
            sys.rhs[static_cast<std::size_t>(row)] += w * fe.expr.constant;
          }
        }
      }
  return sys;
}

} // namespace pbsolv
