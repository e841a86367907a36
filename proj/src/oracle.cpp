#include "pbsolv/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "pbsolv/errors.hpp"

namespace pbsolv {

double born_energy(double charge, double radius, double eps_in, double eps_out,
                   const UnitSystem& units) {
  if (!(radius > 0.0)) fail(ErrorKind::domain, "born_energy: radius must be positive");
  if (!(eps_in > 0.0 && eps_out > 0.0))
    fail(ErrorKind::domain, "born_energy: dielectric constants must be positive");
  return -units.coulomb_constant * charge * charge / (2.0 * radius) *
         (1.0 / eps_in - 1.0 / eps_out);
}

namespace {

// Per-n coefficient of the series (dielectric response of the sphere).
double response_coeff(int n, double ei, double eo) {
  return (n + 1) * (ei - eo) / (ei * ((n + 1) * eo + n * ei));
}

// Energy of all pairs for orders [n0, n1). Legendre values advance with the
// three-term recurrence per pair.
struct PairState {
  double qq;     // Qi*Qj
  double ratio;  // ri*rj/R^2
  double cosg;
  double pn_m1;  // P_{n-1}
  double pn;     // P_n
  double radial; // (ri rj)^n / R^(2n+1)
};

} // namespace

KirkwoodResult kirkwood_energy(const KirkwoodConfig& config) {
  if (!(config.radius > 0.0)) fail(ErrorKind::domain, "kirkwood_energy: radius must be positive");
  if (!(config.eps_in > 0.0 && config.eps_out > 0.0))
    fail(ErrorKind::domain, "kirkwood_energy: dielectric constants must be positive");
  if (config.charges.empty()) fail(ErrorKind::domain, "kirkwood_energy: no charges");

  const double R = config.radius;
  for (const auto& c : config.charges)
    if (norm(c.position) >= R * (1.0 - 1e-12))
      fail(ErrorKind::domain, "kirkwood_energy: charge on or outside the sphere boundary");

  std::vector<PairState> pairs;
  pairs.reserve(config.charges.size() * config.charges.size());
  for (const auto& ci : config.charges) {
    for (const auto& cj : config.charges) {
      PairState p;
      p.qq = ci.charge * cj.charge;
      const double ri = norm(ci.position), rj = norm(cj.position);
      p.ratio = ri * rj / (R * R);
      p.cosg = (ri * rj == 0.0) ? 1.0
                                : dot(ci.position, cj.position) / (ri * rj);
      p.cosg = std::clamp(p.cosg, -1.0, 1.0); // guard rounding
      p.pn_m1 = 0.0;
      p.pn = 1.0;
      p.radial = 1.0 / R;
      pairs.push_back(p);
    }
  }

  const double ke = config.units.coulomb_constant;
  const double ei = config.eps_in, eo = config.eps_out;
  const double tail_tol = 1e-6; // kcal/mol on the energy

  double sum = 0.0;
  int n = 0;
  double last_block = 0.0;
  const int n_max = config.series_terms > 0 ? config.series_terms : 4000;
  int used = 0;
  // Terms are summed order by order; convergence is declared when four
  // consecutive per-order contributions stay below the tail tolerance
  // (even/odd orders can vanish by symmetry).
  int quiet_orders = 0;
  for (; n < n_max; ++n) {
    double order_term = 0.0;
    const double cn = response_coeff(n, ei, eo);
    for (auto& p : pairs) {
      order_term += p.qq * cn * p.radial * p.pn;
      // advance recurrence to n+1
      const double pn_p1 = ((2 * n + 1) * p.cosg * p.pn - n * p.pn_m1) / (n + 1);
      p.pn_m1 = p.pn;
      p.pn = pn_p1;
      p.radial *= p.ratio;
    }
    order_term *= 0.5 * ke;
    sum += order_term;
    used = n + 1;
    last_block = std::fabs(order_term);
    if (config.series_terms == 0) {
      quiet_orders = last_block < tail_tol ? quiet_orders + 1 : 0;
      if (quiet_orders >= 4 && n >= 2) break;
    }
  }
  if (config.series_terms == 0 && used >= n_max)
    fail(ErrorKind::domain, "kirkwood_energy: series did not converge");

  KirkwoodResult res;
  res.energy = sum;
  res.terms_used = used;
  res.tail_estimate = last_block;
  return res;
}

} // namespace pbsolv
