#pragma once

#include <vector>

#include "pbsolv/model.hpp"
#include "pbsolv/vec3.hpp"

namespace pbsolv {

// Single centered charge in a dielectric sphere:
//   dG = -ke * Q^2/(2R) * (1/eps_in - 1/eps_out)   [kcal/mol]
double born_energy(double charge, double radius, double eps_in, double eps_out,
                   const UnitSystem& units = {});

struct KirkwoodCharge {
  Vec3 position; // inside the sphere
  double charge;
};

struct KirkwoodConfig {
  double radius = 2.0;
  std::vector<KirkwoodCharge> charges;
  double eps_in = 1.0;
  double eps_out = 80.0;
  int series_terms = 0; // 0 -> adaptive truncation
  UnitSystem units;
};

struct KirkwoodResult {
  double energy = 0.0; // kcal/mol
  int terms_used = 0;
  double tail_estimate = 0.0;
};

// Legendre-series reaction-field energy of point charges in a dielectric
// sphere:
//   dG = (ke/2) sum_ij Qi Qj sum_n
//        (n+1)(ei-eo) / (ei((n+1)eo + n ei)) (ri rj)^n / R^(2n+1) Pn(cos gij)
// Adaptive truncation keeps the tail below 1e-6 kcal/mol. A charge on or
// outside the sphere boundary is a domain error (non-convergent series).
KirkwoodResult kirkwood_energy(const KirkwoodConfig& config);

} // namespace pbsolv
