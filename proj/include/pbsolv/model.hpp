#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pbsolv/vec3.hpp"

namespace pbsolv {

// Energies are kcal/mol, lengths Angstrom, charges in units of e.
// The Coulomb constant below converts e^2/Angstrom to kcal/mol; the value is
// pinned by requiring the Born sphere (Q=1, R=2, eps 1/80) to give -81.98.
struct UnitSystem {
  double coulomb_constant = 332.0716; // kcal*A/(mol*e^2)
};

struct Atom {
  Vec3 center;       // Angstrom
  double charge = 0; // e
  double radius = 0; // Angstrom
};

struct DielectricModel {
  double eps_solute = 1.0;
  double eps_solvent = 80.0;
  double kappa_bar = 0.0; // 1/Angstrom, Debye-Hueckel screening
};

struct SoluteModel {
  std::vector<Atom> atoms;

  double total_charge() const {
    double q = 0;
    for (const auto& a : atoms) q += a.charge;
    return q;
  }
  double max_radius() const {
    double r = 0;
    for (const auto& a : atoms) r = a.radius > r ? a.radius : r;
    return r;
  }
};

void validate(const Atom& a);
void validate(const DielectricModel& d);

// Input lines are whitespace-separated "x y z q r"; '#' starts a comment.
SoluteModel load_pqr(const std::string& path);
SoluteModel parse_pqr(std::istream& in, const std::string& origin);
std::string serialize_pqr(const SoluteModel& model);

} // namespace pbsolv
