#include "pbsolv/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pbsolv/errors.hpp"

namespace pbsolv {

void validate(const Atom& a) {
  if (!(a.radius > 0.0)) fail(ErrorKind::model, "atom radius must be positive");
  if (!finite(a.center) || !std::isfinite(a.charge))
    fail(ErrorKind::model, "atom fields must be finite");
}

void validate(const DielectricModel& d) {
  if (!(d.eps_solute > 0.0 && d.eps_solvent > 0.0))
    fail(ErrorKind::model, "dielectric constants must be positive");
  if (!(d.kappa_bar >= 0.0)) fail(ErrorKind::model, "kappa_bar must be non-negative");
}

SoluteModel parse_pqr(std::istream& in, const std::string& origin) {
  SoluteModel model;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    double x, y, z, q, r;
    if (!(ls >> x >> y >> z >> q >> r)) {
      std::ostringstream msg;
      msg << origin << ":" << lineno << ": expected 'x y z q r'";
      fail(ErrorKind::parse, msg.str());
    }
    std::string extra;
    if (ls >> extra) {
      std::ostringstream msg;
      msg << origin << ":" << lineno << ": trailing token '" << extra << "'";
      fail(ErrorKind::parse, msg.str());
    }
    Atom a{{x, y, z}, q, r};
    validate(a);
    model.atoms.push_back(a);
  }
  if (model.atoms.empty()) fail(ErrorKind::model, origin + ": no atoms");
  return model;
}

SoluteModel load_pqr(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse, "cannot open " + path);
  return parse_pqr(in, path);
}

std::string serialize_pqr(const SoluteModel& model) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& a : model.atoms)
    out << a.center.x << " " << a.center.y << " " << a.center.z << " " << a.charge << " "
        << a.radius << "\n";
  return out.str();
}

} // namespace pbsolv
