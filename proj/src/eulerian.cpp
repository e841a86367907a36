#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pbsolv/errors.hpp"
#include "pbsolv/grid.hpp"
#include "pbsolv/surface.hpp"

namespace pbsolv {

namespace {

const char* axis_letter(int ax) { return ax == 0 ? "x" : (ax == 1 ? "y" : "z"); }

int parse_axis(const std::string& tok) {
  if (tok == "x" || tok == "0") return 0;
  if (tok == "y" || tok == "1") return 1;
  if (tok == "z" || tok == "2") return 2;
  fail(ErrorKind::format, "eulerian: bad axis token '" + tok + "'");
}

void format_double(std::ostringstream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

} // namespace

std::string eulerian_to_string(const DomainRegistration& reg) {
  const auto& g = reg.grid;
  if (std::fabs(g.spacing.x - g.spacing.y) > 1e-15 ||
      std::fabs(g.spacing.x - g.spacing.z) > 1e-15)
    fail(ErrorKind::dimension, "eulerian export requires equal spacing in all axes");

  std::ostringstream out;
  out << "EULER " << g.dims[0] << " " << g.dims[1] << " " << g.dims[2] << " ";
  format_double(out, g.spacing.x);
  out << " ";
  format_double(out, g.origin.x);
  out << " ";
  format_double(out, g.origin.y);
  out << " ";
  format_double(out, g.origin.z);
  out << "\n";
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        out << i << " " << j << " " << k << " "
            << (reg.flag(i, j, k) == Domain::solute ? 1 : 0) << "\n";
  for (const auto& x : reg.intersections) {
    out << x.node[0] << " " << x.node[1] << " " << x.node[2] << " " << axis_letter(x.axis)
        << " ";
    format_double(out, x.t);
    out << " ";
    format_double(out, x.normal.x);
    out << " ";
    format_double(out, x.normal.y);
    out << " ";
    format_double(out, x.normal.z);
    out << "\n";
  }
  return out.str();
}

void export_eulerian(const DomainRegistration& reg, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::parse, "cannot open " + path + " for writing");
  out << eulerian_to_string(reg);
}

EulerianData import_eulerian(const std::string& path, const CartesianGrid& grid) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse, "cannot open " + path);

  std::string tag;
  int nx, ny, nz;
  double h, x0, y0, z0;
  if (!(in >> tag >> nx >> ny >> nz >> h >> x0 >> y0 >> z0) || tag != "EULER")
    fail(ErrorKind::format, path + ": bad EULER header");
  if (nx != grid.dims[0] || ny != grid.dims[1] || nz != grid.dims[2])
    fail(ErrorKind::dimension, path + ": node counts do not match the grid");
  const double scale = std::fabs(h) + 1.0;
  if (std::fabs(h - grid.spacing.x) > 1e-12 * scale ||
      std::fabs(grid.spacing.x - grid.spacing.y) > 1e-15 ||
      std::fabs(grid.spacing.x - grid.spacing.z) > 1e-15)
    fail(ErrorKind::dimension, path + ": spacing does not match the grid");
  if (std::fabs(x0 - grid.origin.x) > 1e-9 || std::fabs(y0 - grid.origin.y) > 1e-9 ||
      std::fabs(z0 - grid.origin.z) > 1e-9)
    fail(ErrorKind::dimension, path + ": origin does not match the grid");

  EulerianData data;
  data.flags.assign(static_cast<std::size_t>(grid.node_count()), Domain::solvent);
  std::vector<bool> seen(static_cast<std::size_t>(grid.node_count()), false);
  std::int64_t flags_read = 0;
  for (std::int64_t l = 0; l < grid.node_count(); ++l) {
    int i, j, k, f;
    if (!(in >> i >> j >> k >> f))
      fail(ErrorKind::dimension, path + ": wrong node count in flag section");
    if (!grid.in_grid(i, j, k)) fail(ErrorKind::format, path + ": node index out of range");
    if (f != 0 && f != 1) fail(ErrorKind::format, path + ": flag must be 0 or 1");
    const auto idx = static_cast<std::size_t>(grid.index(i, j, k));
    if (seen[idx]) fail(ErrorKind::format, path + ": duplicate node flag");
    seen[idx] = true;
    data.flags[idx] = f == 1 ? Domain::solute : Domain::solvent;
    ++flags_read;
  }
  (void)flags_read;

  std::string itok;
  while (in >> itok) {
    EulerianData::Intersection x;
    try {
      std::size_t used = 0;
      x.node[0] = std::stoi(itok, &used);
      if (used != itok.size()) throw std::invalid_argument(itok);
    } catch (const std::exception&) {
      fail(ErrorKind::format, path + ": bad intersection line start '" + itok + "'");
    }
    std::string axis_tok;
    if (!(in >> x.node[1] >> x.node[2] >> axis_tok >> x.t >> x.normal.x >> x.normal.y >>
          x.normal.z))
      fail(ErrorKind::format, path + ": bad intersection line");
    x.axis = parse_axis(axis_tok);
    if (!grid.in_grid(x.node[0], x.node[1], x.node[2]))
      fail(ErrorKind::format, path + ": intersection node out of range");
    if (!(x.t >= 0.0 && x.t <= 1.0))
      fail(ErrorKind::format, path + ": intersection parameter outside [0,1]");
    const double nl = norm(x.normal);
    if (std::fabs(nl - 1.0) > 1e-6)
      fail(ErrorKind::format, path + ": non-unit normal (|n| = " + std::to_string(nl) + ")");
    if (std::fabs(nl - 1.0) > 1e-12) x.normal = x.normal / nl;
    data.intersections.push_back(x);
  }
  return data;
}

} // namespace pbsolv
