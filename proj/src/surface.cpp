#include "pbsolv/surface.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "pbsolv/errors.hpp"

namespace pbsolv {

namespace {

Domain from_signed_distance(double d) {
  return d <= kOnSurfaceTol ? Domain::solute : Domain::solvent;
}

// Exact closest point on a triangle (Ericson, Real-Time Collision Detection).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + (c - b) * w;
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Roots of |a + t*d - c|^2 = R^2 in ascending order.
int sphere_segment_roots(const Vec3& a, const Vec3& d, const Vec3& c, double R,
                         double roots[2]) {
  const Vec3 m = a - c;
  const double A = dot(d, d);
  const double B = 2.0 * dot(m, d);
  const double C = dot(m, m) - R * R;
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0 || A == 0.0) return 0;
  const double sq = std::sqrt(disc);
  // Numerically stable form: q = -(B + sign(B)*sqrt(disc))/2.
  const double q = -0.5 * (B + (B >= 0.0 ? sq : -sq));
  double t0 = q / A;
  double t1 = (q != 0.0) ? C / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  roots[0] = t0;
  roots[1] = t1;
  return disc == 0.0 ? 1 : 2;
}

} // namespace

SphereSurface::SphereSurface(const Vec3& center, double radius)
    : center_(center), radius_(radius) {
  if (!(radius > 0.0)) fail(ErrorKind::geometry, "SphereSurface: radius must be positive");
  if (!finite(center)) fail(ErrorKind::geometry, "SphereSurface: center must be finite");
}

Domain SphereSurface::classify(const Vec3& p) const {
  if (!finite(p)) fail(ErrorKind::geometry, "classify: point must be finite");
  return from_signed_distance(norm(p - center_) - radius_);
}

std::optional<Crossing> SphereSurface::cross(const Vec3& a, const Vec3& b, Domain da,
                                             Domain db) const {
  const Vec3 d = b - a;
  double roots[2];
  const int nr = sphere_segment_roots(a, d, center_, radius_, roots);
  const double tol = 1e-12;
  std::vector<double> in_range;
  for (int i = 0; i < nr; ++i)
    if (roots[i] >= -tol && roots[i] <= 1.0 + tol)
      in_range.push_back(std::clamp(roots[i], 0.0, 1.0));
  if (in_range.empty()) return std::nullopt;
  // Crossing nearest the solute-side endpoint.
  const bool a_is_solute = da == Domain::solute;
  double t = a_is_solute ? in_range.front() : in_range.back();
  (void)db;
  Crossing c;
  c.location = a + d * t;
  c.normal = (c.location - center_) / radius_;
  c.subgrid_feature = in_range.size() > 1;
  return c;
}

void SphereSurface::bounds(Vec3& lo, Vec3& hi) const {
  lo = center_ - Vec3{radius_, radius_, radius_};
  hi = center_ + Vec3{radius_, radius_, radius_};
}

UnionOfSpheres::UnionOfSpheres(std::vector<Ball> balls) : balls_(std::move(balls)) {
  if (balls_.empty()) fail(ErrorKind::geometry, "UnionOfSpheres: no spheres");
  for (const auto& b : balls_)
    if (!(b.radius > 0.0)) fail(ErrorKind::geometry, "UnionOfSpheres: radius must be positive");
}

UnionOfSpheres::UnionOfSpheres(const SoluteModel& model) {
  for (const auto& a : model.atoms) balls_.push_back({a.center, a.radius});
  if (balls_.empty()) fail(ErrorKind::geometry, "UnionOfSpheres: no spheres");
}

double UnionOfSpheres::signed_distance(const Vec3& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& b : balls_) d = std::min(d, norm(p - b.center) - b.radius);
  return d;
}

Domain UnionOfSpheres::classify(const Vec3& p) const {
  if (!finite(p)) fail(ErrorKind::geometry, "classify: point must be finite");
  return from_signed_distance(signed_distance(p));
}

std::optional<Crossing> UnionOfSpheres::cross(const Vec3& a, const Vec3& b, Domain da,
                                              Domain db) const {
  (void)db;
  const Vec3 d = b - a;
  struct Candidate {
    double t;
    std::size_t ball;
  };
  std::vector<Candidate> cands;
  const double tol = 1e-12;
  for (std::size_t bi = 0; bi < balls_.size(); ++bi) {
    double roots[2];
    const int nr = sphere_segment_roots(a, d, balls_[bi].center, balls_[bi].radius, roots);
    for (int i = 0; i < nr; ++i) {
      if (roots[i] < -tol || roots[i] > 1.0 + tol) continue;
      const double t = std::clamp(roots[i], 0.0, 1.0);
      // Keep only crossings on the union boundary: strictly inside no sphere.
      const Vec3 p = a + d * t;
      bool covered = false;
      for (std::size_t bj = 0; bj < balls_.size() && !covered; ++bj) {
        if (bj == bi) continue;
        if (norm(p - balls_[bj].center) - balls_[bj].radius < -1e-8) covered = true;
      }
      if (!covered) cands.push_back({t, bi});
    }
  }
  if (cands.empty()) return std::nullopt;
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& l, const Candidate& r) { return l.t < r.t; });
  const bool a_is_solute = da == Domain::solute;
  const Candidate pick = a_is_solute ? cands.front() : cands.back();
  if (cands.size() > 1) ++subgrid_warnings_;
  Crossing c;
  c.location = a + d * pick.t;
  c.normal = normalized(c.location - balls_[pick.ball].center);
  c.subgrid_feature = cands.size() > 1;
  return c;
}

void UnionOfSpheres::bounds(Vec3& lo, Vec3& hi) const {
  lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity()};
  hi = -lo;
  for (const auto& b : balls_) {
    for (int ax = 0; ax < 3; ++ax) {
      lo[ax] = std::min(lo[ax], b.center[ax] - b.radius);
      hi[ax] = std::max(hi[ax], b.center[ax] + b.radius);
    }
  }
}

TriangulatedSurface::TriangulatedSurface(std::vector<Vec3> vertices,
                                         std::vector<std::array<int, 3>> triangles,
                                         std::vector<Vec3> vertex_normals)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      vertex_normals_(std::move(vertex_normals)) {
  if (vertices_.size() < 4 || triangles_.size() < 4)
    fail(ErrorKind::topology, "TriangulatedSurface: too few vertices or triangles");
  for (const auto& t : triangles_)
    for (int v : t)
      if (v < 0 || static_cast<std::size_t>(v) >= vertices_.size())
        fail(ErrorKind::topology, "TriangulatedSurface: vertex index out of range");

  // Closed-manifold check: every undirected edge shared by exactly two triangles.
  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& t : triangles_) {
    for (int e = 0; e < 3; ++e) {
      int u = t[static_cast<std::size_t>(e)], v = t[static_cast<std::size_t>((e + 1) % 3)];
      if (u > v) std::swap(u, v);
      edge_use[{u, v}] += 1;
    }
  }
  for (const auto& [edge, count] : edge_use)
    if (count != 2)
      fail(ErrorKind::topology, "TriangulatedSurface: open or non-manifold surface (edge use " +
                                    std::to_string(count) + ")");

  // Orient outward: positive signed volume, vertex normals agreeing with
  // area-weighted face normals.
  double vol6 = 0.0;
  for (const auto& t : triangles_)
    vol6 += dot(vertices_[static_cast<std::size_t>(t[0])],
                pbsolv::cross(vertices_[static_cast<std::size_t>(t[1])],
                              vertices_[static_cast<std::size_t>(t[2])]));
  if (vol6 < 0.0)
    for (auto& t : triangles_) std::swap(t[1], t[2]);

  if (!vertex_normals_.empty()) {
    if (vertex_normals_.size() != vertices_.size())
      fail(ErrorKind::topology, "TriangulatedSurface: normal count mismatch");
    double agree = 0.0;
    for (const auto& t : triangles_) {
      const Vec3 fn = pbsolv::cross(vertices_[static_cast<std::size_t>(t[1])] -
                                vertices_[static_cast<std::size_t>(t[0])],
                            vertices_[static_cast<std::size_t>(t[2])] -
                                vertices_[static_cast<std::size_t>(t[0])]);
      for (int v : t) agree += dot(fn, vertex_normals_[static_cast<std::size_t>(v)]);
    }
    if (agree < 0.0)
      for (auto& nv : vertex_normals_) nv = -nv;
    for (auto& nv : vertex_normals_) nv = normalized(nv);
  }

  lo_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity()};
  hi_ = -lo_;
  for (const auto& v : vertices_) {
    for (int ax = 0; ax < 3; ++ax) {
      lo_[ax] = std::min(lo_[ax], v[ax]);
      hi_[ax] = std::max(hi_[ax], v[ax]);
    }
  }
}

void TriangulatedSurface::bounds(Vec3& lo, Vec3& hi) const {
  lo = lo_;
  hi = hi_;
}

// Moller-Trumbore against every triangle; hits outside [0, tmax] are skipped.
// Returns false when a degenerate hit (ray through an edge/vertex) was seen.
bool TriangulatedSurface::segment_hits(const Vec3& a, const Vec3& dir, double tmax,
                                       std::vector<Hit>& hits) const {
  hits.clear();
  bool clean = true;
  const double eps_bary = 1e-12;
  for (std::size_t ti = 0; ti < triangles_.size(); ++ti) {
    const auto& t = triangles_[ti];
    const Vec3& v0 = vertices_[static_cast<std::size_t>(t[0])];
    const Vec3 e1 = vertices_[static_cast<std::size_t>(t[1])] - v0;
    const Vec3 e2 = vertices_[static_cast<std::size_t>(t[2])] - v0;
    const Vec3 pv = pbsolv::cross(dir, e2);
    const double det = dot(e1, pv);
    if (std::fabs(det) < 1e-14) continue; // parallel
    const double inv = 1.0 / det;
    const Vec3 tv = a - v0;
    const double u = dot(tv, pv) * inv;
    if (u < -eps_bary || u > 1.0 + eps_bary) continue;
    const Vec3 qv = pbsolv::cross(tv, e1);
    const double v = dot(dir, qv) * inv;
    if (v < -eps_bary || u + v > 1.0 + eps_bary) continue;
    const double tt = dot(e2, qv) * inv;
    if (tt < -eps_bary || tt > tmax + eps_bary) continue;
    Hit h;
    h.t = tt;
    h.tri = ti;
    h.u = u;
    h.v = v;
    h.degenerate = (u < eps_bary || v < eps_bary || u + v > 1.0 - eps_bary ||
                    tt < eps_bary || tt > tmax - eps_bary);
    hits.push_back(h);
    if (h.degenerate) clean = false;
  }
  return clean;
}

double TriangulatedSurface::distance_to_surface(const Vec3& p, double cutoff) const {
  double best = cutoff;
  for (const auto& t : triangles_) {
    const Vec3& v0 = vertices_[static_cast<std::size_t>(t[0])];
    const Vec3& v1 = vertices_[static_cast<std::size_t>(t[1])];
    const Vec3& v2 = vertices_[static_cast<std::size_t>(t[2])];
    // quick reject on inflated bounding box
    bool reject = false;
    for (int ax = 0; ax < 3 && !reject; ++ax) {
      const double lo = std::min({v0[ax], v1[ax], v2[ax]}) - best;
      const double hi = std::max({v0[ax], v1[ax], v2[ax]}) + best;
      if (p[ax] < lo || p[ax] > hi) reject = true;
    }
    if (reject) continue;
    best = std::min(best, norm(p - closest_point_on_triangle(p, v0, v1, v2)));
  }
  return best;
}

Domain TriangulatedSurface::classify(const Vec3& p) const {
  if (!finite(p)) fail(ErrorKind::geometry, "classify: point must be finite");
  for (int ax = 0; ax < 3; ++ax)
    if (p[ax] < lo_[ax] - kOnSurfaceTol || p[ax] > hi_[ax] + kOnSurfaceTol)
      return Domain::solvent;
  if (distance_to_surface(p, 2.0 * kOnSurfaceTol) <= kOnSurfaceTol) return Domain::solute;

  // Parity ray cast: +x first, deterministic jitters on degeneracies.
  static const Vec3 jitters[] = {
      {1, 0, 0},          {1, 1.7e-7, 3.1e-8},   {1, -2.9e-7, 1.3e-7},
      {1, 5.3e-8, -4.1e-7}, {1, 3.7e-7, 7.9e-7}, {1, -6.1e-7, -2.3e-7},
      {1, 9.7e-7, -8.9e-8}, {1, -4.3e-8, 6.7e-7},
  };
  const double span = norm(hi_ - lo_) + 1.0;
  std::vector<Hit> hits;
  for (const auto& j : jitters) {
    const Vec3 dir = normalized(j);
    const bool clean = segment_hits(p, dir, span, hits);
    if (!clean) continue;
    return (hits.size() % 2 == 1) ? Domain::solute : Domain::solvent;
  }
  fail(ErrorKind::geometry, "TriangulatedSurface: ray casting degenerate for all jitters");
}

std::optional<Crossing> TriangulatedSurface::cross(const Vec3& a, const Vec3& b, Domain da,
                                                   Domain db) const {
  (void)db;
  const Vec3 d = b - a;
  std::vector<Hit> hits;
  segment_hits(a, d, 1.0, hits); // degenerate hits are still usable here
  if (hits.empty()) return std::nullopt;
  std::sort(hits.begin(), hits.end(), [](const Hit& l, const Hit& r) { return l.t < r.t; });
  const Hit pick = (da == Domain::solute) ? hits.front() : hits.back();

  const auto& t = triangles_[pick.tri];
  Crossing c;
  c.location = a + d * std::clamp(pick.t, 0.0, 1.0);
  if (!vertex_normals_.empty()) {
    const double w0 = 1.0 - pick.u - pick.v;
    c.normal = normalized(vertex_normals_[static_cast<std::size_t>(t[0])] * w0 +
                          vertex_normals_[static_cast<std::size_t>(t[1])] * pick.u +
                          vertex_normals_[static_cast<std::size_t>(t[2])] * pick.v);
  } else {
    c.normal = normalized(pbsolv::cross(vertices_[static_cast<std::size_t>(t[1])] -
                                    vertices_[static_cast<std::size_t>(t[0])],
                                vertices_[static_cast<std::size_t>(t[2])] -
                                    vertices_[static_cast<std::size_t>(t[0])]));
  }
  c.subgrid_feature = hits.size() > 1;
  return c;
}

TriangulatedSurface load_off_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse, "cannot open " + path);
  auto next_content_line = [&](std::string& line) {
    while (std::getline(in, line)) {
      const auto pos = line.find_first_not_of(" \t\r\n");
      if (pos != std::string::npos && line[pos] != '#') return true;
    }
    return false;
  };
  std::string line;
  if (!next_content_line(line)) fail(ErrorKind::parse, path + ": empty mesh file");
  {
    std::istringstream hs(line);
    std::string tag;
    hs >> tag;
    if (tag == "OFF") {
      if (!next_content_line(line)) fail(ErrorKind::parse, path + ": bad OFF header");
    }
  }
  std::size_t nv = 0, nt = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> nv >> nt)) fail(ErrorKind::parse, path + ": bad mesh header");
    // optional edge count on the same line is ignored
  }

  std::vector<Vec3> verts(nv);
  std::vector<Vec3> normals;
  for (std::size_t i = 0; i < nv; ++i) {
    if (!next_content_line(line)) fail(ErrorKind::parse, path + ": truncated vertex list");
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) fail(ErrorKind::parse, path + ": bad vertex line");
    verts[i] = {x, y, z};
    double nx, ny, nz;
    if (ls >> nx >> ny >> nz) {
      normals.resize(nv);
      normals[i] = {nx, ny, nz};
    }
  }
  std::vector<std::array<int, 3>> tris(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    int cnt, a, b, c;
    if (!(in >> cnt >> a >> b >> c) || cnt != 3)
      fail(ErrorKind::parse, path + ": bad triangle line (triangles only)");
    tris[i] = {a, b, c};
  }
  return TriangulatedSurface(std::move(verts), std::move(tris), std::move(normals));
}

} // namespace pbsolv
