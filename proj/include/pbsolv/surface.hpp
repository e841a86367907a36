#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pbsolv/model.hpp"
#include "pbsolv/vec3.hpp"

namespace pbsolv {

enum class Domain : std::uint8_t { solute = 0, solvent = 1 };

// Points within this distance of the interface classify as solute, which
// keeps charged atoms interior under exact-arithmetic ties.
inline constexpr double kOnSurfaceTol = 1e-9;

// Crossing of the interface with a grid-edge segment.
struct Crossing {
  Vec3 location;
  Vec3 normal; // unit, pointing from solute into solvent
  bool subgrid_feature = false; // more than one boundary crossing on the edge
};

class InterfaceQuery {
public:
  virtual ~InterfaceQuery() = default;

  virtual Domain classify(const Vec3& point) const = 0;

  // Crossing on segment a->b whose endpoints carry different domain flags.
  // When several crossings exist the one nearest the solute-side endpoint is
  // returned with subgrid_feature set. nullopt means no crossing was found
  // (the caller treats that as a registration inconsistency).
  virtual std::optional<Crossing> cross(const Vec3& a, const Vec3& b, Domain da,
                                        Domain db) const = 0;

  // Tight axis-aligned bounds of the interface.
  virtual void bounds(Vec3& lo, Vec3& hi) const = 0;
};

class SphereSurface final : public InterfaceQuery {
public:
  SphereSurface(const Vec3& center, double radius);
  Domain classify(const Vec3& point) const override;
  std::optional<Crossing> cross(const Vec3& a, const Vec3& b, Domain da,
                                Domain db) const override;
  void bounds(Vec3& lo, Vec3& hi) const override;

  const Vec3& center() const { return center_; }
  double radius() const { return radius_; }

private:
  Vec3 center_;
  double radius_;
};

class UnionOfSpheres final : public InterfaceQuery {
public:
  struct Ball {
    Vec3 center;
    double radius;
  };
  explicit UnionOfSpheres(std::vector<Ball> balls);
  explicit UnionOfSpheres(const SoluteModel& model);

  Domain classify(const Vec3& point) const override;
  std::optional<Crossing> cross(const Vec3& a, const Vec3& b, Domain da,
                                Domain db) const override;
  void bounds(Vec3& lo, Vec3& hi) const override;

  std::size_t subgrid_warnings() const { return subgrid_warnings_; }

private:
  double signed_distance(const Vec3& p) const;
  std::vector<Ball> balls_;
  mutable std::size_t subgrid_warnings_ = 0;
};

// Closed triangulated surface embedded by ray-casting parity (discrete
// Jordan curve rule). Construction validates edge-manifoldness and orients
// the triangulation outward.
class TriangulatedSurface final : public InterfaceQuery {
public:
  TriangulatedSurface(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
                      std::vector<Vec3> vertex_normals = {});

  Domain classify(const Vec3& point) const override;
  std::optional<Crossing> cross(const Vec3& a, const Vec3& b, Domain da,
                                Domain db) const override;
  void bounds(Vec3& lo, Vec3& hi) const override;

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }

private:
  struct Hit {
    double t;
    std::size_t tri;
    double u, v; // barycentric inside the triangle
    bool degenerate;
  };
  bool segment_hits(const Vec3& a, const Vec3& dir, double tmax, std::vector<Hit>& hits) const;
  double distance_to_surface(const Vec3& p, double cutoff) const;

  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Vec3> vertex_normals_;
  Vec3 lo_, hi_;
};

// OFF-style mesh input: "[OFF]\n nv nt [ne]\n", nv vertex lines of 3 or 6
// numbers (position, optional normal), nt lines of "3 i j k".
TriangulatedSurface load_off_mesh(const std::string& path);

struct CartesianGrid; // grid.hpp

// Verbatim interface data aligned with one specific grid, as produced by an
// external surface generator or by export_eulerian.
struct EulerianData {
  std::vector<Domain> flags; // one per node, lexicographic node order
  struct Intersection {
    std::array<int, 3> node; // lower edge endpoint
    int axis;                // 0,1,2
    double t;                // edge parameter in [0,1]
    Vec3 normal;
  };
  std::vector<Intersection> intersections;
};

// Header must match `grid` exactly (dimension error otherwise). Normals are
// renormalized when off by more than 1e-12; beyond 1e-6 it is a format error.
EulerianData import_eulerian(const std::string& path, const CartesianGrid& grid);

} // namespace pbsolv
