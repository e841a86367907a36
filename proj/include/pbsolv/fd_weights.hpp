#pragma once

#include <vector>
#include <array>

#include "pbsolv/vec3.hpp"

namespace pbsolv {

// Finite-difference / interpolation weights on arbitrary 1-D nodes.
// weights[j] multiplies the value at nodes[j]; the combination approximates
// the derivative of the given order at `point` (order 0 = interpolation),
// exact for polynomials up to degree nodes.size()-1.
struct FDWeights {
  std::vector<double> nodes;
  double point = 0.0;
  int derivative_order = 0;
  std::vector<double> weights;
};

// Fornberg's algorithm. Throws a degeneracy error on duplicate nodes.
FDWeights fd_weights(const std::vector<double>& nodes, double point, int order);

// Orthonormal frame at an interface intersection. `rotation` rows are
// (normal, tangent1, tangent2) so it maps Cartesian components to local ones.
struct LocalFrame {
  Vec3 normal;
  Vec3 tangent1;
  Vec3 tangent2;
  std::array<std::array<double, 3>, 3> rotation;
};

// Deterministic tangent choice: t1 = normalize(n x e_k) with e_k the
// coordinate axis least aligned with n, t2 = n x t1.
LocalFrame local_frame(const Vec3& normal);

} // namespace pbsolv
