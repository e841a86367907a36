#include "pbsolv/fd_weights.hpp"

#include <cmath>
#include <cstddef>

#include "pbsolv/errors.hpp"

namespace pbsolv {

FDWeights fd_weights(const std::vector<double>& nodes, double point, int order) {
  const std::size_t n = nodes.size();
  if (n == 0) fail(ErrorKind::degeneracy, "fd_weights: empty node set");
  if (order < 0 || static_cast<std::size_t>(order) >= n)
    fail(ErrorKind::degeneracy, "fd_weights: derivative order must be < node count");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (nodes[i] == nodes[j]) fail(ErrorKind::degeneracy, "fd_weights: duplicate nodes");

  // Fornberg recursion, all orders 0..order at once.
  const int m = order;
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - point;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = static_cast<int>(std::min<std::size_t>(i, m));
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - point;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }

  FDWeights w;
  w.nodes = nodes;
  w.point = point;
  w.derivative_order = order;
  w.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.weights[i] = c[i][m];
  return w;
}

LocalFrame local_frame(const Vec3& n) {
  const double len = norm(n);
  if (len < 1e-12) fail(ErrorKind::geometry, "local_frame: zero normal");
  if (std::fabs(len - 1.0) > 1e-9)
    fail(ErrorKind::geometry, "local_frame: normal is not unit length");

  // Axis least aligned with n; ties resolved toward the higher axis index
  // so that n = e_x yields t1 = e_y, t2 = e_z.
  const double a[3] = {std::fabs(n.x), std::fabs(n.y), std::fabs(n.z)};
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (a[i] <= a[k]) k = i;
  Vec3 ek{0, 0, 0};
  ek[static_cast<std::size_t>(k)] = 1.0;

  LocalFrame f;
  f.normal = n / len;
  f.tangent1 = normalized(cross(ek, f.normal));
  f.tangent2 = cross(f.normal, f.tangent1);
  f.rotation = {{{f.normal.x, f.normal.y, f.normal.z},
                 {f.tangent1.x, f.tangent1.y, f.tangent1.z},
                 {f.tangent2.x, f.tangent2.y, f.tangent2.z}}};
  return f;
}

} // namespace pbsolv
