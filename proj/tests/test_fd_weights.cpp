#include "doctest.h"

#include <cmath>
#include <random>

#include "pbsolv/errors.hpp"
#include "pbsolv/fd_weights.hpp"

using namespace pbsolv;

TEST_CASE("collocation weights at a node") {
  const double h = 0.37;
  const auto w = fd_weights({-h, 0.0, h}, 0.0, 0);
  CHECK(w.weights[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(w.weights[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w.weights[2] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("central difference") {
  const double h = 0.25;
  const auto w = fd_weights({-h, 0.0, h}, 0.0, 1);
  CHECK(w.weights[0] == doctest::Approx(-1.0 / (2 * h)).epsilon(1e-13));
  CHECK(w.weights[1] == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(w.weights[2] == doctest::Approx(1.0 / (2 * h)).epsilon(1e-13));
}

TEST_CASE("off-node interpolation weights") {
  // direct Lagrange evaluation at 0.5 on nodes {-1, 0, 1}
  const auto w = fd_weights({-1.0, 0.0, 1.0}, 0.5, 0);
  CHECK(w.weights[0] == doctest::Approx(-0.125).epsilon(1e-14));
  CHECK(w.weights[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(w.weights[2] == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("weight sums: 1 for order 0, 0 for higher orders") {
  const std::vector<double> nodes{-1.3, -0.2, 0.4, 1.7, 2.9};
  for (int order = 0; order <= 3; ++order) {
    const auto w = fd_weights(nodes, 0.13, order);
    double s = 0.0;
    for (double x : w.weights) s += x;
    CHECK(s == doctest::Approx(order == 0 ? 1.0 : 0.0).epsilon(1e-11));
  }
}

TEST_CASE("polynomial exactness up to degree n-1") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> nodes;
    while (nodes.size() < 4) {
      const double c = uni(rng);
      bool dup = false;
      for (double n : nodes)
        if (std::fabs(n - c) < 1e-3) dup = true;
      if (!dup) nodes.push_back(c);
    }
    const double at = uni(rng);
    for (int order = 0; order <= 2; ++order) {
      const auto w = fd_weights(nodes, at, order);
      for (int p = 0; p < 4; ++p) {
        double approx = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q)
          approx += w.weights[q] * std::pow(nodes[q], p);
        // exact derivative of x^p at `at`
        double exact = 0.0;
        if (order == 0) exact = std::pow(at, p);
        if (order == 1) exact = p >= 1 ? p * std::pow(at, p - 1) : 0.0;
        if (order == 2) exact = p >= 2 ? p * (p - 1) * std::pow(at, p - 2) : 0.0;
        CHECK(approx == doctest::Approx(exact).epsilon(1e-10).scale(std::max(1.0, std::fabs(exact))));
      }
    }
  }
}

TEST_CASE("duplicate nodes rejected") {
  CHECK_THROWS_AS((void)fd_weights({0.0, 1.0, 0.0}, 0.5, 0), Error);
}

TEST_CASE("local frame: axis case matches the convention") {
  const auto f = local_frame({1, 0, 0});
  CHECK(f.tangent1.x == doctest::Approx(0.0));
  CHECK(f.tangent1.y == doctest::Approx(1.0));
  CHECK(f.tangent1.z == doctest::Approx(0.0));
  CHECK(f.tangent2.x == doctest::Approx(0.0));
  CHECK(f.tangent2.y == doctest::Approx(0.0));
  CHECK(f.tangent2.z == doctest::Approx(1.0));
}

TEST_CASE("local frame: orthonormal with det +1 for z axis") {
  const auto f = local_frame({0, 0, 1});
  CHECK(std::fabs(dot(f.normal, f.tangent1)) < 1e-14);
  CHECK(std::fabs(dot(f.normal, f.tangent2)) < 1e-14);
  CHECK(std::fabs(dot(f.tangent1, f.tangent2)) < 1e-14);
  CHECK(dot(f.normal, cross(f.tangent1, f.tangent2)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("local frame: random normals give orthonormal rotations") {
  std::mt19937 rng(11);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 10000; ++trial) {
    Vec3 n{gauss(rng), gauss(rng), gauss(rng)};
    if (norm(n) < 1e-6) continue;
    n = normalized(n);
    const auto f = local_frame(n);
    // rotation * rotation^T deviates from identity below 1e-12
    const Vec3 rows[3] = {f.normal, f.tangent1, f.tangent2};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        const double v = dot(rows[r], rows[c]);
        CHECK(std::fabs(v - (r == c ? 1.0 : 0.0)) < 1e-12);
      }
  }
}

TEST_CASE("local frame rejects zero and non-unit normals") {
  CHECK_THROWS_AS((void)local_frame({0, 0, 0}), Error);
  CHECK_THROWS_AS((void)local_frame({0.5, 0, 0}), Error);
}
