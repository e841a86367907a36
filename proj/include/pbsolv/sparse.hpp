#pragma once

#include <cstdint>
#include <vector>

namespace pbsolv {

// Assembled linear system in triplet form plus right-hand side.
// Duplicate (row, col) entries are summed when compressed.
struct SparseSystem {
  struct Triplet {
    std::int64_t row;
    std::int64_t col;
    double value;
  };

  std::int64_t n = 0;
  std::vector<Triplet> triplets;
  std::vector<double> rhs;

  void resize(std::int64_t size) {
    n = size;
    rhs.assign(static_cast<std::size_t>(size), 0.0);
  }
  void add(std::int64_t row, std::int64_t col, double value) {
    triplets.push_back({row, col, value});
  }
};

// Compressed sparse row matrix with sorted, deduplicated columns per row.
struct CsrMatrix {
  std::int64_t n = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int64_t> col;
  std::vector<double> val;

  static CsrMatrix from_triplets(std::int64_t n, const std::vector<SparseSystem::Triplet>& ts);

  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  double diagonal(std::int64_t row) const;
};

} // namespace pbsolv
