#include "pbsolv/sparse.hpp"

#include <algorithm>
#include <numeric>

#include "pbsolv/errors.hpp"

namespace pbsolv {

CsrMatrix CsrMatrix::from_triplets(std::int64_t n, const std::vector<SparseSystem::Triplet>& ts) {
  CsrMatrix m;
  m.n = n;
  std::vector<std::size_t> order(ts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ts[a].row != ts[b].row) return ts[a].row < ts[b].row;
    return ts[a].col < ts[b].col;
  });

  m.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  m.col.reserve(ts.size());
  m.val.reserve(ts.size());
  std::int64_t cur_row = -1, cur_col = -1;
  for (std::size_t oi : order) {
    const auto& t = ts[oi];
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      fail(ErrorKind::solver, "sparse: triplet index out of range");
    if (t.row == cur_row && t.col == cur_col) {
      m.val.back() += t.value;
    } else {
      cur_row = t.row;
      cur_col = t.col;
      m.col.push_back(t.col);
      m.val.push_back(t.value);
      m.row_ptr[static_cast<std::size_t>(t.row) + 1] += 1;
    }
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(n); ++r)
    m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

void CsrMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::int64_t k = row_ptr[static_cast<std::size_t>(r)];
         k < row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
      s += val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(r)] = s;
  }
}

double CsrMatrix::diagonal(std::int64_t row) const {
  for (std::int64_t k = row_ptr[static_cast<std::size_t>(row)];
       k < row_ptr[static_cast<std::size_t>(row) + 1]; ++k)
    if (col[static_cast<std::size_t>(k)] == row) return val[static_cast<std::size_t>(k)];
  return 0.0;
}

} // namespace pbsolv
