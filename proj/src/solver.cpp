#include "pbsolv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace pbsolv {

namespace {

double dot_v(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_v(const std::vector<double>& a) { return std::sqrt(dot_v(a, a)); }

struct JacobiPrecond {
  std::vector<double> inv_diag;
  explicit JacobiPrecond(const CsrMatrix& m) {
    inv_diag.resize(static_cast<std::size_t>(m.n));
    for (std::int64_t r = 0; r < m.n; ++r) {
      const double d = m.diagonal(r);
      if (d == 0.0) fail(ErrorKind::solver, "jacobi preconditioner: zero diagonal");
      inv_diag[static_cast<std::size_t>(r)] = 1.0 / d;
    }
  }
  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    z.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] * inv_diag[i];
  }
};

// ILU(0): incomplete LU on the matrix sparsity pattern, IKJ ordering.
struct Ilu0Precond {
  CsrMatrix f; // combined L (unit diagonal, strictly lower) and U factors
  std::vector<std::int64_t> diag_pos;

  explicit Ilu0Precond(const CsrMatrix& m) : f(m) {
    const auto n = static_cast<std::size_t>(f.n);
    diag_pos.assign(n, -1);
    for (std::size_t r = 0; r < n; ++r)
      for (std::int64_t k = f.row_ptr[r]; k < f.row_ptr[r + 1]; ++k)
        if (f.col[static_cast<std::size_t>(k)] == static_cast<std::int64_t>(r))
          diag_pos[r] = k;
    for (std::size_t r = 0; r < n; ++r)
      if (diag_pos[r] < 0) fail(ErrorKind::solver, "ilu0: missing diagonal entry");

    std::vector<double> work(n, 0.0);
    std::vector<std::int64_t> pos(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::int64_t k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) {
        pos[static_cast<std::size_t>(f.col[static_cast<std::size_t>(k)])] = k;
        work[static_cast<std::size_t>(f.col[static_cast<std::size_t>(k)])] =
            f.val[static_cast<std::size_t>(k)];
      }
      for (std::int64_t k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) {
        const auto kcol = static_cast<std::size_t>(f.col[static_cast<std::size_t>(k)]);
        if (kcol >= i) break; // columns sorted
        const double ukk = f.val[static_cast<std::size_t>(diag_pos[kcol])];
        if (ukk == 0.0) fail(ErrorKind::solver, "ilu0: zero pivot");
        const double lik = work[kcol] / ukk;
        work[kcol] = lik;
        for (std::int64_t j = diag_pos[kcol] + 1; j < f.row_ptr[kcol + 1]; ++j) {
          const auto jcol = static_cast<std::size_t>(f.col[static_cast<std::size_t>(j)]);
          if (pos[jcol] >= 0) work[jcol] -= lik * f.val[static_cast<std::size_t>(j)];
        }
      }
      for (std::int64_t k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) {
        const auto kcol = static_cast<std::size_t>(f.col[static_cast<std::size_t>(k)]);
        f.val[static_cast<std::size_t>(k)] = work[kcol];
        work[kcol] = 0.0;
        pos[kcol] = -1;
      }
    }
  }

  void apply(const std::vector<double>& r, std::vector<double>& z) const {
    const auto n = static_cast<std::size_t>(f.n);
    z.assign(n, 0.0);
    // L y = r (unit diagonal)
    for (std::size_t i = 0; i < n; ++i) {
      double s = r[i];
      for (std::int64_t k = f.row_ptr[i]; k < diag_pos[i]; ++k)
        s -= f.val[static_cast<std::size_t>(k)] *
             z[static_cast<std::size_t>(f.col[static_cast<std::size_t>(k)])];
      z[i] = s;
    }
    // U x = y
    for (std::size_t ii = n; ii-- > 0;) {
      double s = z[ii];
      for (std::int64_t k = diag_pos[ii] + 1; k < f.row_ptr[ii + 1]; ++k)
        s -= f.val[static_cast<std::size_t>(k)] *
             z[static_cast<std::size_t>(f.col[static_cast<std::size_t>(k)])];
      z[ii] = s / f.val[static_cast<std::size_t>(diag_pos[ii])];
    }
  }
};

} // namespace

void equilibrate_rows(SparseSystem& system) {
  std::vector<double> diag(static_cast<std::size_t>(system.n), 0.0);
  for (const auto& t : system.triplets)
    if (t.row == t.col) diag[static_cast<std::size_t>(t.row)] += t.value;
  for (std::size_t r = 0; r < diag.size(); ++r)
    if (diag[r] == 0.0) fail(ErrorKind::solver, "equilibrate_rows: zero diagonal");
  for (auto& t : system.triplets) t.value /= diag[static_cast<std::size_t>(t.row)];
  for (std::size_t r = 0; r < system.rhs.size(); ++r) system.rhs[r] /= diag[r];
}

Preconditioner parse_preconditioner(const std::string& name) {
  if (name == "jacobi") return Preconditioner::jacobi;
  if (name == "ilu") return Preconditioner::ilu;
  if (name == "none") return Preconditioner::none;
  fail(ErrorKind::config, "unknown preconditioner: " + name);
}

std::string preconditioner_name(Preconditioner p) {
  switch (p) {
    case Preconditioner::jacobi: return "jacobi";
    case Preconditioner::ilu: return "ilu";
    case Preconditioner::none: return "none";
  }
  return "?";
}

SolveResult solve(const SparseSystem& system, const SolverConfig& config) {
  if (system.n <= 0) fail(ErrorKind::solver, "solve: empty system");
  if (system.rhs.size() != static_cast<std::size_t>(system.n))
    fail(ErrorKind::solver, "solve: rhs size mismatch");
  if (!(config.rel_tolerance > 0.0 && config.rel_tolerance < 1.0))
    fail(ErrorKind::solver, "solve: rel_tolerance must lie in (0,1)");

  const auto n = static_cast<std::size_t>(system.n);
  SolveResult res;
  res.x.assign(n, 0.0);

  const double bnorm = norm_v(system.rhs);
  if (bnorm == 0.0) {
    // Homogeneous system: uniqueness gives the zero vector directly.
    res.diagnostics.converged = true;
    return res;
  }

  const CsrMatrix A = CsrMatrix::from_triplets(system.n, system.triplets);
  for (std::int64_t r = 0; r < A.n; ++r)
    if (A.diagonal(r) == 0.0) fail(ErrorKind::solver, "solve: zero diagonal row");

  std::unique_ptr<JacobiPrecond> jac;
  std::unique_ptr<Ilu0Precond> ilu;
  if (config.precond == Preconditioner::jacobi) jac = std::make_unique<JacobiPrecond>(A);
  if (config.precond == Preconditioner::ilu) ilu = std::make_unique<Ilu0Precond>(A);
  auto precond = [&](const std::vector<double>& r, std::vector<double>& z) {
    if (jac) jac->apply(r, z);
    else if (ilu) ilu->apply(r, z);
    else z = r;
  };

  const std::int64_t max_iter =
      config.max_iterations > 0 ? config.max_iterations : 10 * system.n;

  // Diagonally scaled initial guess. Besides being a reasonable start, it
  // zeroes the residual on identity (Dirichlet) rows, whose structure can
  // otherwise make the initial shadow vector orthogonal to the whole Krylov
  // space (rho = 0 serious breakdown).
  for (std::int64_t i = 0; i < system.n; ++i)
    res.x[static_cast<std::size_t>(i)] =
        system.rhs[static_cast<std::size_t>(i)] / A.diagonal(i);

  std::vector<double> r(n), rhat(n), p(n), v(n), s(n), t(n), phat(n), shat(n), tmp(n);
  auto& hist = res.diagnostics.residual_history;

  auto true_residual = [&](const std::vector<double>& x) {
    A.multiply(x, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = system.rhs[i] - tmp[i];
    return norm_v(tmp) / bnorm;
  };

  double best_res = std::numeric_limits<double>::infinity();
  std::vector<double> best_x = res.x;
  std::int64_t it = 0;

  auto give_up = [&](const std::string& why) -> void {
    res.x = best_x;
    res.diagnostics.iterations = it;
    res.diagnostics.final_relative_residual = true_residual(best_x);
    res.diagnostics.converged = false;
    std::ostringstream msg;
    msg << "bicgstab " << why << " after " << it << " iterations; best residual " << best_res;
    throw SolverFailure(msg.str(), res);
  };

  // Outer loop restarts the Krylov recurrence with a fresh shadow vector
  // after a breakdown and re-checks the true residual after convergence of
  // the recurrence one. Each pass advances `it`, so max_iter bounds it.
  while (true) {
    A.multiply(res.x, tmp);
    for (std::size_t i = 0; i < n; ++i) r[i] = system.rhs[i] - tmp[i];
    rhat = r;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double resid = norm_v(r) / bnorm;
    if (hist.empty()) hist.push_back(resid);
    if (resid < best_res) { best_res = resid; best_x = res.x; }

    bool breakdown_hit = false;
    while (resid > config.rel_tolerance && it < max_iter) {
      ++it;
      const double rho_new = dot_v(rhat, r);
      if (!std::isfinite(rho_new) || std::fabs(rho_new) < 1e-300 * bnorm * bnorm) {
        breakdown_hit = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      precond(p, phat);
      A.multiply(phat, v);
      const double rv = dot_v(rhat, v);
      if (!std::isfinite(rv) || std::fabs(rv) < 1e-300 * bnorm * bnorm) {
        breakdown_hit = true;
        break;
      }
      alpha = rho / rv;
      for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
      const double snorm = norm_v(s) / bnorm;
      if (snorm <= config.rel_tolerance) {
        for (std::size_t i = 0; i < n; ++i) res.x[i] += alpha * phat[i];
        resid = snorm;
        hist.push_back(resid);
        if (resid < best_res) { best_res = resid; best_x = res.x; }
        break;
      }
      precond(s, shat);
      A.multiply(shat, t);
      const double tt = dot_v(t, t);
      if (!std::isfinite(tt) || tt < 1e-300) { breakdown_hit = true; break; }
      omega = dot_v(t, s) / tt;
      for (std::size_t i = 0; i < n; ++i) res.x[i] += alpha * phat[i] + omega * shat[i];
      for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
      resid = norm_v(r) / bnorm;
      hist.push_back(resid);
      if (resid < best_res) { best_res = resid; best_x = res.x; }
    }

    if (it >= max_iter && resid > config.rel_tolerance)
      give_up(breakdown_hit ? "breakdown" : "did not converge");
    if (breakdown_hit) continue; // restart with a fresh shadow vector

    // Contract is on the recomputed residual, not the recurrence one.
    const double tr = true_residual(res.x);
    if (tr <= config.rel_tolerance) {
      res.diagnostics.iterations = it;
      res.diagnostics.final_relative_residual = tr;
      res.diagnostics.converged = true;
      return res;
    }
    if (it >= max_iter) give_up("stagnated (true residual above tolerance)");
  }
}

} // namespace pbsolv
