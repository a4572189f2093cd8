#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "coop/numerics/tensor.hpp"

namespace coop {

/// Singular, badly conditioned, or otherwise unsolvable system.
class LinearSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxConditionEstimate = 1e12;

/// PA = LU with partial pivoting; L has a unit diagonal and shares storage with U.
struct LuFactorization {
  Tensor lu;
  std::vector<std::size_t> perm;  // row i of PA is row perm[i] of A

  std::size_t dim() const { return perm.size(); }

  /// Solves A x = b for every column of b (n x m).
  Tensor solve(const Tensor& b) const {
    const std::size_t n = dim(), m = b.cols();
    Tensor x = Tensor::matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) x(i, j) = b(perm[i], j);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < i; ++k) {
        const double l = lu(i, k);
        if (l == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) x(i, j) -= l * x(k, j);
      }
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t k = i + 1; k < n; ++k) {
        const double u = lu(i, k);
        if (u == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) x(i, j) -= u * x(k, j);
      }
      for (std::size_t j = 0; j < m; ++j) x(i, j) /= lu(i, i);
    }
    return x;
  }

  /// Solves A^T x = b for a single column b.
  std::vector<double> solve_transposed(const std::vector<double>& b) const {
    const std::size_t n = dim();
    // A^T = U^T L^T P, so solve U^T z = b, L^T w = z, x = P^T w.
    std::vector<double> z(b);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < i; ++k) z[i] -= lu(k, i) * z[k];
      z[i] /= lu(i, i);
    }
    for (std::size_t i = n; i-- > 0;)
      for (std::size_t k = i + 1; k < n; ++k) z[i] -= lu(k, i) * z[k];
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm[i]] = z[i];
    return x;
  }
};

inline LuFactorization lu_factor(const Tensor& a) {
  if (a.rank() != 2 || a.rows() != a.cols()) throw ShapeError("lu_factor: matrix must be square");
  const std::size_t n = a.rows();
  LuFactorization f{a, std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  Tensor& m = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(m(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(m(i, k)) > best) {
        best = std::abs(m(i, k));
        p = i;
      }
    }
    if (best == 0.0) throw LinearSolveError("singular matrix (zero pivot in column " + std::to_string(k) + ")");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
      std::swap(f.perm[k], f.perm[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = m(i, k) / m(k, k);
      m(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
    }
  }
  return f;
}

inline double norm1(const Tensor& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

/// Estimate of the 1-norm condition number from an LU factorization
/// (Hager's method with Higham's alternative test vector).
inline double condition_estimate_1(const Tensor& a, const LuFactorization& f) {
  const std::size_t n = f.dim();
  if (n == 0) return 1.0;
  auto solve_vec = [&](const std::vector<double>& v) {
    Tensor b = Tensor::column(v);
    return f.solve(b).storage();
  };
  auto l1 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  };
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  double est = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    std::vector<double> y = solve_vec(x);
    const double ny = l1(y);
    if (iter > 0 && ny <= est) break;
    est = ny;
    std::vector<double> xi(n);
    for (std::size_t i = 0; i < n; ++i) xi[i] = y[i] >= 0.0 ? 1.0 : -1.0;
    std::vector<double> z = f.solve_transposed(xi);
    std::size_t j = 0;
    double zx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(z[i]) > std::abs(z[j])) j = i;
      zx += z[i] * x[i];
    }
    if (iter > 0 && std::abs(z[j]) <= zx) break;
    std::fill(x.begin(), x.end(), 0.0);
    x[j] = 1.0;
  }
  std::vector<double> alt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = n > 1 ? 1.0 + static_cast<double>(i) / static_cast<double>(n - 1) : 1.0;
    alt[i] = (i % 2 == 0) ? mag : -mag;
  }
  est = std::max(est, 2.0 * l1(solve_vec(alt)) / (3.0 * static_cast<double>(n)));
  return norm1(a) * est;
}

/// Solves A X = B (B is n x m). Rejects singular systems and systems whose
/// condition estimate exceeds kMaxConditionEstimate.
inline Tensor linear_solve(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || a.rows() != a.cols()) throw ShapeError("linear_solve: A must be square");
  if (b.rank() != 2 || b.rows() != a.rows()) throw ShapeError("linear_solve: right-hand side length mismatch");
  a.check_finite("linear_solve input A");
  b.check_finite("linear_solve input b");
  const LuFactorization f = lu_factor(a);
  const double cond = condition_estimate_1(a, f);
  if (!(cond <= kMaxConditionEstimate)) {
    throw LinearSolveError("matrix is badly conditioned (condition estimate " + std::to_string(cond) + ")");
  }
  Tensor x = f.solve(b);
  // One step of iterative refinement.
  Tensor r = matmul(a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const Tensor dx = f.solve(r);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];

  const Tensor ax = matmul(a, x);
  const double tol = 1e-9 * (1.0 + max_abs(b));
  for (std::size_t i = 0; i < ax.size(); ++i) {
    if (!(std::abs(ax[i] - b[i]) <= tol)) {
      throw LinearSolveError("linear_solve residual above tolerance");
    }
  }
  return x.check_finite("linear_solve");
}

inline std::vector<double> linear_solve(const Tensor& a, const std::vector<double>& b) {
  return linear_solve(a, Tensor::column(b)).storage();
}

/// Solves S X = B for symmetric positive definite S.
inline Tensor cholesky_solve(const Tensor& s, const Tensor& b) {
  const std::size_t n = s.rows(), m = b.cols();
  Tensor l = Tensor::matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw LinearSolveError("matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  Tensor x = b;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < m; ++c) {
      double v = x(i, c);
      for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * x(k, c);
      x(i, c) = v / l(i, i);
    }
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t c = 0; c < m; ++c) {
      double v = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) v -= l(k, i) * x(k, c);
      x(i, c) = v / l(i, i);
    }
  return x;
}

struct RidgeProblem {
  Tensor design;   // M x D
  Tensor targets;  // M x N
  double alpha = 1.0;
  bool penalize_intercept = false;
  bool fit_intercept = true;
};

struct RidgeSolution {
  Tensor coefficients;  // D x N
  Tensor intercept;     // 1 x N, zero when no intercept is fitted
};

/// argmin_{W,b} ||X W + 1 b - Y||^2 + alpha ||W||^2 (+ alpha ||b||^2 when the
/// intercept is penalized). alpha = 0 on a rank-deficient design is an error.
inline RidgeSolution solve_ridge(const RidgeProblem& p) {
  const Tensor& x = p.design;
  const Tensor& y = p.targets;
  if (x.rank() != 2 || y.rank() != 2) throw ShapeError("solve_ridge: design and targets must be matrices");
  const std::size_t m = x.rows(), d = x.cols(), n = y.cols();
  if (m < 1 || d < 1) throw ShapeError("solve_ridge: need at least one row and one column");
  if (y.rows() != m) throw ShapeError("solve_ridge: design/targets row mismatch");
  if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) throw std::invalid_argument("solve_ridge: alpha must be finite and >= 0");
  x.check_finite("solve_ridge design");
  y.check_finite("solve_ridge targets");

  const bool center = p.fit_intercept && !p.penalize_intercept;
  const bool augment = p.fit_intercept && p.penalize_intercept;
  const std::size_t dd = augment ? d + 1 : d;

  std::vector<double> xmean(d, 0.0), ymean(n, 0.0);
  if (center) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < d; ++j) xmean[j] += x(i, j);
      for (std::size_t j = 0; j < n; ++j) ymean[j] += y(i, j);
    }
    for (auto& v : xmean) v /= static_cast<double>(m);
    for (auto& v : ymean) v /= static_cast<double>(m);
  }
  auto xv = [&](std::size_t i, std::size_t j) {
    if (j == d) return 1.0;
    return x(i, j) - xmean[j];
  };

  Tensor gram = Tensor::matrix(dd, dd);
  Tensor rhs = Tensor::matrix(dd, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t a = 0; a < dd; ++a) {
      const double xa = xv(i, a);
      for (std::size_t b = a; b < dd; ++b) gram(a, b) += xa * xv(i, b);
      for (std::size_t c = 0; c < n; ++c) rhs(a, c) += xa * (y(i, c) - ymean[c]);
    }
  }
  for (std::size_t a = 0; a < dd; ++a) {
    for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);
    gram(a, a) += p.alpha;
  }

  Tensor w;
  if (p.alpha > 0.0) {
    w = cholesky_solve(gram, rhs);
  } else {
    try {
      w = linear_solve(gram, rhs);
    } catch (const LinearSolveError& e) {
      throw LinearSolveError(std::string("solve_ridge: unregularized design is rank deficient: ") + e.what());
    }
  }

  RidgeSolution out{Tensor::matrix(d, n), Tensor::matrix(1, n)};
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t c = 0; c < n; ++c) out.coefficients(a, c) = w(a, c);
  if (augment) {
    for (std::size_t c = 0; c < n; ++c) out.intercept(0, c) = w(d, c);
  } else if (center) {
    for (std::size_t c = 0; c < n; ++c) {
      double b = ymean[c];
      for (std::size_t a = 0; a < d; ++a) b -= xmean[a] * out.coefficients(a, c);
      out.intercept(0, c) = b;
    }
  }
  out.coefficients.check_finite("solve_ridge");
  out.intercept.check_finite("solve_ridge");
  return out;
}

}  // namespace coop
