#include "linbpi/linalg.hpp"

#include <cmath>
#include <cstdlib>

#include "linbpi/kernels.hpp"

namespace linbpi {

namespace {
constexpr double kCondLimit = 1e12;
}

Cholesky::Cholesky(const Mat& a) {
  const std::size_t n = a.rows;
  if (a.cols != n) throw SingularMatrix("cholesky: matrix not square");
  l_ = Mat(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j; i < n; ++i) {
      double s = a(i, j) - kern::ops().dot(l_.row(i), l_.row(j), j);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s))
          throw SingularMatrix("cholesky: non-positive pivot at column " +
                               std::to_string(j));
        l_(j, j) = std::sqrt(s);
      } else {
        l_(i, j) = s / l_(j, j);
      }
    }
  }
  // Explicit inverse by n triangular solve pairs; doubles as the data for the
  // condition estimate. Cheap at these sizes and several callers want it.
  inv_ = Mat(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    e.assign(n, 0.0);
    e[k] = 1.0;
    std::vector<double> col = solve(std::move(e));
    for (std::size_t i = 0; i < n; ++i) inv_(i, k) = col[i];
  }
  cond1_ = norm1(a) * norm1(inv_);
  if (!(cond1_ < kCondLimit))
    throw SingularMatrix("cholesky: condition estimate " +
                         std::to_string(cond1_) + " exceeds 1e12");
}

std::vector<double> Cholesky::solve(std::vector<double> b) const {
  const std::size_t n = l_.rows;
  // L y = b
  for (std::size_t i = 0; i < n; ++i)
    b[i] = (b[i] - kern::ops().dot(l_.row(i), b.data(), i)) / l_(i, i);
  // L^T x = y
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * b[k];
    b[i] = s / l_(i, i);
  }
  return b;
}

double Cholesky::quad_form_inv(const double* x, std::size_t n) const {
  // x^T A^{-1} x = || L^{-1} x ||^2
  std::vector<double> y(x, x + n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = (y[i] - kern::ops().dot(l_.row(i), y.data(), i)) / l_(i, i);
    acc += y[i] * y[i];
  }
  return acc;
}

Mat mat_mul(const Mat& a, const Mat& b) {
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k)
      kern::ops().axpy(a(i, k), b.row(k), c.row(i), b.cols);
  return c;
}

std::vector<double> mat_vec(const Mat& a, const std::vector<double>& x) {
  std::vector<double> y(a.rows, 0.0);
  kern::ops().matvec(a.a.data(), x.data(), y.data(), a.rows, a.cols);
  return y;
}

double quad_form(const Mat& a, const double* x) {
  return kern::ops().quad_form(a.a.data(), x, a.rows);
}

double norm1(const Mat& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) s += std::abs(a(i, j));
    if (s > best) best = s;
  }
  return best;
}

double norm2(const std::vector<double>& x) {
  return std::sqrt(kern::ops().dot(x.data(), x.data(), x.size()));
}

std::vector<double> solve_linear(Mat a, std::vector<double> b) {
  const std::size_t n = a.rows;
  if (a.cols != n || b.size() != n)
    throw SingularMatrix("solve_linear: shape mismatch");
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (std::abs(a(p, k)) < 1e-14)
      throw SingularMatrix("solve_linear: pivot underflow at column " +
                           std::to_string(k));
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(k, j));
      std::swap(b[p], b[k]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      kern::ops().axpy(-f, a.row(k) + k + 1, a.row(i) + k + 1, n - k - 1);
      a(i, k) = 0.0;
      b[i] -= f * b[k];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i] - kern::ops().dot(a.row(i) + i + 1, b.data() + i + 1,
                                      n - i - 1);
    b[i] = s / a(i, i);
  }
  return b;
}

}  // namespace linbpi
