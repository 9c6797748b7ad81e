#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace linbpi {

// Row-major dense matrix. Everything here is tiny (d <= ~16, S <= ~64), so
// the layer favors clarity + the kernel entry points over blocking tricks.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return a[i * cols + j];
  }
  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

struct SingularMatrix : std::runtime_error {
  explicit SingularMatrix(const std::string& what)
      : std::runtime_error(what) {}
};

// SPD factorization A = L L^T with a 1-norm condition guard: construction
// throws SingularMatrix on a non-positive pivot or cond_1 estimate > 1e12.
class Cholesky {
 public:
  explicit Cholesky(const Mat& a);

  std::size_t dim() const { return l_.rows; }
  // Solve A x = b.
  std::vector<double> solve(std::vector<double> b) const;
  // x^T A^{-1} x  (via one forward substitution; no inverse materialized).
  double quad_form_inv(const double* x, std::size_t n) const;
  const Mat& inverse() const { return inv_; }
  double cond1() const { return cond1_; }

 private:
  Mat l_;
  Mat inv_;
  double cond1_ = 0.0;
};

Mat mat_mul(const Mat& a, const Mat& b);
std::vector<double> mat_vec(const Mat& a, const std::vector<double>& x);
// x^T A x for symmetric A.
double quad_form(const Mat& a, const double* x);
double norm1(const Mat& a);
double norm2(const std::vector<double>& x);

// General square solve via partial-pivot elimination (policy evaluation uses
// this on I - gamma * P_pi, which is not symmetric).
std::vector<double> solve_linear(Mat a, std::vector<double> b);

}  // namespace linbpi
