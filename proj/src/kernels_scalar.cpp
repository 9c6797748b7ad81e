#include "linbpi/kernels.hpp"

namespace linbpi::kern {
namespace {

double s_dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_matvec(const double* a, const double* x, double* y, std::size_t m,
              std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) y[r] = s_dot(a + r * n, x, n);
}

double s_quad_form(const double* a, const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) acc += x[r] * s_dot(a + r * n, x, n);
  return acc;
}

void s_rank1_update(double* a, const double* x, double c, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) {
    const double cr = c * x[r];
    double* row = a + r * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += cr * x[j];
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{s_dot,       s_axpy,          s_scale, s_matvec,
                       s_quad_form, s_rank1_update, "scalar"};
  return ops;
}

}  // namespace linbpi::kern
