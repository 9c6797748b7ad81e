#pragma once

#include <cstddef>

// Dense vector micro-kernels used by every hot loop (Gram updates, batch
// quadratic forms, plug-in value iteration). Two implementations: a scalar
// reference and an AVX2+FMA variant compiled in its own TU. Selection happens
// once at runtime: LINBPI_KERNELS=scalar|avx2 overrides, otherwise cpuid
// decides. All kernels are pure and allocation-free.

namespace linbpi::kern {

struct Ops {
  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a*x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x *= a
  void (*scale)(double a, double* x, std::size_t n);
  // y[r] = A[r,:] . x   for row-major A (m x n)
  void (*matvec)(const double* a, const double* x, double* y, std::size_t m,
                 std::size_t n);
  // x^T A x, A row-major symmetric (n x n)
  double (*quad_form)(const double* a, const double* x, std::size_t n);
  // A += c * x x^T, full square, row-major
  void (*rank1_update)(double* a, const double* x, double c, std::size_t n);
  const char* name;
};

const Ops& scalar_ops();
// nullptr when the AVX2 TU is not built or the cpu lacks avx2+fma.
const Ops* avx2_ops();

// Runtime-selected implementation (env override applied on first call).
const Ops& ops();

}  // namespace linbpi::kern
