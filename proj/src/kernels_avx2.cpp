#include "linbpi/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace linbpi::kern {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double v_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

void v_axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void v_scale(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void v_matvec(const double* a, const double* x, double* y, std::size_t m,
              std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) y[r] = v_dot(a + r * n, x, n);
}

double v_quad_form(const double* a, const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) acc += x[r] * v_dot(a + r * n, x, n);
  return acc;
}

void v_rank1_update(double* a, const double* x, double c, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) v_axpy(c * x[r], x, a + r * n, n);
}

}  // namespace

const Ops& avx2_ops_impl() {
  static const Ops ops{v_dot,       v_axpy,          v_scale, v_matvec,
                       v_quad_form, v_rank1_update, "avx2"};
  return ops;
}

}  // namespace linbpi::kern

#endif  // __AVX2__ && __FMA__
