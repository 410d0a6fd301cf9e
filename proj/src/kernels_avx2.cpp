#include "kernels_impl.hpp"

// Built with -mavx2 -mfma when the compiler supports it; the rest of the
// library stays on the baseline ISA. Entry is gated on a runtime CPU probe.

#if defined(__AVX2__) && (defined(__x86_64__) || defined(__i386__))
#define NECKFIELD_HAVE_AVX2 1
#include <immintrin.h>
#endif

namespace neckfield::kernels::detail {

#if NECKFIELD_HAVE_AVX2

namespace {

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sw = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby_avx2(const double* x, double beta, double* y, std::size_t n) {
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(vb, vy, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void csr_spmv_avx2(const std::int32_t* rowptr, const std::int32_t* col,
                   const double* val, std::size_t nrows,
                   const double* x, double* y) {
  for (std::size_t r = 0; r < nrows; ++r) {
    const std::int32_t begin = rowptr[r];
    const std::int32_t end = rowptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    std::int32_t k = begin;
    for (; k + 4 <= end; k += 4) {
      __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(col + k));
      __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(val + k), xv, acc);
    }
    double s = hsum(acc);
    for (; k < end; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

}  // namespace

const VTable* avx2_table() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma"))
    return nullptr;
  static const VTable t{dot_avx2, axpy_avx2, xpby_avx2, csr_spmv_avx2};
  return &t;
}

#else

const VTable* avx2_table() { return nullptr; }

#endif

}  // namespace neckfield::kernels::detail
