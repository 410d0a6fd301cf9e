#include "kernels_impl.hpp"

// NEON variants for aarch64 builds. On other targets this unit compiles to a
// null table and the dispatcher never offers the backend.

#if defined(__aarch64__)
#define NECKFIELD_HAVE_NEON 1
#include <arm_neon.h>
#endif

namespace neckfield::kernels::detail {

#if NECKFIELD_HAVE_NEON

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby_neon(const double* x, double beta, double* y, std::size_t n) {
  const float64x2_t vb = vdupq_n_f64(beta);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), vb, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void csr_spmv_neon(const std::int32_t* rowptr, const std::int32_t* col,
                   const double* val, std::size_t nrows,
                   const double* x, double* y) {
  for (std::size_t r = 0; r < nrows; ++r) {
    double s = 0.0;
    for (std::int32_t k = rowptr[r]; k < rowptr[r + 1]; ++k)
      s += val[k] * x[col[k]];
    y[r] = s;
  }
}

}  // namespace

const VTable* neon_table() {
  static const VTable t{dot_neon, axpy_neon, xpby_neon, csr_spmv_neon};
  return &t;
}

#else

const VTable* neon_table() { return nullptr; }

#endif

}  // namespace neckfield::kernels::detail
