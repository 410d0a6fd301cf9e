#include "neckfield/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>

#include "kernels_impl.hpp"

namespace neckfield::kernels {
namespace detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby_scalar(const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void csr_spmv_scalar(const std::int32_t* rowptr, const std::int32_t* col,
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

const VTable& scalar_table() {
  static const VTable t{dot_scalar, axpy_scalar, xpby_scalar, csr_spmv_scalar};
  return t;
}

}  // namespace detail

namespace {

struct Dispatch {
  const detail::VTable* table = nullptr;
  Backend backend = Backend::Scalar;
};

Dispatch& dispatch() {
  static Dispatch d = [] {
    Dispatch init;
    init.table = &detail::scalar_table();
    init.backend = Backend::Scalar;
    if (const detail::VTable* t = detail::avx2_table()) {
      init.table = t;
      init.backend = Backend::Avx2;
    } else if (const detail::VTable* t2 = detail::neon_table()) {
      init.table = t2;
      init.backend = Backend::Neon;
    }
    if (const char* env = std::getenv("NECKFIELD_KERNELS")) {
      std::string want(env);
      if (want == "scalar") {
        init.table = &detail::scalar_table();
        init.backend = Backend::Scalar;
      } else if (want == "avx2" && detail::avx2_table()) {
        init.table = detail::avx2_table();
        init.backend = Backend::Avx2;
      } else if (want == "neon" && detail::neon_table()) {
        init.table = detail::neon_table();
        init.backend = Backend::Neon;
      }
    }
    return init;
  }();
  return d;
}

}  // namespace

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

std::vector<Backend> supported_backends() {
  std::vector<Backend> v{Backend::Scalar};
  if (detail::avx2_table()) v.push_back(Backend::Avx2);
  if (detail::neon_table()) v.push_back(Backend::Neon);
  return v;
}

Backend active_backend() { return dispatch().backend; }

bool set_backend(Backend b) {
  const detail::VTable* t = nullptr;
  switch (b) {
    case Backend::Scalar: t = &detail::scalar_table(); break;
    case Backend::Avx2: t = detail::avx2_table(); break;
    case Backend::Neon: t = detail::neon_table(); break;
  }
  if (!t) return false;
  dispatch().table = t;
  dispatch().backend = b;
  return true;
}

double dot(const double* a, const double* b, std::size_t n) {
  return dispatch().table->dot(a, b, n);
}

double nrm2(const double* x, std::size_t n) {
  return std::sqrt(dispatch().table->dot(x, x, n));
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(alpha, x, y, n);
}

void xpby(const double* x, double beta, double* y, std::size_t n) {
  dispatch().table->xpby(x, beta, y, n);
}

void csr_spmv(const std::int32_t* rowptr, const std::int32_t* col,
              const double* val, std::size_t nrows,
              const double* x, double* y) {
  dispatch().table->csr_spmv(rowptr, col, val, nrows, x, y);
}

}  // namespace neckfield::kernels
