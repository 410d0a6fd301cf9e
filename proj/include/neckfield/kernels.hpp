#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

// Vector kernels used by the sparse solver inner loops. Scalar versions are
// the reference semantics; the AVX2/NEON variants must match them up to
// floating-point reassociation and are selected at runtime.

namespace neckfield::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string backend_name(Backend b);

// Backends usable on this host with this build.
std::vector<Backend> supported_backends();

Backend active_backend();

// Switch the dispatch table. Returns false (and leaves the table unchanged)
// if the backend is not supported here.
bool set_backend(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double nrm2(const double* x, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// y = x + beta * y  (conjugate-gradient direction update)
void xpby(const double* x, double beta, double* y, std::size_t n);

// y = A x for CSR(rowptr, col, val) with nrows rows.
void csr_spmv(const std::int32_t* rowptr, const std::int32_t* col,
              const double* val, std::size_t nrows,
              const double* x, double* y);

}  // namespace neckfield::kernels
