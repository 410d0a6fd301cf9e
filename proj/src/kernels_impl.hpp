#pragma once

#include <cstddef>
#include <cstdint>

// Internal kernel tables. Each ISA-specific translation unit fills one of
// these; kernels.cpp owns dispatch.

namespace neckfield::kernels::detail {

struct VTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*xpby)(const double*, double, double*, std::size_t);
  void (*csr_spmv)(const std::int32_t*, const std::int32_t*, const double*,
                   std::size_t, const double*, double*);
};

const VTable& scalar_table();

// Null when the build or the host cannot run the ISA.
const VTable* avx2_table();
const VTable* neon_table();

}  // namespace neckfield::kernels::detail
