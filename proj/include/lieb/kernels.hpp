#pragma once

// Data-parallel inner loops of the Liouvillian and hierarchy solvers. Every kernel has a
// portable scalar reference; an AVX2+FMA variant is selected at runtime when the CPU
// supports it. Both must agree to rounding (see tests/kernels_test.cpp).

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "lieb/types.hpp"

namespace lieb::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  // y += a * x
  void (*caxpy)(std::size_t n, cplx a, const cplx* x, cplx* y);
  // sum conj(x_i) y_i
  cplx (*cdotc)(std::size_t n, const cplx* x, const cplx* y);
  // sum |x_i|^2
  double (*cnorm2)(std::size_t n, const cplx* x);
  // y[dst[k]] += a * w[k] * x[src[k]]
  void (*gather_axpy)(std::size_t n, cplx a, const double* w, const std::int32_t* dst, const std::int32_t* src,
                      const cplx* x, cplx* y);
  // y[r] = sum_{k in row r} val[k] * x[col[k]]   (CSR, rows entries)
  void (*csr_matvec)(std::size_t rows, const std::int64_t* row_ptr, const std::int32_t* col, const cplx* val,
                     const cplx* x, cplx* y);
  // dst += src^T for square column-major n x n matrices
  void (*transpose_add)(std::size_t n, const cplx* src, cplx* dst);
};

const KernelTable& scalar_table();
// nullptr when the build has no AVX2 translation unit.
const KernelTable* avx2_table();

bool cpu_supports_avx2();

// The active table. Defaults to the best supported ISA; LIEB_KERNELS=scalar forces the reference.
const KernelTable& active();
void select(Isa isa);  // throws InvalidInput if the ISA is unavailable

}  // namespace lieb::kernels
