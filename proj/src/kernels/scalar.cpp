#include "lieb/kernels.hpp"

namespace lieb::kernels {

namespace {

void caxpy(std::size_t n, cplx a, const cplx* x, cplx* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

cplx cdotc(std::size_t n, const cplx* x, const cplx* y) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

double cnorm2(std::size_t n, const cplx* x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return acc;
}

void gather_axpy(std::size_t n, cplx a, const double* w, const std::int32_t* dst, const std::int32_t* src,
                 const cplx* x, cplx* y) {
  for (std::size_t k = 0; k < n; ++k) y[dst[k]] += (a * w[k]) * x[src[k]];
}

void csr_matvec(std::size_t rows, const std::int64_t* row_ptr, const std::int32_t* col, const cplx* val,
                const cplx* x, cplx* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    cplx acc = 0.0;
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
    y[r] = acc;
  }
}

void transpose_add(std::size_t n, const cplx* src, cplx* dst) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t jb = 0; jb < n; jb += kBlock) {
    for (std::size_t ib = 0; ib < n; ib += kBlock) {
      const std::size_t je = std::min(n, jb + kBlock);
      const std::size_t ie = std::min(n, ib + kBlock);
      for (std::size_t j = jb; j < je; ++j) {
        for (std::size_t i = ib; i < ie; ++i) dst[i + j * n] += src[j + i * n];
      }
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, caxpy, cdotc, cnorm2, gather_axpy, csr_matvec, transpose_add};
  return table;
}

}  // namespace lieb::kernels
