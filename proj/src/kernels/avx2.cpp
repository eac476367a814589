// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "lieb/kernels.hpp"

namespace lieb::kernels {

namespace {

// Two complex doubles per register: [re0, im0, re1, im1].
inline __m256d cmul(__m256d ar, __m256d ai, __m256d x) {
  const __m256d xs = _mm256_permute_pd(x, 0b0101);
  return _mm256_fmaddsub_pd(ar, x, _mm256_mul_pd(ai, xs));
}

inline __m256d load2(const cplx* a, const cplx* b) {
  return _mm256_insertf128_pd(_mm256_castpd128_pd256(_mm_loadu_pd(reinterpret_cast<const double*>(a))),
                              _mm_loadu_pd(reinterpret_cast<const double*>(b)), 1);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void caxpy(std::size_t n, cplx a, const cplx* x, cplx* y) {
  const __m256d ar = _mm256_set1_pd(a.real());
  const __m256d ai = _mm256_set1_pd(a.imag());
  auto* yd = reinterpret_cast<double*>(y);
  const auto* xd = reinterpret_cast<const double*>(x);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x0 = _mm256_loadu_pd(xd + 2 * i);
    const __m256d x1 = _mm256_loadu_pd(xd + 2 * i + 4);
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(_mm256_loadu_pd(yd + 2 * i), cmul(ar, ai, x0)));
    _mm256_storeu_pd(yd + 2 * i + 4, _mm256_add_pd(_mm256_loadu_pd(yd + 2 * i + 4), cmul(ar, ai, x1)));
  }
  for (; i + 2 <= n; i += 2) {
    const __m256d x0 = _mm256_loadu_pd(xd + 2 * i);
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(_mm256_loadu_pd(yd + 2 * i), cmul(ar, ai, x0)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

cplx cdotc(std::size_t n, const cplx* x, const cplx* y) {
  const auto* xd = reinterpret_cast<const double*>(x);
  const auto* yd = reinterpret_cast<const double*>(y);
  __m256d re = _mm256_setzero_pd();  // [xr yr, xi yi, ...]
  __m256d im = _mm256_setzero_pd();  // [xr yi, xi yr, ...]
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    const __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    re = _mm256_fmadd_pd(xv, yv, re);
    im = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0b0101), im);
  }
  alignas(32) double r[4];
  alignas(32) double m[4];
  _mm256_store_pd(r, re);
  _mm256_store_pd(m, im);
  double sre = r[0] + r[1] + r[2] + r[3];
  double sim = (m[0] - m[1]) + (m[2] - m[3]);
  for (; i < n; ++i) {
    sre += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    sim += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {sre, sim};
}

double cnorm2(std::size_t n, const cplx* x) {
  const auto* xd = reinterpret_cast<const double*>(x);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(xd + 2 * i);
    const __m256d b = _mm256_loadu_pd(xd + 2 * i + 4);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
    acc1 = _mm256_fmadd_pd(b, b, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += std::norm(x[i]);
  return s;
}

void gather_axpy(std::size_t n, cplx a, const double* w, const std::int32_t* dst, const std::int32_t* src,
                 const cplx* x, cplx* y) {
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d wv = _mm256_set_pd(w[k + 1], w[k + 1], w[k], w[k]);
    const __m256d ar = _mm256_mul_pd(wv, _mm256_set1_pd(a.real()));
    const __m256d ai = _mm256_mul_pd(wv, _mm256_set1_pd(a.imag()));
    const __m256d prod = cmul(ar, ai, load2(x + src[k], x + src[k + 1]));
    auto* y0 = reinterpret_cast<double*>(y + dst[k]);
    auto* y1 = reinterpret_cast<double*>(y + dst[k + 1]);
    // dst entries may coincide; accumulate the halves one after the other.
    _mm_storeu_pd(y0, _mm_add_pd(_mm_loadu_pd(y0), _mm256_castpd256_pd128(prod)));
    _mm_storeu_pd(y1, _mm_add_pd(_mm_loadu_pd(y1), _mm256_extractf128_pd(prod, 1)));
  }
  for (; k < n; ++k) y[dst[k]] += (a * w[k]) * x[src[k]];
}

void csr_matvec(std::size_t rows, const std::int64_t* row_ptr, const std::int32_t* col, const cplx* val,
                const cplx* x, cplx* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    __m256d acc = _mm256_setzero_pd();
    std::int64_t k = row_ptr[r];
    const std::int64_t end = row_ptr[r + 1];
    for (; k + 2 <= end; k += 2) {
      const __m256d v = _mm256_loadu_pd(reinterpret_cast<const double*>(val + k));
      const __m256d xv = load2(x + col[k], x + col[k + 1]);
      // (vr + i vi)(xr + i xi)
      const __m256d vr = _mm256_movedup_pd(v);
      const __m256d vi = _mm256_permute_pd(v, 0b1111);
      acc = _mm256_add_pd(acc, _mm256_fmaddsub_pd(vr, xv, _mm256_mul_pd(vi, _mm256_permute_pd(xv, 0b0101))));
    }
    const __m128d s = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
    cplx out{_mm_cvtsd_f64(s), _mm_cvtsd_f64(_mm_unpackhi_pd(s, s))};
    for (; k < end; ++k) out += val[k] * x[col[k]];
    y[r] = out;
  }
}

void transpose_add(std::size_t n, const cplx* src, cplx* dst) {
  constexpr std::size_t kBlock = 32;
  const auto* s = reinterpret_cast<const double*>(src);
  auto* d = reinterpret_cast<double*>(dst);
  for (std::size_t jb = 0; jb < n; jb += kBlock) {
    for (std::size_t ib = 0; ib < n; ib += kBlock) {
      const std::size_t je = std::min(n, jb + kBlock);
      const std::size_t ie = std::min(n, ib + kBlock);
      std::size_t j = jb;
      for (; j + 2 <= je; j += 2) {
        std::size_t i = ib;
        for (; i + 2 <= ie; i += 2) {
          // 2x2 complex tile: dst(i..i+1, j..j+1) += src(j..j+1, i..i+1)^T
          const __m256d c0 = _mm256_loadu_pd(s + 2 * (j + i * n));        // src(j,i), src(j+1,i)
          const __m256d c1 = _mm256_loadu_pd(s + 2 * (j + (i + 1) * n));  // src(j,i+1), src(j+1,i+1)
          const __m256d t0 = _mm256_permute2f128_pd(c0, c1, 0x20);        // src(j,i), src(j,i+1)
          const __m256d t1 = _mm256_permute2f128_pd(c0, c1, 0x31);        // src(j+1,i), src(j+1,i+1)
          double* d0 = d + 2 * (i + j * n);
          double* d1 = d + 2 * (i + (j + 1) * n);
          _mm256_storeu_pd(d0, _mm256_add_pd(_mm256_loadu_pd(d0), t0));
          _mm256_storeu_pd(d1, _mm256_add_pd(_mm256_loadu_pd(d1), t1));
        }
        for (; i < ie; ++i) {
          dst[i + j * n] += src[j + i * n];
          dst[i + (j + 1) * n] += src[j + 1 + i * n];
        }
      }
      for (; j < je; ++j) {
        for (std::size_t i = ib; i < ie; ++i) dst[i + j * n] += src[j + i * n];
      }
    }
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::Avx2, caxpy, cdotc, cnorm2, gather_axpy, csr_matvec, transpose_add};
  return &table;
}

}  // namespace lieb::kernels
