#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <random>
#include <vector>

#include "lieb/kernels.hpp"

using namespace lieb;
using namespace lieb::kernels;

namespace {

std::vector<cplx> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = {u(rng), u(rng)};
  return v;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (cpu_supports_avx2() && avx2_table() != nullptr) out.push_back(avx2_table());
  return out;
}

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 17, 64, 1001};

}  // namespace

TEST_CASE("dispatch") {
  const auto& t = active();
  if (cpu_supports_avx2() && std::getenv("LIEB_KERNELS") == nullptr) {
    CHECK(t.isa == Isa::Avx2);
  } else {
    CHECK(t.isa == Isa::Scalar);
  }
  CHECK(to_string(Isa::Avx2) == "avx2");
  CHECK(scalar_table().isa == Isa::Scalar);
  if (!cpu_supports_avx2()) {
    MESSAGE("host without AVX2: only the scalar path is exercised");
    CHECK_THROWS_AS(select(Isa::Avx2), InvalidInput);
  }
}

TEST_CASE("vector kernels agree with naive loops") {
  std::mt19937_64 rng(7);
  for (const KernelTable* t : tables()) {
    for (std::size_t n : kSizes) {
      const auto x = random_vector(n, rng);
      const auto y0 = random_vector(n, rng);
      const cplx a{0.37, -1.25};

      auto y = y0;
      t->caxpy(n, a, x.data(), y.data());
      std::vector<cplx> expected(n);
      for (std::size_t i = 0; i < n; ++i) expected[i] = y0[i] + a * x[i];
      CHECK(max_diff(y, expected) < 1e-15 * 4);

      cplx dot{};
      double nrm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += std::conj(x[i]) * y0[i];
        nrm += std::norm(x[i]);
      }
      CHECK(std::abs(t->cdotc(n, x.data(), y0.data()) - dot) <= 1e-14 * (1.0 + n));
      CHECK(std::abs(t->cnorm2(n, x.data()) - nrm) <= 1e-14 * (1.0 + nrm));
    }
  }
}

TEST_CASE("gather, CSR and transpose kernels agree with naive loops") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (const KernelTable* t : tables()) {
    for (std::size_t n : kSizes) {
      const auto x = random_vector(n, rng);
      const auto y0 = random_vector(n, rng);

      std::vector<std::int32_t> dst(n), src(n);
      std::iota(dst.begin(), dst.end(), 0);
      std::shuffle(dst.begin(), dst.end(), rng);
      for (auto& s : src) s = n ? static_cast<std::int32_t>(rng() % n) : 0;
      std::vector<double> w(n);
      for (auto& v : w) v = u(rng);
      const std::size_t m = n / 2 + (n % 2);
      auto y = y0;
      auto expected = y0;
      const cplx a{-0.5, 0.75};
      t->gather_axpy(m, a, w.data(), dst.data(), src.data(), x.data(), y.data());
      for (std::size_t k = 0; k < m; ++k) expected[dst[k]] += a * w[k] * x[src[k]];
      CHECK(max_diff(y, expected) < 1e-14);

      std::vector<std::int64_t> row_ptr{0};
      std::vector<std::int32_t> col;
      std::vector<cplx> val;
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t nnz = rng() % 6;
        for (std::size_t k = 0; k < nnz; ++k) {
          col.push_back(static_cast<std::int32_t>(rng() % n));
          val.push_back({u(rng) - 1.0, u(rng) - 1.0});
        }
        row_ptr.push_back(static_cast<std::int64_t>(col.size()));
      }
      std::vector<cplx> out(n), ref(n);
      t->csr_matvec(n, row_ptr.data(), col.data(), val.data(), x.data(), out.data());
      for (std::size_t r = 0; r < n; ++r) {
        for (auto k = row_ptr[r]; k < row_ptr[r + 1]; ++k) ref[r] += val[k] * x[col[k]];
      }
      CHECK(max_diff(out, ref) < 1e-14);
    }

    for (std::size_t n : {0, 1, 2, 3, 5, 8, 13, 33}) {
      const auto src = random_vector(n * n, rng);
      const auto d0 = random_vector(n * n, rng);
      auto d = d0;
      t->transpose_add(n, src.data(), d.data());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) CHECK(d[i + n * j] == d0[i + n * j] + src[j + n * i]);
      }
    }
  }
}

TEST_CASE("AVX2 and scalar tables agree to rounding") {
  const KernelTable* fast = avx2_table();
  if (!cpu_supports_avx2() || fast == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence test skipped");
    return;
  }
  const KernelTable& ref = scalar_table();
  std::mt19937_64 rng(5);
  for (std::size_t n : kSizes) {
    const auto x = random_vector(n, rng);
    const auto y0 = random_vector(n, rng);
    auto ya = y0;
    auto yb = y0;
    ref.caxpy(n, {1.5, 0.5}, x.data(), ya.data());
    fast->caxpy(n, {1.5, 0.5}, x.data(), yb.data());
    CHECK(max_diff(ya, yb) < 1e-15 * 8);
    CHECK(std::abs(ref.cdotc(n, x.data(), y0.data()) - fast->cdotc(n, x.data(), y0.data())) <= 1e-14 * (1.0 + n));
    const double nrm = ref.cnorm2(n, x.data());
    CHECK(std::abs(nrm - fast->cnorm2(n, x.data())) <= 1e-14 * (1.0 + nrm));
  }
}
