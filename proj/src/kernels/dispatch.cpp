#include <atomic>
#include <cstdlib>
#include <string>

#include "lieb/kernels.hpp"

namespace lieb::kernels {

#ifndef LIEB_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool cpu_supports_avx2() {
#if defined(LIEB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* initial() {
  const char* env = std::getenv("LIEB_KERNELS");
  if (env != nullptr && std::string(env) == "scalar") return &scalar_table();
  if (cpu_supports_avx2() && avx2_table() != nullptr) return avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) {
  if (isa == Isa::Scalar) {
    current().store(&scalar_table(), std::memory_order_release);
    return;
  }
  if (!cpu_supports_avx2() || avx2_table() == nullptr) throw InvalidInput("AVX2 kernels unavailable on this host");
  current().store(avx2_table(), std::memory_order_release);
}

}  // namespace lieb::kernels
