#include <cstdlib>
#include <cstring>

#include "nip/kernels.hpp"

namespace nip::kernels {

namespace detail {
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif
}  // namespace detail

const KernelTable* avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  // the TU is built with -mavx2 -mfma -mpopcnt, so gate on all of them
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
      __builtin_cpu_supports("popcnt"))
    return &detail::avx2_table();
#endif
  return nullptr;
}

const KernelTable* neon() {
#if defined(__aarch64__)
  return &detail::neon_table();
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* selected = [] {
    const char* env = std::getenv("NIP_KERNELS");
    if (env) {
      if (std::strcmp(env, "scalar") == 0) return &scalar();
      if (std::strcmp(env, "avx2") == 0 && avx2()) return avx2();
      if (std::strcmp(env, "neon") == 0 && neon()) return neon();
    }
    if (const KernelTable* t = avx2()) return t;
    if (const KernelTable* t = neon()) return t;
    return &scalar();
  }();
  return *selected;
}

}  // namespace nip::kernels
