#include "linbpi/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace linbpi::kern {

#if LINBPI_HAVE_AVX2_TU
const Ops& avx2_ops_impl();
#endif

const Ops* avx2_ops() {
#if LINBPI_HAVE_AVX2_TU
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &avx2_ops_impl();
#endif
  return nullptr;
}

namespace {

const Ops& select() {
  const char* env = std::getenv("LINBPI_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return scalar_ops();
    if (std::strcmp(env, "avx2") == 0) {
      if (const Ops* v = avx2_ops()) return *v;
      return scalar_ops();  // requested but unavailable: degrade quietly
    }
  }
  if (const Ops* v = avx2_ops()) return *v;
  return scalar_ops();
}

}  // namespace

const Ops& ops() {
  static const Ops& chosen = select();
  return chosen;
}

}  // namespace linbpi::kern
