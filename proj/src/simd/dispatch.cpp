#include <cstdlib>
#include <string>

#include "visrooms/simd/kernels.hpp"

namespace visrooms::simd {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, &detail::manyBodyScalar,
                              &detail::markOverlapsScalar};
#if defined(VISROOMS_BUILD_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, &detail::manyBodyAvx2,
                            &detail::markOverlapsAvx2};
#endif

const KernelTable& selectAtStartup() {
  if (const char* env = std::getenv("VISROOMS_SIMD")) {
    if (std::string(env) == "scalar") return kScalar;
  }
  if (isaAvailable(Isa::Avx2)) return kernelsFor(Isa::Avx2);
  return kScalar;
}

}  // namespace

std::string_view isaName(Isa isa) {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

bool isaAvailable(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(VISROOMS_BUILD_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernelsFor(Isa isa) {
#if defined(VISROOMS_BUILD_AVX2)
  if (isa == Isa::Avx2 && isaAvailable(Isa::Avx2)) return kAvx2;
#endif
  (void)isa;
  return kScalar;
}

const KernelTable& activeKernels() {
  static const KernelTable& table = selectAtStartup();
  return table;
}

}  // namespace visrooms::simd
