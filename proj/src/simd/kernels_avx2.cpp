// AVX2 (4 x double) variants. Compiled with -mavx2 -mfma; only selected at
// runtime when the CPU reports both.

#include <immintrin.h>

#include <cmath>

#include "visrooms/simd/kernels.hpp"

namespace visrooms::simd::detail {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void manyBodyAvx2(PointsView p, double strengthAlpha, double minDist2,
                  std::span<const std::uint8_t> skip, VelocitySpan v) {
  constexpr std::size_t kLane = 4;
  const std::size_t n = p.size();
  const double* px = p.x.data();
  const double* py = p.y.data();
  const double* pz = p.z.data();

  const __m256d sa = _mm256_set1_pd(strengthAlpha);
  const __m256d md2 = _mm256_set1_pd(minDist2);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);

  for (std::size_t i = 0; i < n; ++i) {
    if (!skip.empty() && skip[i]) continue;
    const double xi = px[i], yi = py[i], zi = pz[i];
    const __m256d vxi = _mm256_set1_pd(xi);
    const __m256d vyi = _mm256_set1_pd(yi);
    const __m256d vzi = _mm256_set1_pd(zi);
    __m256d ax = zero, ay = zero, az = zero;

    std::size_t j = 0;
    for (; j + kLane <= n; j += kLane) {
      const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(px + j), vxi);
      const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(py + j), vyi);
      const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(pz + j), vzi);
      const __m256d l2 = _mm256_add_pd(
          _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
          _mm256_mul_pd(dz, dz));
      const __m256d isZero = _mm256_cmp_pd(l2, zero, _CMP_EQ_OQ);
      const __m256d isNear = _mm256_cmp_pd(l2, md2, _CMP_LT_OQ);
      __m256d l = l2;
      if (_mm256_movemask_pd(isNear) != 0) {
        l = _mm256_blendv_pd(l2, _mm256_sqrt_pd(_mm256_mul_pd(md2, l2)), isNear);
      }
      l = _mm256_blendv_pd(l, one, isZero);
      const __m256d w = _mm256_andnot_pd(isZero, _mm256_div_pd(sa, l));
      ax = _mm256_add_pd(ax, _mm256_mul_pd(dx, w));
      ay = _mm256_add_pd(ay, _mm256_mul_pd(dy, w));
      az = _mm256_add_pd(az, _mm256_mul_pd(dz, w));
    }

    double sx = hsum(ax), sy = hsum(ay), sz = hsum(az);
    for (; j < n; ++j) {
      const double dx = px[j] - xi;
      const double dy = py[j] - yi;
      const double dz = pz[j] - zi;
      const double l2 = dx * dx + dy * dy + dz * dz;
      if (l2 == 0.0) continue;
      const double l = l2 < minDist2 ? std::sqrt(minDist2 * l2) : l2;
      const double w = strengthAlpha / l;
      sx += dx * w;
      sy += dy * w;
      sz += dz * w;
    }
    v.x[i] += sx;
    v.y[i] += sy;
    v.z[i] += sz;
  }
}

std::size_t markOverlapsAvx2(std::span<const double> x,
                             std::span<const double> y, double threshold2,
                             std::span<std::uint8_t> flags) {
  constexpr std::size_t kLane = 4;
  const std::size_t n = x.size();
  const double* px = x.data();
  const double* py = y.data();
  const __m256d t2 = _mm256_set1_pd(threshold2);
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) flags[i] = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const __m256d xi = _mm256_set1_pd(px[i]);
    const __m256d yi = _mm256_set1_pd(py[i]);
    std::size_t j = i + 1;
    for (; j + kLane <= n; j += kLane) {
      const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(px + j), xi);
      const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(py + j), yi);
      const __m256d d2 =
          _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
      const int mask = _mm256_movemask_pd(_mm256_cmp_pd(d2, t2, _CMP_LT_OQ));
      if (mask == 0) continue;
      pairs += static_cast<std::size_t>(__builtin_popcount(mask));
      flags[i] = 1;
      for (std::size_t k = 0; k < kLane; ++k) {
        if (mask & (1 << k)) flags[j + k] = 1;
      }
    }
    for (; j < n; ++j) {
      const double dx = px[j] - px[i];
      const double dy = py[j] - py[i];
      if (dx * dx + dy * dy < threshold2) {
        ++pairs;
        flags[i] = 1;
        flags[j] = 1;
      }
    }
  }
  return pairs;
}

}  // namespace visrooms::simd::detail
