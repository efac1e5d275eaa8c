#include <cmath>

#include "visrooms/simd/kernels.hpp"

namespace visrooms::simd::detail {

void manyBodyScalar(PointsView p, double strengthAlpha, double minDist2,
                    std::span<const std::uint8_t> skip, VelocitySpan v) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!skip.empty() && skip[i]) continue;
    const double xi = p.x[i], yi = p.y[i], zi = p.z[i];
    double ax = 0.0, ay = 0.0, az = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = p.x[j] - xi;
      const double dy = p.y[j] - yi;
      const double dz = p.z[j] - zi;
      const double l2 = dx * dx + dy * dy + dz * dz;
      if (l2 == 0.0) continue;
      const double l = l2 < minDist2 ? std::sqrt(minDist2 * l2) : l2;
      const double w = strengthAlpha / l;
      ax += dx * w;
      ay += dy * w;
      az += dz * w;
    }
    v.x[i] += ax;
    v.y[i] += ay;
    v.z[i] += az;
  }
}

std::size_t markOverlapsScalar(std::span<const double> x,
                               std::span<const double> y, double threshold2,
                               std::span<std::uint8_t> flags) {
  const std::size_t n = x.size();
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) flags[i] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[j] - x[i];
      const double dy = y[j] - y[i];
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
