#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops of the force layout. Each kernel has a scalar
// reference and, where the build and CPU allow, an AVX2 variant. The active
// table is picked once at startup; VISROOMS_SIMD=scalar forces the reference.

namespace visrooms::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isaName(Isa isa);

/// Positions in structure-of-arrays form. `z` may be all zeros for 2D.
struct PointsView {
  std::span<const double> x;
  std::span<const double> y;
  std::span<const double> z;

  std::size_t size() const { return x.size(); }
};

struct VelocitySpan {
  std::span<double> x;
  std::span<double> y;
  std::span<double> z;
};

/// All-pairs charge force. For every ordered pair (i, j), i != j:
///   d = p[j] - p[i],  l2 = |d|^2,  l = l2 < minDist2 ? sqrt(minDist2*l2) : l2
///   v[i] += d * strengthAlpha / l
/// Coincident points contribute nothing. Nodes with `skip[i] != 0` are not
/// updated (they still act as sources).
using ManyBodyFn = void (*)(PointsView points, double strengthAlpha,
                            double minDist2, std::span<const std::uint8_t> skip,
                            VelocitySpan velocity);

/// Counts unordered pairs closer than sqrt(threshold2) in the XY plane and
/// sets flags[i] = 1 for every node in such a pair (0 otherwise).
using OverlapFn = std::size_t (*)(std::span<const double> x,
                                  std::span<const double> y, double threshold2,
                                  std::span<std::uint8_t> flags);

struct KernelTable {
  Isa isa;
  ManyBodyFn manyBody;
  OverlapFn markOverlaps;
};

bool isaAvailable(Isa isa);
const KernelTable& kernelsFor(Isa isa);

/// Best available table, honoring the VISROOMS_SIMD override.
const KernelTable& activeKernels();

namespace detail {
void manyBodyScalar(PointsView, double, double, std::span<const std::uint8_t>,
                    VelocitySpan);
std::size_t markOverlapsScalar(std::span<const double>, std::span<const double>,
                               double, std::span<std::uint8_t>);
#if defined(VISROOMS_BUILD_AVX2)
void manyBodyAvx2(PointsView, double, double, std::span<const std::uint8_t>,
                  VelocitySpan);
std::size_t markOverlapsAvx2(std::span<const double>, std::span<const double>,
                             double, std::span<std::uint8_t>);
#endif
}  // namespace detail

}  // namespace visrooms::simd
