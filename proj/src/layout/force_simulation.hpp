#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "visrooms/layout/layout.hpp"

namespace visrooms::layout_detail {

/// Velocity-Verlet style simulation in the d3-force family: each tick cools
/// alpha, accumulates forces into velocities, damps, and integrates.
class ForceSimulation {
 public:
  ForceSimulation(int dims, const LayoutParams& params);

  std::size_t addNode(Vec3 position, bool fixed);
  void addLink(std::size_t source, std::size_t target);
  void enableCollision(double radius) { collideRadius_ = radius; }
  /// Starting temperature; a warm restart uses less than a cold one.
  void setInitialAlpha(double alpha) { initialAlpha_ = alpha; }

  /// Runs up to maxIterations ticks. `afterTick` sees the tick count and
  /// returns true to stop early. Also stops once the largest free-node
  /// displacement in a tick drops below 1e-3. Returns ticks run.
  int run(const std::function<bool(int)>& afterTick = {});

  std::size_t size() const { return x_.size(); }
  Vec3 position(std::size_t i) const { return {x_[i], y_[i], z_[i]}; }
  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ys() const { return y_; }

 private:
  void prepare();
  void separateCoincident();
  double jiggle();
  void applyLinks(double alpha);
  void applyCharge(double alpha);
  void applyCentering(double alpha);
  void applyCollision();

  int dims_;
  LayoutParams params_;
  double collideRadius_ = 0.0;
  double initialAlpha_ = 1.0;
  std::mt19937_64 rng_;

  std::vector<double> x_, y_, z_;
  std::vector<double> vx_, vy_, vz_;
  std::vector<std::uint8_t> fixed_;
  std::vector<double> px_, py_;  // collision scratch

  struct Link {
    std::size_t source;
    std::size_t target;
    double strength = 1.0;
    double bias = 0.5;
  };
  std::vector<Link> links_;
};

/// Uniform double in [0, 1) from the top 53 bits; portable across stdlibs.
inline double unitDouble(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace visrooms::layout_detail
