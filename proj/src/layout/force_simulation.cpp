#include "force_simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "visrooms/simd/kernels.hpp"

namespace visrooms::layout_detail {

namespace {

constexpr double kVelocityDecay = 0.4;
constexpr double kChargeMinDistance2 = 1.0;
constexpr double kStopDisplacement = 1e-3;

}  // namespace

ForceSimulation::ForceSimulation(int dims, const LayoutParams& params)
    : dims_(dims), params_(params), rng_(params.seed ^ 0x9e3779b97f4a7c15ULL) {}

std::size_t ForceSimulation::addNode(Vec3 p, bool fixed) {
  x_.push_back(p.x);
  y_.push_back(p.y);
  z_.push_back(dims_ == 3 ? p.z : 0.0);
  vx_.push_back(0.0);
  vy_.push_back(0.0);
  vz_.push_back(0.0);
  fixed_.push_back(fixed ? 1 : 0);
  return x_.size() - 1;
}

void ForceSimulation::addLink(std::size_t source, std::size_t target) {
  links_.push_back({source, target});
}

double ForceSimulation::jiggle() { return (unitDouble(rng_) - 0.5) * 1e-6; }

void ForceSimulation::prepare() {
  std::vector<std::size_t> degree(size(), 0);
  for (const Link& l : links_) {
    ++degree[l.source];
    ++degree[l.target];
  }
  for (Link& l : links_) {
    const double ds = static_cast<double>(degree[l.source]);
    const double dt = static_cast<double>(degree[l.target]);
    l.strength = 1.0 / std::min(ds, dt);
    l.bias = ds / (ds + dt);
  }
  separateCoincident();
}

// Free nodes sharing an exact position would never separate under the charge
// force; nudge all but the first of each group by a seeded offset.
void ForceSimulation::separateCoincident() {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(x_[a], y_[a], z_[a], a) < std::tie(x_[b], y_[b], z_[b], b);
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const std::size_t prev = order[k - 1];
    const std::size_t cur = order[k];
    if (x_[cur] != x_[prev] || y_[cur] != y_[prev] || z_[cur] != z_[prev]) {
      continue;
    }
    const std::size_t moved = fixed_[cur] ? prev : cur;
    if (fixed_[moved]) continue;
    const double angle = unitDouble(rng_) * 2.0 * M_PI;
    const double radius = 1e-2 * (1.0 + unitDouble(rng_));
    x_[moved] += radius * std::cos(angle);
    y_[moved] += radius * std::sin(angle);
    if (dims_ == 3) z_[moved] += (unitDouble(rng_) - 0.5) * 1e-2;
  }
}

void ForceSimulation::applyLinks(double alpha) {
  for (const Link& l : links_) {
    const std::size_t s = l.source, t = l.target;
    double dx = x_[t] + vx_[t] - x_[s] - vx_[s];
    double dy = y_[t] + vy_[t] - y_[s] - vy_[s];
    double dz = dims_ == 3 ? z_[t] + vz_[t] - z_[s] - vz_[s] : 0.0;
    if (dx == 0.0) dx = jiggle();
    if (dy == 0.0) dy = jiggle();
    if (dims_ == 3 && dz == 0.0) dz = jiggle();
    const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double k = (len - params_.linkDistance) / len * alpha * l.strength;
    dx *= k;
    dy *= k;
    dz *= k;
    vx_[t] -= dx * l.bias;
    vy_[t] -= dy * l.bias;
    vz_[t] -= dz * l.bias;
    vx_[s] += dx * (1.0 - l.bias);
    vy_[s] += dy * (1.0 - l.bias);
    vz_[s] += dz * (1.0 - l.bias);
  }
}

void ForceSimulation::applyCharge(double alpha) {
  const auto& k = simd::activeKernels();
  k.manyBody({x_, y_, z_}, params_.chargeStrength * alpha, kChargeMinDistance2,
             fixed_, {vx_, vy_, vz_});
}

void ForceSimulation::applyCentering(double alpha) {
  const double s = params_.centerAttraction * alpha;
  for (std::size_t i = 0; i < size(); ++i) {
    vx_[i] -= x_[i] * s;
    vy_[i] -= y_[i] * s;
    if (dims_ == 3) vz_[i] -= z_[i] * s;
  }
}

void ForceSimulation::applyCollision() {
  const double minDist = 2.0 * collideRadius_;
  const double minDist2 = minDist * minDist;
  const std::size_t n = size();
  px_.resize(n);
  py_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    px_[i] = x_[i] + vx_[i];
    py_[i] = y_[i] + vy_[i];
  }
  // Pairs of fixed nodes never interact; visit each pair holding a free node
  // once, in index order.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (fixed_[i] && fixed_[j]) continue;
      double dx = px_[i] - px_[j];
      double dy = py_[i] - py_[j];
      if (dx >= minDist || dx <= -minDist) continue;
      double d2 = dx * dx + dy * dy;
      if (d2 >= minDist2) continue;
      if (dx == 0.0) dx = jiggle(), d2 += dx * dx;
      if (dy == 0.0) dy = jiggle(), d2 += dy * dy;
      const double l = std::sqrt(d2);
      const double k = (minDist - l) / l;
      const double shareI = fixed_[i] ? 0.0 : (fixed_[j] ? 1.0 : 0.5);
      const double shareJ = 1.0 - shareI;
      vx_[i] += dx * k * shareI;
      vy_[i] += dy * k * shareI;
      vx_[j] -= dx * k * shareJ;
      vy_[j] -= dy * k * shareJ;
    }
  }
}

int ForceSimulation::run(const std::function<bool(int)>& afterTick) {
  prepare();
  double alpha = initialAlpha_;
  int tick = 0;
  while (tick < params_.maxIterations) {
    alpha += (0.0 - alpha) * params_.coolingDecay;
    applyLinks(alpha);
    applyCharge(alpha);
    applyCentering(alpha);
    if (collideRadius_ > 0.0) applyCollision();

    double maxStep2 = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (fixed_[i]) {
        vx_[i] = vy_[i] = vz_[i] = 0.0;
        continue;
      }
      vx_[i] *= 1.0 - kVelocityDecay;
      vy_[i] *= 1.0 - kVelocityDecay;
      vz_[i] = dims_ == 3 ? vz_[i] * (1.0 - kVelocityDecay) : 0.0;
      x_[i] += vx_[i];
      y_[i] += vy_[i];
      z_[i] += vz_[i];
      maxStep2 = std::max(maxStep2,
                          vx_[i] * vx_[i] + vy_[i] * vy_[i] + vz_[i] * vz_[i]);
    }
    ++tick;
    if (afterTick && afterTick(tick)) break;
    if (maxStep2 < kStopDisplacement * kStopDisplacement) break;
  }
  return tick;
}

}  // namespace visrooms::layout_detail
