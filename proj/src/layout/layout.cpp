#include "visrooms/layout/layout.hpp"

#include <cmath>
#include <limits>

#include "force_simulation.hpp"
#include "visrooms/simd/kernels.hpp"

namespace visrooms {

using nlohmann::json;
using layout_detail::ForceSimulation;
using layout_detail::unitDouble;

void LayoutParams::validate() const {
  if (!(nodeRadius > 0.0) || !std::isfinite(nodeRadius)) {
    throw std::invalid_argument("nodeRadius must be positive");
  }
  if (maxIterations < 1) throw std::invalid_argument("maxIterations must be >= 1");
  if (!(coolingDecay > 0.0 && coolingDecay < 1.0)) {
    throw std::invalid_argument("coolingDecay must lie in (0, 1)");
  }
  if (!std::isfinite(linkDistance) || !std::isfinite(chargeStrength) ||
      !std::isfinite(centerAttraction)) {
    throw std::invalid_argument("layout parameters must be finite");
  }
}

json layoutParamsToJson(const LayoutParams& p) {
  return {{"linkDistance", p.linkDistance},
          {"chargeStrength", p.chargeStrength},
          {"centerAttraction", p.centerAttraction},
          {"nodeRadius", p.nodeRadius},
          {"maxIterations", p.maxIterations},
          {"coolingDecay", p.coolingDecay},
          {"seed", p.seed}};
}

LayoutParams layoutParamsFromJson(const json& j) {
  LayoutParams p;
  p.linkDistance = j.value("linkDistance", p.linkDistance);
  p.chargeStrength = j.value("chargeStrength", p.chargeStrength);
  p.centerAttraction = j.value("centerAttraction", p.centerAttraction);
  p.nodeRadius = j.value("nodeRadius", p.nodeRadius);
  p.maxIterations = j.value("maxIterations", p.maxIterations);
  p.coolingDecay = j.value("coolingDecay", p.coolingDecay);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

json layoutToJson(const LayoutResult& r) {
  json p3 = json::object();
  for (const auto& [id, p] : r.positions3) p3[id.value] = {p.x, p.y, p.z};
  json p2 = json::object();
  for (const auto& [id, p] : r.positions2) p2[id.value] = {p.x, p.y};
  json pinned = json::array();
  for (const auto& id : r.pinned) pinned.push_back(id.value);
  return {{"positions3", p3},
          {"positions2", p2},
          {"pinned", pinned},
          {"version", r.version}};
}

LayoutResult layoutFromJson(const json& j) {
  LayoutResult r;
  for (const auto& [id, p] : j.at("positions3").items()) {
    r.positions3[NodeId(id)] = {p.at(0).get<double>(), p.at(1).get<double>(),
                                p.at(2).get<double>()};
  }
  for (const auto& [id, p] : j.at("positions2").items()) {
    r.positions2[NodeId(id)] = {p.at(0).get<double>(), p.at(1).get<double>()};
  }
  for (const auto& id : j.at("pinned")) r.pinned.insert(NodeId(id.get<std::string>()));
  r.version = j.at("version").get<std::uint64_t>();
  return r;
}

namespace {

constexpr double kWarmAlpha = 0.3;
// Force ticks without a new best overlap count before switching to sweeps.
constexpr int kStallTicks = 20;
// Sweeps without progress before trapped nodes are moved to clear spots.
constexpr int kStallSweeps = 10;

// Golden-angle spiral on a growing sphere shell (the d3-force-3d placement),
// rotated by seed-derived offsets and recentered to zero mean.
std::vector<Vec3> spiralPlacement(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double rollOffset = unitDouble(rng) * 2.0 * M_PI;
  const double yawOffset = unitDouble(rng) * 2.0 * M_PI;
  const double rollStep = M_PI * (3.0 - std::sqrt(5.0));
  const double yawStep = M_PI * 20.0 / (9.0 + std::sqrt(221.0));
  constexpr double kInitialRadius = 10.0;

  std::vector<Vec3> out(count);
  Vec3 mean;
  for (std::size_t i = 0; i < count; ++i) {
    const double k = static_cast<double>(i);
    const double radius = kInitialRadius * std::cbrt(0.5 + k);
    const double roll = rollOffset + k * rollStep;
    const double yaw = yawOffset + k * yawStep;
    out[i] = {radius * std::sin(roll) * std::cos(yaw), radius * std::cos(roll),
              radius * std::sin(roll) * std::sin(yaw)};
    mean = mean + out[i];
  }
  if (count > 0) {
    mean = mean * (1.0 / static_cast<double>(count));
    for (Vec3& p : out) p = p - mean;
  }
  return out;
}

// One Gauss-Seidel pass of pairwise pushes: every pair closer than minDist
// is moved apart to slightly beyond it. Fixed nodes never move; a free node
// next to one takes the whole correction.
void relaxSweep(std::vector<double>& xs, std::vector<double>& ys,
                const std::vector<std::uint8_t>& fixed, double minDist,
                std::mt19937_64& rng) {
  const double target = minDist * (1.0 + 1e-3);
  const double minDist2 = minDist * minDist;
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (fixed[i] && fixed[j]) continue;
      double dx = xs[i] - xs[j];
      double dy = ys[i] - ys[j];
      const double d2 = dx * dx + dy * dy;
      if (d2 >= minDist2) continue;
      double d = std::sqrt(d2);
      const double push = target - d;
      if (d == 0.0) {
        const double angle = unitDouble(rng) * 2.0 * M_PI;
        dx = std::cos(angle);
        dy = std::sin(angle);
        d = 1.0;
      }
      const double shareI = fixed[i] ? 0.0 : (fixed[j] ? 1.0 : 0.5);
      xs[i] += dx / d * push * shareI;
      ys[i] += dy / d * push * shareI;
      xs[j] -= dx / d * push * (1.0 - shareI);
      ys[j] -= dy / d * push * (1.0 - shareI);
    }
  }
}

// Moves every free node that still overlaps something to the nearest clear
// spot on rings of growing radius around it.
void placeClear(std::vector<double>& xs, std::vector<double>& ys,
                const std::vector<std::uint8_t>& fixed, double minDist) {
  const double target = minDist * (1.0 + 1e-3);
  const std::size_t n = xs.size();
  const auto clearAt = [&](std::size_t self, double x, double y) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == self) continue;
      const double dx = x - xs[j], dy = y - ys[j];
      if (dx * dx + dy * dy < target * target) return false;
    }
    return true;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i] || clearAt(i, xs[i], ys[i])) continue;
    for (int ring = 1;; ++ring) {
      const double r = 0.5 * target * ring;
      const int samples = 8 * ring;
      bool placed = false;
      for (int k = 0; k < samples && !placed; ++k) {
        const double a = 2.0 * M_PI * k / samples;
        const double x = xs[i] + r * std::cos(a), y = ys[i] + r * std::sin(a);
        if (clearAt(i, x, y)) xs[i] = x, ys[i] = y, placed = true;
      }
      if (placed) break;
    }
  }
}

}  // namespace

Positions3 layout3d(const GraphState& graph, const LayoutParams& params,
                    const Positions3* warmStart) {
  params.validate();
  Positions3 out;
  if (graph.nodes().empty()) return out;

  std::size_t spiralCount = 0;
  for (const auto& [id, n] : graph.nodes()) {
    if (n.isDocAnchor) continue;
    if (warmStart == nullptr) ++spiralCount;
  }
  const std::vector<Vec3> spiral = spiralPlacement(spiralCount, params.seed);

  ForceSimulation sim(3, params);
  if (warmStart != nullptr) sim.setInitialAlpha(kWarmAlpha);
  std::map<NodeId, std::size_t> index;
  std::size_t spiralNext = 0;
  for (const auto& [id, n] : graph.nodes()) {
    Vec3 start = n.position3;
    if (!n.isDocAnchor) {
      if (warmStart == nullptr) {
        start = spiral[spiralNext++];
      } else if (auto it = warmStart->find(id); it != warmStart->end()) {
        start = it->second;
      }
    }
    index.emplace(id, sim.addNode(start, n.isDocAnchor));
  }
  for (const auto& [id, l] : graph.links()) {
    sim.addLink(index.at(l.endpoints.first), index.at(l.endpoints.second));
  }
  sim.run();
  for (const auto& [id, i] : index) out.emplace(id, sim.position(i));
  return out;
}

Positions2 projectTo2d(const Positions3& positions3) {
  Positions2 out;
  for (const auto& [id, p] : positions3) out.emplace_hint(out.end(), id, Vec2{p.x, p.y});
  return out;
}

std::size_t countOverlaps(const Positions2& positions, double nodeRadius) {
  std::vector<double> xs, ys;
  xs.reserve(positions.size());
  ys.reserve(positions.size());
  for (const auto& [id, p] : positions) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  std::vector<std::uint8_t> flags(xs.size());
  const double d = 2.0 * nodeRadius;
  return simd::activeKernels().markOverlaps(xs, ys, d * d, flags);
}

OverlapResolution resolveOverlaps2d(const GraphState& graph,
                                    const Positions2& positions2,
                                    const LayoutParams& params) {
  params.validate();
  const auto& kernels = simd::activeKernels();
  const double minDist = 2.0 * params.nodeRadius;
  const double threshold2 = minDist * minDist;

  std::vector<NodeId> ids;
  std::vector<double> xs, ys;
  for (const auto& [id, p] : positions2) {
    ids.push_back(id);
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  std::vector<std::uint8_t> overlapping(ids.size());
  const std::size_t inputOverlaps =
      kernels.markOverlaps(xs, ys, threshold2, overlapping);

  OverlapResolution out;
  out.positions = positions2;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!overlapping[i]) out.pinned.insert(ids[i]);
  }
  if (inputOverlaps == 0) return out;

  ForceSimulation sim(2, params);
  std::map<NodeId, std::size_t> index;
  std::vector<std::uint8_t> fixedFlags(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    fixedFlags[i] = overlapping[i] ? 0 : 1;
    index.emplace(ids[i], sim.addNode({xs[i], ys[i], 0.0}, !overlapping[i]));
  }
  for (const auto& [id, l] : graph.links()) {
    auto a = index.find(l.endpoints.first);
    auto b = index.find(l.endpoints.second);
    if (a != index.end() && b != index.end()) sim.addLink(a->second, b->second);
  }
  sim.enableCollision(params.nodeRadius);

  std::size_t best = inputOverlaps;
  int bestTick = 0;
  std::vector<double> bestX = xs, bestY = ys;
  std::vector<std::uint8_t> scratch(ids.size());
  const int ticks = sim.run([&](int tick) {
    const std::size_t now =
        kernels.markOverlaps(sim.xs(), sim.ys(), threshold2, scratch);
    if (now < best) {
      best = now;
      bestTick = tick;
      bestX = sim.xs();
      bestY = sim.ys();
    }
    return best == 0 || tick - bestTick >= kStallTicks;
  });
  out.iterations = ticks;

  // Position-based finish with whatever budget the force pass left.
  std::vector<double> rx = bestX, ry = bestY;
  std::mt19937_64 rng(params.seed ^ 0xc2b2ae3d27d4eb4fULL);
  int sinceBest = 0;
  while (best > 0 && out.iterations < params.maxIterations) {
    if (sinceBest >= kStallSweeps) {
      placeClear(rx, ry, fixedFlags, minDist);
      sinceBest = 0;
    } else {
      relaxSweep(rx, ry, fixedFlags, minDist, rng);
    }
    ++out.iterations;
    const std::size_t now = kernels.markOverlaps(rx, ry, threshold2, scratch);
    if (now < best) {
      best = now;
      bestX = rx;
      bestY = ry;
      sinceBest = 0;
    } else {
      ++sinceBest;
    }
  }

  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (overlapping[i]) out.positions[ids[i]] = {bestX[i], bestY[i]};
  }
  return out;
}

LayoutResult computeLayout(const GraphState& graph, const LayoutParams& params,
                           const Positions3* warmStart) {
  LayoutResult r;
  r.positions3 = layout3d(graph, params, warmStart);
  auto resolved = resolveOverlaps2d(graph, projectTo2d(r.positions3), params);
  r.positions2 = std::move(resolved.positions);
  r.pinned = std::move(resolved.pinned);
  r.version = graph.version();
  return r;
}

json panelPoseToJson(const PanelPose& p) {
  const auto v = [](Vec3 a) { return json::array({a.x, a.y, a.z}); };
  return {{"documentId", p.documentId},
          {"center", v(p.center)},
          {"facingNormal", v(p.facingNormal)},
          {"anchorOffset", v(p.anchorOffset)}};
}

}  // namespace visrooms
