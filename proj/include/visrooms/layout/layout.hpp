#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "visrooms/geometry.hpp"
#include "visrooms/graph/graph_state.hpp"

namespace visrooms {

struct LayoutParams {
  double linkDistance = 30.0;
  double chargeStrength = -30.0;
  double centerAttraction = 0.1;
  double nodeRadius = 10.0;
  int maxIterations = 300;
  /// Per-tick alpha decay; 1 - 0.001^(1/300) rounds to this default.
  double coolingDecay = 0.0228;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on a violated bound.
  void validate() const;

  friend bool operator==(const LayoutParams&, const LayoutParams&) = default;
};

nlohmann::json layoutParamsToJson(const LayoutParams& p);
/// Missing keys keep their defaults.
LayoutParams layoutParamsFromJson(const nlohmann::json& j);

using Positions3 = std::map<NodeId, Vec3>;
using Positions2 = std::map<NodeId, Vec2>;

struct LayoutResult {
  Positions3 positions3;
  Positions2 positions2;
  std::set<NodeId> pinned;
  /// Graph version the layout was computed from.
  std::uint64_t version = 0;

  friend bool operator==(const LayoutResult&, const LayoutResult&) = default;
};

nlohmann::json layoutToJson(const LayoutResult& r);
LayoutResult layoutFromJson(const nlohmann::json& j);

/// Force-directed 3D layout (link springs, all-pairs charge, weak centering,
/// multiplicative cooling). Document anchors are held at their recorded
/// positions. Without `warmStart`, free nodes start on a seeded golden-angle
/// spiral; with it, nodes present in `warmStart` start from there and new
/// nodes from their recorded position, and the run starts cooler. Deterministic
/// in its inputs.
Positions3 layout3d(const GraphState& graph, const LayoutParams& params,
                    const Positions3* warmStart = nullptr);

/// Drops z.
Positions2 projectTo2d(const Positions3& positions3);

struct OverlapResolution {
  Positions2 positions;
  std::set<NodeId> pinned;
  /// Force ticks plus relaxation sweeps spent; at most maxIterations.
  int iterations = 0;
};

/// Nodes that overlap nobody are pinned and returned bitwise unchanged; the
/// rest are re-laid-out by the same force model in 2D (plus collision) with
/// pinned nodes fixed. Once the force pass stops making progress, pairwise
/// pushes finish the job within the remaining iteration budget. Never returns
/// more overlapping pairs than it was given.
OverlapResolution resolveOverlaps2d(const GraphState& graph,
                                    const Positions2& positions2,
                                    const LayoutParams& params);

/// Unordered pairs with center distance < 2 * nodeRadius.
std::size_t countOverlaps(const Positions2& positions, double nodeRadius);

/// layout3d, projection, and overlap resolution in one step.
LayoutResult computeLayout(const GraphState& graph, const LayoutParams& params,
                           const Positions3* warmStart = nullptr);

struct PanelPose {
  DocumentId documentId;
  Vec3 center;
  Vec3 facingNormal;
  Vec3 anchorOffset;

  friend bool operator==(const PanelPose&, const PanelPose&) = default;
};

nlohmann::json panelPoseToJson(const PanelPose& p);

/// Panel i of n at angle pi*(i+0.5)/n on the horizontal (x-z) semicircle
/// around `center`, at height center.y, facing the center; +z is forward.
/// The anchor sits 0.3*radius in front of the panel.
std::vector<PanelPose> semicircleDocLayout(std::span<const DocumentId> documents,
                                           double radius, Vec3 center);

}  // namespace visrooms
