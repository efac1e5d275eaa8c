#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "visrooms/geometry.hpp"
#include "visrooms/graph/graph_state.hpp"
#include "visrooms/graph/ids.hpp"

namespace visrooms {

enum class AwarenessErrorCode { EmptySites, UnknownNode, DegenerateFrustum, SingularTransform };

class AwarenessError : public std::runtime_error {
 public:
  AwarenessError(AwarenessErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  AwarenessErrorCode code() const { return code_; }

 private:
  AwarenessErrorCode code_;
};

struct WeightedNode {
  NodeId node;
  double weight = 0.0;

  friend bool operator==(const WeightedNode&, const WeightedNode&) = default;
};

/// Node-relative cursor: the position is reconstructed on the receiving side
/// from its own coordinates for the listed nodes.
struct CursorHint {
  std::vector<WeightedNode> entries;
  Platform sourcePlatform = Platform::Flat2d;
  std::int64_t timestamp = 0;

  friend bool operator==(const CursorHint&, const CursorHint&) = default;
};

/// Wire form {user, ts, entries: [{node, w}]}.
nlohmann::json cursorHintToJson(const UserId& user, const CursorHint& hint);
CursorHint cursorHintFromJson(const nlohmann::json& j);

/// Laplace (non-Sibsonian) natural-neighbor weights of `query` over `sites`.
///
/// Interior queries: the query is inserted into the Voronoi diagram of the
/// sites; every site whose cell shares an edge with the query's cell gets
/// weight (edge length / distance), normalized to sum 1.
/// Degenerate inputs: a query on a site gets that site alone; fewer than
/// three sites or collinear sites use inverse-distance weights over all
/// sites; queries outside the convex hull use inverse distance over the two
/// nearest sites. Entries are sorted by node id.
std::vector<WeightedNode> naturalNeighborWeights2d(
    Vec2 query, const std::map<NodeId, Vec2>& sites);

struct HeadPose {
  Vec3 position;
  /// Identity looks down -z with +y up.
  Quat orientation;
  double verticalFov = 1.0;
  double horizontalFov = 1.0;

  Vec3 forward() const { return orientation.rotate({0.0, 0.0, -1.0}); }
  Vec3 up() const { return orientation.rotate({0.0, 1.0, 0.0}); }
  Vec3 right() const { return orientation.rotate({1.0, 0.0, 0.0}); }

  friend bool operator==(const HeadPose&, const HeadPose&) = default;
};

nlohmann::json headPoseToJson(const HeadPose& p);
HeadPose headPoseFromJson(const nlohmann::json& j);

struct Ray {
  Vec3 origin;
  Vec3 direction;
};

/// Image-plane coordinates (plane at unit distance along forward) of `p`, or
/// nothing when `p` is not in front of the viewer.
std::optional<Vec2> projectToImagePlane(const HeadPose& pose, Vec3 p);

/// Point of `ray` whose image-plane projection is used as the query: the
/// point on the ray closest to the nearest in-front site.
Vec2 rayImagePoint(const HeadPose& pose, const Ray& ray,
                   const std::map<NodeId, Vec2>& projectedSites,
                   const std::map<NodeId, Vec3>& sites3);

/// Perspective-projects the sites in front of the viewer and computes 2D
/// natural-neighbor weights at the ray's image-plane point.
std::vector<WeightedNode> rayCursorWeights3d(const HeadPose& pose, const Ray& ray,
                                             const std::map<NodeId, Vec3>& sites3);

/// Projected sites used by rayCursorWeights3d.
std::map<NodeId, Vec2> projectSites(const HeadPose& pose,
                                    const std::map<NodeId, Vec3>& sites3);

/// Weighted sum of target positions. Throws UnknownNode on a stale hint.
Vec2 relocateCursor(const std::vector<WeightedNode>& entries,
                    const std::map<NodeId, Vec2>& targets);
Vec3 relocateCursor(const std::vector<WeightedNode>& entries,
                    const std::map<NodeId, Vec3>& targets);

struct FrustumShape {
  UserId owner;
  Vec3 apex;
  /// Unit corner rays: top-left, top-right, bottom-right, bottom-left.
  std::array<Vec3, 4> cornerRays;
  Rgb color;
};

FrustumShape frustumFromPose(const UserId& owner, const HeadPose& pose, Rgb color);

/// Affine map from graph-plane XY to minimap coordinates: p' = M p + t.
struct MapTransform {
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
  double tx = 0.0, ty = 0.0;

  Vec2 apply(Vec2 p) const {
    return {m00 * p.x + m01 * p.y + tx, m10 * p.x + m11 * p.y + ty};
  }
  double determinant() const { return m00 * m11 - m01 * m10; }
};

struct MinimapFrustum {
  std::array<Vec2, 4> polygon;
  Vec2 headRayStart;
  Vec2 headRayEnd;
  Rgb color;
};

/// Rays that do not meet the z = 0 plane within this distance in front of the
/// apex are clipped here and dropped onto the plane.
inline constexpr double kFrustumFarDistance = 50.0;

/// Intersects the corner rays and the head ray (normalized sum of the corner
/// rays) with the z = 0 plane and maps the results into minimap space.
MinimapFrustum projectFrustumToMinimap(const FrustumShape& frustum,
                                       const MapTransform& map);

struct SelectionView {
  UserId user;
  Rgb color;
  std::optional<NodeId> selectedNode;
};

struct Highlight {
  NodeId node;
  Rgb color;
  UserId owner;

  friend bool operator==(const Highlight&, const Highlight&) = default;
};

/// Highlights `viewer` should draw: every other user's selection that still
/// names a live node.
std::vector<Highlight> selectionHighlight(const GraphState& state,
                                          const std::vector<SelectionView>& sessions,
                                          const UserId& viewer);

}  // namespace visrooms
