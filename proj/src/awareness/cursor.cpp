#include <cmath>
#include <limits>

#include "visrooms/awareness/awareness.hpp"

namespace visrooms {

using nlohmann::json;

json cursorHintToJson(const UserId& user, const CursorHint& hint) {
  json entries = json::array();
  for (const auto& e : hint.entries) entries.push_back({{"node", e.node}, {"w", e.weight}});
  return {{"user", user},
          {"ts", hint.timestamp},
          {"platform", platformName(hint.sourcePlatform)},
          {"entries", entries}};
}

CursorHint cursorHintFromJson(const json& j) {
  CursorHint h;
  h.timestamp = j.at("ts").get<std::int64_t>();
  h.sourcePlatform = parsePlatform(j.value("platform", std::string("flat2d")));
  for (const auto& e : j.at("entries")) {
    h.entries.push_back({NodeId(e.at("node").get<std::string>()), e.at("w").get<double>()});
  }
  return h;
}

json headPoseToJson(const HeadPose& p) {
  return {{"position", {p.position.x, p.position.y, p.position.z}},
          {"orientation",
           {p.orientation.w, p.orientation.x, p.orientation.y, p.orientation.z}},
          {"verticalFov", p.verticalFov},
          {"horizontalFov", p.horizontalFov}};
}

HeadPose headPoseFromJson(const json& j) {
  HeadPose p;
  const json& pos = j.at("position");
  p.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
  const json& q = j.at("orientation");
  p.orientation = {q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                   q.at(3).get<double>()};
  p.verticalFov = j.at("verticalFov").get<double>();
  p.horizontalFov = j.at("horizontalFov").get<double>();
  return p;
}

namespace {

constexpr double kMinDepth = 1e-9;

}  // namespace

std::optional<Vec2> projectToImagePlane(const HeadPose& pose, Vec3 p) {
  const Vec3 v = p - pose.position;
  const double depth = v.dot(pose.forward());
  if (depth <= kMinDepth) return std::nullopt;
  return Vec2{v.dot(pose.right()) / depth, v.dot(pose.up()) / depth};
}

std::map<NodeId, Vec2> projectSites(const HeadPose& pose,
                                    const std::map<NodeId, Vec3>& sites3) {
  // Sites on one line of sight collapse to one image point; keep the nearest.
  std::map<std::pair<double, double>, std::pair<double, NodeId>> byImagePoint;
  const Vec3 f = pose.forward();
  for (const auto& [id, p] : sites3) {
    auto img = projectToImagePlane(pose, p);
    if (!img) continue;
    const double depth = (p - pose.position).dot(f);
    auto [it, inserted] =
        byImagePoint.try_emplace({img->x, img->y}, depth, id);
    if (!inserted && depth < it->second.first) it->second = {depth, id};
  }
  std::map<NodeId, Vec2> out;
  for (const auto& [xy, entry] : byImagePoint) {
    out.emplace(entry.second, Vec2{xy.first, xy.second});
  }
  return out;
}

Vec2 rayImagePoint(const HeadPose& pose, const Ray& ray,
                   const std::map<NodeId, Vec2>& projectedSites,
                   const std::map<NodeId, Vec3>& sites3) {
  const Vec3 d = ray.direction.normalized();
  double best = std::numeric_limits<double>::infinity();
  Vec3 bestPoint = ray.origin;
  for (const auto& [id, img] : projectedSites) {
    const Vec3 s = sites3.at(id);
    const double t = std::max(0.0, (s - ray.origin).dot(d));
    const Vec3 closest = ray.origin + d * t;
    const double dist = (s - closest).norm();
    if (dist < best) {
      best = dist;
      bestPoint = closest;
    }
  }
  if (auto img = projectToImagePlane(pose, bestPoint)) return *img;
  // The chosen point sits at the eye; use the ray's vanishing point instead.
  const double depth = d.dot(pose.forward());
  if (depth <= kMinDepth) {
    throw AwarenessError(AwarenessErrorCode::EmptySites, "ray points behind the viewer");
  }
  return {d.dot(pose.right()) / depth, d.dot(pose.up()) / depth};
}

std::vector<WeightedNode> rayCursorWeights3d(const HeadPose& pose, const Ray& ray,
                                             const std::map<NodeId, Vec3>& sites3) {
  const auto projected = projectSites(pose, sites3);
  if (projected.empty()) {
    throw AwarenessError(AwarenessErrorCode::EmptySites, "all sites behind the viewer");
  }
  const Vec2 query = rayImagePoint(pose, ray, projected, sites3);
  return naturalNeighborWeights2d(query, projected);
}

namespace {

template <class V>
V relocate(const std::vector<WeightedNode>& entries, const std::map<NodeId, V>& targets) {
  V out{};
  for (const auto& e : entries) {
    auto it = targets.find(e.node);
    if (it == targets.end()) {
      throw AwarenessError(AwarenessErrorCode::UnknownNode,
                           "cursor references unknown node " + e.node.value);
    }
    out = out + it->second * e.weight;
  }
  return out;
}

}  // namespace

Vec2 relocateCursor(const std::vector<WeightedNode>& entries,
                    const std::map<NodeId, Vec2>& targets) {
  return relocate(entries, targets);
}

Vec3 relocateCursor(const std::vector<WeightedNode>& entries,
                    const std::map<NodeId, Vec3>& targets) {
  return relocate(entries, targets);
}

}  // namespace visrooms
