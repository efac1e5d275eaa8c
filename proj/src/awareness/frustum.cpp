#include <cmath>

#include "visrooms/awareness/awareness.hpp"

namespace visrooms {

FrustumShape frustumFromPose(const UserId& owner, const HeadPose& pose, Rgb color) {
  if (!(pose.horizontalFov > 0.0 && pose.horizontalFov < M_PI) ||
      !(pose.verticalFov > 0.0 && pose.verticalFov < M_PI)) {
    throw AwarenessError(AwarenessErrorCode::DegenerateFrustum,
                         "field of view must lie in (0, pi)");
  }
  const double th = std::tan(pose.horizontalFov / 2.0);
  const double tv = std::tan(pose.verticalFov / 2.0);
  const Vec3 f = pose.forward(), r = pose.right(), u = pose.up();
  const auto corner = [&](double sx, double sy) {
    return (f + r * (sx * th) + u * (sy * tv)).normalized();
  };
  return {owner,
          pose.position,
          {corner(-1, 1), corner(1, 1), corner(1, -1), corner(-1, -1)},
          color};
}

namespace {

Vec2 hitGraphPlane(Vec3 apex, Vec3 dir) {
  if (dir.z != 0.0) {
    const double t = -apex.z / dir.z;
    if (t > 0.0 && t <= kFrustumFarDistance) return {apex.x + dir.x * t, apex.y + dir.y * t};
  }
  const Vec3 far = apex + dir * kFrustumFarDistance;
  return {far.x, far.y};
}

void requireSound(const FrustumShape& f) {
  for (const Vec3& r : f.cornerRays) {
    if (!r.finite() || std::abs(r.norm() - 1.0) > 1e-9) {
      throw AwarenessError(AwarenessErrorCode::DegenerateFrustum,
                           "corner rays must be unit vectors");
    }
  }
  if (!f.apex.finite()) {
    throw AwarenessError(AwarenessErrorCode::DegenerateFrustum, "apex not finite");
  }
  const double diag1 = f.cornerRays[0].cross(f.cornerRays[2]).norm();
  const double diag2 = f.cornerRays[1].cross(f.cornerRays[3]).norm();
  if (diag1 <= 1e-12 || diag2 <= 1e-12) {
    throw AwarenessError(AwarenessErrorCode::DegenerateFrustum, "zero apex angle");
  }
}

}  // namespace

MinimapFrustum projectFrustumToMinimap(const FrustumShape& frustum,
                                       const MapTransform& map) {
  requireSound(frustum);
  const double det = map.determinant();
  if (!std::isfinite(det) || det == 0.0) {
    throw AwarenessError(AwarenessErrorCode::SingularTransform,
                         "minimap transform is not invertible");
  }
  MinimapFrustum out;
  Vec3 sum;
  for (std::size_t i = 0; i < 4; ++i) {
    out.polygon[i] = map.apply(hitGraphPlane(frustum.apex, frustum.cornerRays[i]));
    sum = sum + frustum.cornerRays[i];
  }
  out.headRayStart = map.apply({frustum.apex.x, frustum.apex.y});
  out.headRayEnd = map.apply(hitGraphPlane(frustum.apex, sum.normalized()));
  out.color = frustum.color;
  return out;
}

}  // namespace visrooms
