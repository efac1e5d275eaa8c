#include <cmath>
#include <stdexcept>

#include "visrooms/layout/layout.hpp"

namespace visrooms {

std::vector<PanelPose> semicircleDocLayout(std::span<const DocumentId> documents,
                                           double radius, Vec3 center) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (documents.empty()) throw std::invalid_argument("no documents to arrange");

  const double n = static_cast<double>(documents.size());
  std::vector<PanelPose> poses;
  poses.reserve(documents.size());
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const double theta = M_PI * (static_cast<double>(i) + 0.5) / n;
    const Vec3 radial{std::cos(theta), 0.0, std::sin(theta)};
    PanelPose pose;
    pose.documentId = documents[i];
    pose.center = center + radial * radius;
    pose.facingNormal = -radial;
    pose.anchorOffset = pose.facingNormal * (0.3 * radius);
    poses.push_back(std::move(pose));
  }
  return poses;
}

}  // namespace visrooms
