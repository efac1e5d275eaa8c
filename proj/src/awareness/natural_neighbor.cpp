#include <algorithm>
#include <cmath>
#include <numeric>

#include "visrooms/awareness/awareness.hpp"

namespace visrooms {

namespace {

struct Site {
  const NodeId* id;
  Vec2 p;  // relative to the query
  double dist;
};

std::vector<WeightedNode> inverseDistance(std::vector<Site> sites,
                                          std::size_t keep) {
  std::stable_sort(sites.begin(), sites.end(),
                   [](const Site& a, const Site& b) { return a.dist < b.dist; });
  sites.resize(std::min(keep, sites.size()));
  std::sort(sites.begin(), sites.end(),
            [](const Site& a, const Site& b) { return *a.id < *b.id; });
  double total = 0.0;
  for (const Site& s : sites) total += 1.0 / s.dist;
  std::vector<WeightedNode> out;
  for (const Site& s : sites) out.push_back({*s.id, (1.0 / s.dist) / total});
  return out;
}

// Andrew's monotone chain; strictly convex, counter-clockwise.
std::vector<Vec2> convexHull(std::vector<Vec2> pts, double tol) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  const auto turn = [](Vec2 o, Vec2 a, Vec2 b) { return (a - o).cross(b - o); };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], pts[i]) <= tol) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && turn(hull[k - 2], hull[k - 1], pts[i - 1]) <= tol) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

bool strictlyInside(const std::vector<Vec2>& hull, Vec2 q, double tol) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 a = hull[i];
    const Vec2 b = hull[(i + 1) % hull.size()];
    if ((b - a).cross(q - a) <= tol) return false;
  }
  return true;
}

/// Convex polygon whose edge k runs from vertex k to vertex k+1 and lies on
/// the bisector with site `tag[k]` (-1 for the bounding box).
struct TaggedPolygon {
  std::vector<Vec2> v;
  std::vector<int> tag;
};

// Keeps the side {x : x . p <= |p|^2 / 2}, i.e. points at least as close to
// the origin (the query) as to site p.
TaggedPolygon clip(const TaggedPolygon& poly, Vec2 p, int site) {
  const double c = 0.5 * p.dot(p);
  TaggedPolygon out;
  const std::size_t m = poly.v.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Vec2 a = poly.v[k];
    const Vec2 b = poly.v[(k + 1) % m];
    const double fa = a.dot(p) - c;
    const double fb = b.dot(p) - c;
    const bool inA = fa <= 0.0;
    const bool inB = fb <= 0.0;
    if (inA) {
      out.v.push_back(a);
      out.tag.push_back(poly.tag[k]);
      if (!inB) {
        out.v.push_back(a + (b - a) * (fa / (fa - fb)));
        out.tag.push_back(site);
      }
    } else if (inB) {
      out.v.push_back(a + (b - a) * (fa / (fa - fb)));
      out.tag.push_back(poly.tag[k]);
    }
  }
  return out;
}

/// Edge length shared with each site; empty when the cell is unbounded
/// within `halfSize`.
std::optional<std::vector<double>> cellEdgeLengths(const std::vector<Site>& sites,
                                                   const std::vector<std::size_t>& order,
                                                   double halfSize, double tol) {
  TaggedPolygon cell;
  cell.v = {{-halfSize, -halfSize}, {halfSize, -halfSize},
            {halfSize, halfSize},   {-halfSize, halfSize}};
  cell.tag = {-1, -1, -1, -1};
  for (std::size_t idx : order) {
    cell = clip(cell, sites[idx].p, static_cast<int>(idx));
    if (cell.v.empty()) return std::vector<double>(sites.size(), 0.0);
  }
  std::vector<double> length(sites.size(), 0.0);
  const std::size_t m = cell.v.size();
  for (std::size_t k = 0; k < m; ++k) {
    const double len = (cell.v[(k + 1) % m] - cell.v[k]).norm();
    if (len <= tol) continue;
    if (cell.tag[k] < 0) return std::nullopt;
    length[static_cast<std::size_t>(cell.tag[k])] += len;
  }
  return length;
}

}  // namespace

std::vector<WeightedNode> naturalNeighborWeights2d(
    Vec2 query, const std::map<NodeId, Vec2>& sites) {
  if (sites.empty()) {
    throw AwarenessError(AwarenessErrorCode::EmptySites, "no sites");
  }

  std::vector<Site> rel;
  rel.reserve(sites.size());
  double scale = 0.0;
  for (const auto& [id, p] : sites) {
    const Vec2 d = p - query;
    rel.push_back({&id, d, d.norm()});
    scale = std::max({scale, std::abs(d.x), std::abs(d.y)});
  }
  if (scale == 0.0) scale = 1.0;
  const double lengthTol = 1e-12 * scale;
  const double areaTol = 1e-12 * scale * scale;

  for (const Site& s : rel) {
    if (s.dist <= lengthTol) return {{*s.id, 1.0}};
  }
  if (rel.size() < 3) return inverseDistance(rel, rel.size());

  std::vector<Vec2> pts;
  for (const Site& s : rel) pts.push_back(s.p);
  const std::vector<Vec2> hull = convexHull(pts, areaTol);
  if (hull.size() < 3) return inverseDistance(rel, rel.size());  // collinear
  if (!strictlyInside(hull, {0.0, 0.0}, areaTol)) return inverseDistance(rel, 2);

  // Nearest sites first keeps the working polygon small.
  std::vector<std::size_t> order(rel.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rel[a].dist < rel[b].dist;
  });

  std::optional<std::vector<double>> lengths;
  double halfSize = 4.0 * scale;
  for (int attempt = 0; attempt < 24 && !lengths; ++attempt, halfSize *= 8.0) {
    lengths = cellEdgeLengths(rel, order, halfSize, lengthTol);
  }
  if (!lengths) return inverseDistance(rel, 2);

  double total = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    total += (*lengths)[i] / rel[i].dist;
  }
  if (!(total > 0.0)) return inverseDistance(rel, 2);

  std::vector<WeightedNode> out;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if ((*lengths)[i] > 0.0) {
      out.push_back({*rel[i].id, ((*lengths)[i] / rel[i].dist) / total});
    }
  }
  return out;
}

}  // namespace visrooms
