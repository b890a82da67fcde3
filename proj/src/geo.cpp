#include "popshift/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace popshift {

double meters_per_degree()
{
  return kEarthRadiusM * std::numbers::pi / 180.0;
}

LocalProjection::LocalProjection(GeoPoint anchor)
    : anchor_(anchor),
      kx_(meters_per_degree() * std::cos(anchor.lat * std::numbers::pi / 180.0)),
      ky_(meters_per_degree())
{
}

PlanarPoint LocalProjection::to_planar(GeoPoint p) const
{
  return {(p.lon - anchor_.lon) * kx_, (p.lat - anchor_.lat) * ky_};
}

GeoPoint LocalProjection::to_geo(PlanarPoint p) const
{
  return {anchor_.lon + p.x / kx_, anchor_.lat + p.y / ky_};
}

double signed_area(std::span<const PlanarPoint> ring)
{
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  // Shift to the first vertex to keep the cross products small.
  const PlanarPoint o = ring[0];
  double twice = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ax = ring[i].x - o.x, ay = ring[i].y - o.y;
    const double bx = ring[i + 1].x - o.x, by = ring[i + 1].y - o.y;
    twice += ax * by - bx * ay;
  }
  return twice / 2.0;
}

namespace {

enum class Side { left, right, bottom, top };

bool inside(const PlanarPoint& p, Side side, double edge)
{
  switch (side) {
  case Side::left: return p.x >= edge;
  case Side::right: return p.x <= edge;
  case Side::bottom: return p.y >= edge;
  case Side::top: return p.y <= edge;
  }
  return false;
}

PlanarPoint intersect(const PlanarPoint& a, const PlanarPoint& b, Side side, double edge)
{
  if (side == Side::left || side == Side::right) {
    const double t = (edge - a.x) / (b.x - a.x);
    return {edge, a.y + t * (b.y - a.y)};
  }
  const double t = (edge - a.y) / (b.y - a.y);
  return {a.x + t * (b.x - a.x), edge};
}

Ring clip_side(const Ring& in, Side side, double edge)
{
  Ring out;
  if (in.empty()) return out;
  out.reserve(in.size() + 4);
  PlanarPoint prev = in.back();
  bool prev_in = inside(prev, side, edge);
  for (const PlanarPoint& cur : in) {
    const bool cur_in = inside(cur, side, edge);
    if (cur_in) {
      if (!prev_in) out.push_back(intersect(prev, cur, side, edge));
      out.push_back(cur);
    } else if (prev_in) {
      out.push_back(intersect(prev, cur, side, edge));
    }
    prev = cur;
    prev_in = cur_in;
  }
  return out;
}

} // namespace

Ring clip_to_rect(std::span<const PlanarPoint> subject, const PlanarRect& rect)
{
  Ring r(subject.begin(), subject.end());
  r = clip_side(r, Side::left, rect.x_min);
  r = clip_side(r, Side::right, rect.x_max);
  r = clip_side(r, Side::bottom, rect.y_min);
  r = clip_side(r, Side::top, rect.y_max);
  return r;
}

PlanarRect bounding_rect(std::span<const PlanarPoint> ring)
{
  PlanarRect b{ring[0].x, ring[0].y, ring[0].x, ring[0].y};
  for (const PlanarPoint& p : ring) {
    b.x_min = std::min(b.x_min, p.x);
    b.x_max = std::max(b.x_max, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.y_max = std::max(b.y_max, p.y);
  }
  return b;
}

bool point_in_ring(GeoPoint p, std::span<const GeoPoint> ring)
{
  bool in = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[j];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
      if (p.lon < x) in = !in;
    }
  }
  return in;
}

namespace {

// Sign of the turn a->b->c, with near-collinear triples reported as 0 so that
// edges shared by adjacent polygons never count as crossings.
int orient(GeoPoint a, GeoPoint b, GeoPoint c)
{
  const double v = (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
  const double scale = std::hypot(b.lon - a.lon, b.lat - a.lat) * std::hypot(c.lon - a.lon, c.lat - a.lat);
  if (std::abs(v) <= 1e-12 * scale) return 0;
  return v > 0 ? 1 : -1;
}

} // namespace

bool segments_cross_properly(GeoPoint a, GeoPoint b, GeoPoint c, GeoPoint d)
{
  const int o1 = orient(a, b, c);
  const int o2 = orient(a, b, d);
  const int o3 = orient(c, d, a);
  const int o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

} // namespace popshift
