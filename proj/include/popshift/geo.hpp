#pragma once

#include <span>
#include <vector>

namespace popshift {

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

struct GeoBox {
  double lon_min = 0.0;
  double lat_min = 0.0;
  double lon_max = 0.0;
  double lat_max = 0.0;

  GeoPoint center() const { return {(lon_min + lon_max) / 2.0, (lat_min + lat_max) / 2.0}; }
  bool operator==(const GeoBox&) const = default;
};

// Local planar coordinates in meters.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
};

struct PlanarRect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
};

using Ring = std::vector<PlanarPoint>;

inline constexpr double kEarthRadiusM = 6371008.8;
double meters_per_degree();

// Equirectangular projection about an anchor. The forward map is affine in
// (lon, lat), so straight edges and area ratios carry over between frames.
class LocalProjection {
public:
  LocalProjection() = default;
  explicit LocalProjection(GeoPoint anchor);

  GeoPoint anchor() const { return anchor_; }
  PlanarPoint to_planar(GeoPoint p) const;
  GeoPoint to_geo(PlanarPoint p) const;

  bool operator==(const LocalProjection& o) const { return anchor_ == o.anchor_; }

private:
  GeoPoint anchor_{};
  double kx_ = 0.0;
  double ky_ = 0.0;
};

// Signed shoelace area; positive for counter-clockwise rings. The ring is
// implicitly closed (last vertex need not repeat the first).
double signed_area(std::span<const PlanarPoint> ring);

// Sutherland-Hodgman clip of a convex or concave subject against an
// axis-aligned rectangle.
Ring clip_to_rect(std::span<const PlanarPoint> subject, const PlanarRect& rect);

PlanarRect bounding_rect(std::span<const PlanarPoint> ring);

// Even-odd ray-casting test in plain (lon, lat) space.
bool point_in_ring(GeoPoint p, std::span<const GeoPoint> ring);

// Do segments ab and cd cross at a single interior point of both?
bool segments_cross_properly(GeoPoint a, GeoPoint b, GeoPoint c, GeoPoint d);

} // namespace popshift
