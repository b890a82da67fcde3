#pragma once

#include "popshift/geo.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace popshift {

enum class CellScheme { square, hexagon };

const char* scheme_name(CellScheme s);
CellScheme parse_scheme(const std::string& s);

struct CellId {
  std::uint32_t index = 0;
  auto operator<=>(const CellId&) const = default;
};

struct ColRow {
  int col = 0;
  int row = 0;
  bool operator==(const ColRow&) const = default;
};

enum class NeighborKind { contiguity_incl_self, fixed_distance_band };

struct NeighborScheme {
  NeighborKind kind = NeighborKind::contiguity_incl_self;
  double radius_m = 0.0;
  bool include_self = true;
};

// Analysis lattice laid out on a local equirectangular frame (see
// LocalProjection). Square cells are indexed row-major from the lower-left.
// Hexagons are pointy-top in an "odd-r" offset layout: index = row * n_cols +
// col, odd rows shifted half a pitch east, converted to axial coordinates for
// topology. cell_size_m is the edge length for squares and the
// center-to-center spacing (flat-to-flat width) for hexagons.
class GridSpec {
public:
  GridSpec(CellScheme scheme, GeoPoint origin, double cell_size_m, int n_cols, int n_rows,
           GeoPoint anchor, std::string crs_note = {});

  CellScheme scheme() const { return scheme_; }
  GeoPoint origin() const { return origin_; }
  GeoPoint anchor() const { return projection_.anchor(); }
  double cell_size_m() const { return cell_size_m_; }
  int n_cols() const { return n_cols_; }
  int n_rows() const { return n_rows_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(n_cols_) * n_rows_; }
  const std::string& crs_note() const { return crs_note_; }
  const LocalProjection& projection() const { return projection_; }

  bool contains(CellId c) const { return c.index < cell_count(); }
  CellId cell_at(ColRow cr) const;  // throws out_of_range
  ColRow col_row(CellId c) const;   // throws out_of_range
  bool in_grid(ColRow cr) const { return cr.col >= 0 && cr.row >= 0 && cr.col < n_cols_ && cr.row < n_rows_; }

  PlanarPoint planar_origin() const { return planar_origin_; }
  PlanarPoint centroid_planar(CellId c) const;
  Ring polygon_planar(CellId c) const;  // counter-clockwise, not closed
  double cell_area_m2() const;

  // Cell whose polygon contains p; points on the outer maximum edges belong to
  // the last row/column.
  std::optional<CellId> locate(GeoPoint p) const;
  std::optional<CellId> locate_planar(PlanarPoint p) const;

  bool operator==(const GridSpec& o) const;

private:
  CellScheme scheme_;
  GeoPoint origin_;
  double cell_size_m_;
  int n_cols_;
  int n_rows_;
  std::string crs_note_;
  LocalProjection projection_;
  PlanarPoint planar_origin_;
};

// Minimal lattice of the given scheme covering extent. The projection is
// anchored at the extent center.
GridSpec build_grid(const GeoBox& extent, double cell_size_m, CellScheme scheme);

// Extent in geographic coordinates spanning width_m x height_m around center.
GeoBox extent_from_meters(GeoPoint center, double width_m, double height_m);

std::vector<CellId> neighbors(const GridSpec& grid, CellId cell, const NeighborScheme& scheme);

GeoPoint cell_centroid(const GridSpec& grid, CellId cell);
std::vector<GeoPoint> cell_polygon(const GridSpec& grid, CellId cell);  // closed ring

nlohmann::json grid_to_json(const GridSpec& grid);
// Also accepts {"extent": [lon0, lat0, lon1, lat1]} or {"center": [lon, lat],
// "width_m", "height_m"} with cell_size_m and scheme; the lattice is built over it.
GridSpec grid_from_json(const nlohmann::json& j);

NeighborScheme neighbor_scheme_from_json(const nlohmann::json& j);

} // namespace popshift
