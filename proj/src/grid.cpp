#include "popshift/grid.hpp"

#include "popshift/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace popshift {

const char* scheme_name(CellScheme s)
{
  return s == CellScheme::square ? "square" : "hexagon";
}

CellScheme parse_scheme(const std::string& s)
{
  if (s == "square") return CellScheme::square;
  if (s == "hexagon" || s == "hex") return CellScheme::hexagon;
  throw Error(ErrorKind::config, "unknown cell scheme '" + s + "'");
}

namespace {

const double kSqrt3 = std::sqrt(3.0);

double hex_radius(double pitch) { return pitch / kSqrt3; }
double hex_row_pitch(double pitch) { return 1.5 * hex_radius(pitch); }

// Ceiling that absorbs round-off from the projection round trip, so that an
// extent of exactly k cells does not get a k+1-th sliver column.
int tolerant_ceil(double v)
{
  return static_cast<int>(std::ceil(v - 1e-9 * std::max(1.0, v)));
}

// odd-r offset <-> axial
struct Axial {
  int q;
  int r;
};

Axial to_axial(ColRow cr) { return {cr.col - (cr.row - (cr.row & 1)) / 2, cr.row}; }
ColRow from_axial(Axial a) { return {a.q + (a.r - (a.r & 1)) / 2, a.r}; }

Axial cube_round(double qf, double rf)
{
  const double sf = -qf - rf;
  double q = std::round(qf), r = std::round(rf), s = std::round(sf);
  const double dq = std::abs(q - qf), dr = std::abs(r - rf), ds = std::abs(s - sf);
  if (dq > dr && dq > ds) {
    q = -r - s;
  } else if (dr > ds) {
    r = -q - s;
  }
  return {static_cast<int>(q), static_cast<int>(r)};
}

} // namespace

GridSpec::GridSpec(CellScheme scheme, GeoPoint origin, double cell_size_m, int n_cols, int n_rows,
                   GeoPoint anchor, std::string crs_note)
    : scheme_(scheme), origin_(origin), cell_size_m_(cell_size_m), n_cols_(n_cols), n_rows_(n_rows),
      crs_note_(std::move(crs_note)), projection_(anchor)
{
  if (!(cell_size_m > 0.0) || !std::isfinite(cell_size_m))
    throw Error(ErrorKind::config, "cell_size_m must be positive");
  if (n_cols < 1 || n_rows < 1) throw Error(ErrorKind::config, "grid needs at least one column and row");
  if (crs_note_.empty()) {
    std::ostringstream os;
    os.precision(10);
    os << "local-equirectangular anchor=(" << anchor.lon << "," << anchor.lat << ")";
    crs_note_ = os.str();
  }
  planar_origin_ = projection_.to_planar(origin_);
}

CellId GridSpec::cell_at(ColRow cr) const
{
  if (!in_grid(cr)) throw Error(ErrorKind::out_of_range, "column/row outside grid");
  return {static_cast<std::uint32_t>(cr.row * n_cols_ + cr.col)};
}

ColRow GridSpec::col_row(CellId c) const
{
  if (!contains(c)) throw Error(ErrorKind::out_of_range, "cell id " + std::to_string(c.index) + " outside grid");
  return {static_cast<int>(c.index % n_cols_), static_cast<int>(c.index / n_cols_)};
}

PlanarPoint GridSpec::centroid_planar(CellId c) const
{
  const ColRow cr = col_row(c);
  if (scheme_ == CellScheme::square) {
    return {planar_origin_.x + (cr.col + 0.5) * cell_size_m_, planar_origin_.y + (cr.row + 0.5) * cell_size_m_};
  }
  return {planar_origin_.x + (cr.col + 0.5 * (cr.row & 1)) * cell_size_m_,
          planar_origin_.y + cr.row * hex_row_pitch(cell_size_m_)};
}

Ring GridSpec::polygon_planar(CellId c) const
{
  if (scheme_ == CellScheme::square) {
    const ColRow cr = col_row(c);
    const double x0 = planar_origin_.x + cr.col * cell_size_m_;
    const double y0 = planar_origin_.y + cr.row * cell_size_m_;
    const double x1 = planar_origin_.x + (cr.col + 1) * cell_size_m_;
    const double y1 = planar_origin_.y + (cr.row + 1) * cell_size_m_;
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  }
  const PlanarPoint ctr = centroid_planar(c);
  const double radius = hex_radius(cell_size_m_);
  Ring ring;
  ring.reserve(6);
  for (int k = 0; k < 6; ++k) {
    const double a = (30.0 + 60.0 * k) * std::numbers::pi / 180.0;
    ring.push_back({ctr.x + radius * std::cos(a), ctr.y + radius * std::sin(a)});
  }
  return ring;
}

double GridSpec::cell_area_m2() const
{
  if (scheme_ == CellScheme::square) return cell_size_m_ * cell_size_m_;
  const double radius = hex_radius(cell_size_m_);
  return 1.5 * kSqrt3 * radius * radius;
}

std::optional<CellId> GridSpec::locate(GeoPoint p) const
{
  return locate_planar(projection_.to_planar(p));
}

std::optional<CellId> GridSpec::locate_planar(PlanarPoint p) const
{
  const double dx = p.x - planar_origin_.x;
  const double dy = p.y - planar_origin_.y;
  if (!std::isfinite(dx) || !std::isfinite(dy)) return std::nullopt;
  ColRow cr;
  if (scheme_ == CellScheme::square) {
    const double fx = dx / cell_size_m_;
    const double fy = dy / cell_size_m_;
    constexpr double tol = 1e-9;
    if (fx < -tol || fy < -tol || fx > n_cols_ + tol || fy > n_rows_ + tol) return std::nullopt;
    cr.col = std::clamp(static_cast<int>(std::floor(fx)), 0, n_cols_ - 1);
    cr.row = std::clamp(static_cast<int>(std::floor(fy)), 0, n_rows_ - 1);
  } else {
    const double rf = dy / hex_row_pitch(cell_size_m_);
    const double qf = dx / cell_size_m_ - rf / 2.0;
    cr = from_axial(cube_round(qf, rf));
    if (!in_grid(cr)) return std::nullopt;
  }
  return cell_at(cr);
}

bool GridSpec::operator==(const GridSpec& o) const
{
  return scheme_ == o.scheme_ && origin_ == o.origin_ && cell_size_m_ == o.cell_size_m_ && n_cols_ == o.n_cols_ &&
         n_rows_ == o.n_rows_ && projection_ == o.projection_;
}

GridSpec build_grid(const GeoBox& extent, double cell_size_m, CellScheme scheme)
{
  if (!(cell_size_m > 0.0) || !std::isfinite(cell_size_m))
    throw Error(ErrorKind::config, "cell_size_m must be positive");
  const GeoPoint anchor = extent.center();
  const LocalProjection proj(anchor);
  const PlanarPoint ll = proj.to_planar({extent.lon_min, extent.lat_min});
  const PlanarPoint ur = proj.to_planar({extent.lon_max, extent.lat_max});
  const double width = ur.x - ll.x;
  const double height = ur.y - ll.y;
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height))
    throw Error(ErrorKind::invalid_extent, "extent has zero or negative width/height");

  int n_cols = 0, n_rows = 0;
  if (scheme == CellScheme::square) {
    n_cols = tolerant_ceil(width / cell_size_m);
    n_rows = tolerant_ceil(height / cell_size_m);
  } else {
    // Cell (0,0) is centered on the lower-left corner; one extra column and
    // row guarantee every extent point has its nearest center in the grid.
    n_cols = tolerant_ceil(width / cell_size_m) + 1;
    n_rows = tolerant_ceil(height / hex_row_pitch(cell_size_m)) + 1;
  }
  return GridSpec(scheme, {extent.lon_min, extent.lat_min}, cell_size_m, std::max(1, n_cols), std::max(1, n_rows),
                  anchor);
}

GeoBox extent_from_meters(GeoPoint center, double width_m, double height_m)
{
  const LocalProjection proj(center);
  const GeoPoint ll = proj.to_geo({-width_m / 2.0, -height_m / 2.0});
  const GeoPoint ur = proj.to_geo({width_m / 2.0, height_m / 2.0});
  return {ll.lon, ll.lat, ur.lon, ur.lat};
}

std::vector<CellId> neighbors(const GridSpec& grid, CellId cell, const NeighborScheme& scheme)
{
  const ColRow cr = grid.col_row(cell);
  std::vector<CellId> out;

  if (scheme.kind == NeighborKind::contiguity_incl_self) {
    if (grid.scheme() == CellScheme::square) {
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0 && !scheme.include_self) continue;
          const ColRow n{cr.col + dc, cr.row + dr};
          if (grid.in_grid(n)) out.push_back(grid.cell_at(n));
        }
    } else {
      static constexpr std::array<std::array<int, 2>, 6> dirs{{{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}}};
      const Axial a = to_axial(cr);
      if (scheme.include_self) out.push_back(cell);
      for (const auto& d : dirs) {
        const ColRow n = from_axial({a.q + d[0], a.r + d[1]});
        if (grid.in_grid(n)) out.push_back(grid.cell_at(n));
      }
    }
  } else {
    if (scheme.radius_m < grid.cell_size_m())
      throw Error(ErrorKind::config, "distance band radius must be at least one cell size");
    const double pitch_y = grid.scheme() == CellScheme::square ? grid.cell_size_m() : hex_row_pitch(grid.cell_size_m());
    const int reach_r = static_cast<int>(std::ceil(scheme.radius_m / pitch_y)) + 1;
    const int reach_c = static_cast<int>(std::ceil(scheme.radius_m / grid.cell_size_m())) + 1;
    const PlanarPoint c0 = grid.centroid_planar(cell);
    const double r2 = scheme.radius_m * scheme.radius_m * (1.0 + 1e-9);
    for (int row = cr.row - reach_r; row <= cr.row + reach_r; ++row)
      for (int col = cr.col - reach_c; col <= cr.col + reach_c; ++col) {
        const ColRow n{col, row};
        if (!grid.in_grid(n)) continue;
        const CellId id = grid.cell_at(n);
        if (id == cell) {
          if (scheme.include_self) out.push_back(id);
          continue;
        }
        const PlanarPoint c1 = grid.centroid_planar(id);
        const double ddx = c1.x - c0.x, ddy = c1.y - c0.y;
        if (ddx * ddx + ddy * ddy <= r2) out.push_back(id);
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

GeoPoint cell_centroid(const GridSpec& grid, CellId cell)
{
  return grid.projection().to_geo(grid.centroid_planar(cell));
}

std::vector<GeoPoint> cell_polygon(const GridSpec& grid, CellId cell)
{
  const Ring ring = grid.polygon_planar(cell);
  std::vector<GeoPoint> out;
  out.reserve(ring.size() + 1);
  for (const PlanarPoint& p : ring) out.push_back(grid.projection().to_geo(p));
  out.push_back(out.front());
  return out;
}

nlohmann::json grid_to_json(const GridSpec& grid)
{
  return {
      {"scheme", scheme_name(grid.scheme())},
      {"origin", {grid.origin().lon, grid.origin().lat}},
      {"anchor", {grid.anchor().lon, grid.anchor().lat}},
      {"cell_size_m", grid.cell_size_m()},
      {"n_cols", grid.n_cols()},
      {"n_rows", grid.n_rows()},
      {"crs_note", grid.crs_note()},
  };
}

GridSpec grid_from_json(const nlohmann::json& j)
{
  try {
    if (j.contains("extent")) {
      const auto& e = j.at("extent");
      const GeoBox box{e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>(), e.at(3).get<double>()};
      return build_grid(box, j.value("cell_size_m", 1000.0), parse_scheme(j.value("scheme", std::string("square"))));
    }
    if (j.contains("center")) {
      const auto& c = j.at("center");
      const GeoBox box = extent_from_meters({c.at(0).get<double>(), c.at(1).get<double>()},
                                            j.at("width_m").get<double>(), j.at("height_m").get<double>());
      return build_grid(box, j.value("cell_size_m", 1000.0), parse_scheme(j.value("scheme", std::string("square"))));
    }
    const auto& o = j.at("origin");
    const auto& a = j.at("anchor");
    return GridSpec(parse_scheme(j.at("scheme").get<std::string>()), {o.at(0).get<double>(), o.at(1).get<double>()},
                    j.at("cell_size_m").get<double>(), j.at("n_cols").get<int>(), j.at("n_rows").get<int>(),
                    {a.at(0).get<double>(), a.at(1).get<double>()}, j.value("crs_note", std::string()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad grid descriptor: ") + e.what());
  }
}

NeighborScheme neighbor_scheme_from_json(const nlohmann::json& j)
{
  NeighborScheme s;
  if (j.is_string()) {
    const auto k = j.get<std::string>();
    if (k == "contiguity_incl_self") return s;
    throw Error(ErrorKind::config, "neighbor scheme '" + k + "' needs a radius; use an object");
  }
  const std::string kind = j.value("kind", std::string("contiguity_incl_self"));
  if (kind == "contiguity_incl_self") {
    s.kind = NeighborKind::contiguity_incl_self;
  } else if (kind == "fixed_distance_band") {
    s.kind = NeighborKind::fixed_distance_band;
    s.radius_m = j.at("radius_m").get<double>();
  } else {
    throw Error(ErrorKind::config, "unknown neighbor scheme '" + kind + "'");
  }
  return s;
}

} // namespace popshift
