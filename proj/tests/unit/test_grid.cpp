#include "popshift/error.hpp"
#include "popshift/grid.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace popshift;

namespace {

GridSpec square(int cols, int rows, double size = 1000.0)
{
  return build_grid(extent_from_meters({-118.0, 34.0}, cols * size, rows * size), size, CellScheme::square);
}

std::size_t nbr_count(const GridSpec& g, ColRow cr, const NeighborScheme& s = {})
{
  return neighbors(g, g.cell_at(cr), s).size();
}

} // namespace

TEST(Grid, BuildGridCoversExtentMinimally)
{
  const GridSpec g = square(7, 5);
  EXPECT_EQ(g.n_cols(), 7);
  EXPECT_EQ(g.n_rows(), 5);
  EXPECT_EQ(g.cell_count(), 35u);
  EXPECT_DOUBLE_EQ(g.cell_area_m2(), 1e6);
}

TEST(Grid, RejectsEmptyExtent)
{
  try {
    build_grid({-118.0, 34.0, -118.0, 34.5}, 1000.0, CellScheme::square);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_extent);
  }
  EXPECT_THROW(build_grid({-118.0, 34.0, -117.0, 35.0}, 0.0, CellScheme::square), Error);
}

TEST(Grid, RowMajorFromLowerLeft)
{
  const GridSpec g = square(4, 3);
  EXPECT_EQ(g.cell_at({0, 0}).index, 0u);
  EXPECT_EQ(g.cell_at({3, 0}).index, 3u);
  EXPECT_EQ(g.cell_at({0, 1}).index, 4u);
  EXPECT_EQ(g.col_row({11}), (ColRow{3, 2}));
  const GeoPoint a = cell_centroid(g, {0}), b = cell_centroid(g, {1}), c = cell_centroid(g, {4});
  EXPECT_LT(a.lon, b.lon);
  EXPECT_LT(a.lat, c.lat);
}

TEST(Grid, OutOfRangeCells)
{
  const GridSpec g = square(3, 3);
  try {
    g.cell_at({3, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::out_of_range);
  }
  EXPECT_THROW(g.col_row({9}), Error);
}

TEST(Grid, LocateInvertsCentroid)
{
  for (CellScheme scheme : {CellScheme::square, CellScheme::hexagon}) {
    const GridSpec g = build_grid(extent_from_meters({10.0, 50.0}, 9000.0, 7000.0), 1000.0, scheme);
    for (std::uint32_t i = 0; i < g.cell_count(); ++i) {
      const auto found = g.locate(cell_centroid(g, {i}));
      ASSERT_TRUE(found);
      EXPECT_EQ(found->index, i);
    }
  }
}

TEST(Grid, LocateOutsideIsEmpty)
{
  const GridSpec g = square(3, 3);
  EXPECT_FALSE(g.locate({-119.0, 34.0}));
}

TEST(Grid, PolygonIsClosedAndMatchesArea)
{
  const GridSpec g = square(2, 2, 500.0);
  const auto ring = cell_polygon(g, {3});
  ASSERT_EQ(ring.size(), 5u);
  EXPECT_EQ(ring.front(), ring.back());
  EXPECT_NEAR(std::abs(signed_area(g.polygon_planar({3}))), 250000.0, 1e-6);
}

TEST(Grid, HexagonAreaFromSpacing)
{
  const GridSpec g = build_grid(extent_from_meters({0.0, 0.0}, 5000.0, 5000.0), 1000.0, CellScheme::hexagon);
  // flat-to-flat width w gives area sqrt(3)/2 * w^2
  EXPECT_NEAR(g.cell_area_m2(), std::sqrt(3.0) / 2.0 * 1e6, 1e-6);
  EXPECT_NEAR(std::abs(signed_area(g.polygon_planar({0}))), g.cell_area_m2(), 1e-6);
}

TEST(Grid, SquareContiguityIncludesSelf)
{
  const GridSpec g = square(5, 5);
  EXPECT_EQ(nbr_count(g, {0, 0}), 4u);
  EXPECT_EQ(nbr_count(g, {2, 0}), 6u);
  EXPECT_EQ(nbr_count(g, {2, 2}), 9u);
  NeighborScheme no_self;
  no_self.include_self = false;
  EXPECT_EQ(nbr_count(g, {2, 2}, no_self), 8u);
}

TEST(Grid, HexContiguityHasSixNeighbors)
{
  const GridSpec g = build_grid(extent_from_meters({0.0, 0.0}, 10000.0, 10000.0), 1000.0, CellScheme::hexagon);
  const ColRow mid{g.n_cols() / 2, g.n_rows() / 2};
  const auto n = neighbors(g, g.cell_at(mid), {});
  EXPECT_EQ(n.size(), 7u);
  const PlanarPoint c = g.centroid_planar(g.cell_at(mid));
  for (CellId id : n) {
    if (id == g.cell_at(mid)) continue;
    const PlanarPoint p = g.centroid_planar(id);
    EXPECT_NEAR(std::hypot(p.x - c.x, p.y - c.y), 1000.0, 1e-6);
  }
}

TEST(Grid, NeighborhoodIsSymmetric)
{
  for (CellScheme scheme : {CellScheme::square, CellScheme::hexagon}) {
    const GridSpec g = build_grid(extent_from_meters({0.0, 0.0}, 6000.0, 6000.0), 1000.0, scheme);
    for (std::uint32_t i = 0; i < g.cell_count(); ++i)
      for (CellId j : neighbors(g, {i}, {})) {
        const auto back = neighbors(g, j, {});
        EXPECT_NE(std::find(back.begin(), back.end(), CellId{i}), back.end());
      }
  }
}

TEST(Grid, DistanceBand)
{
  const GridSpec g = square(9, 9);
  NeighborScheme s{NeighborKind::fixed_distance_band, 1500.0, true};
  EXPECT_EQ(nbr_count(g, {4, 4}, s), 9u);
  s.radius_m = 2000.0;
  EXPECT_EQ(nbr_count(g, {4, 4}, s), 13u);
  s.radius_m = 500.0;
  EXPECT_THROW(nbr_count(g, {4, 4}, s), Error);
}

TEST(Grid, JsonRoundTrip)
{
  for (CellScheme scheme : {CellScheme::square, CellScheme::hexagon}) {
    const GridSpec g = build_grid(extent_from_meters({-100.5, 40.25}, 12000.0, 8000.0), 1000.0, scheme);
    EXPECT_EQ(grid_from_json(grid_to_json(g)), g);
  }
}

TEST(Grid, JsonCenterForm)
{
  const nlohmann::json j{{"center", {-118.75, 34.1}}, {"width_m", 5000}, {"height_m", 3000}, {"cell_size_m", 1000}};
  const GridSpec g = grid_from_json(j);
  EXPECT_EQ(g, build_grid(extent_from_meters({-118.75, 34.1}, 5000, 3000), 1000, CellScheme::square));
  EXPECT_THROW(grid_from_json(nlohmann::json{{"scheme", "square"}}), Error);
}

TEST(Grid, NeighborSchemeFromJson)
{
  EXPECT_EQ(neighbor_scheme_from_json("contiguity_incl_self").kind, NeighborKind::contiguity_incl_self);
  const NeighborScheme s =
      neighbor_scheme_from_json(nlohmann::json{{"kind", "fixed_distance_band"}, {"radius_m", 2500.0}});
  EXPECT_EQ(s.kind, NeighborKind::fixed_distance_band);
  EXPECT_DOUBLE_EQ(s.radius_m, 2500.0);
  EXPECT_THROW(neighbor_scheme_from_json("fixed_distance_band"), Error);
}

TEST(Geo, ProjectionRoundTrip)
{
  const LocalProjection p({-118.75, 34.1});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const GeoPoint g{-118.75 + u(rng), 34.1 + u(rng)};
    const GeoPoint back = p.to_geo(p.to_planar(g));
    EXPECT_NEAR(back.lon, g.lon, 1e-12);
    EXPECT_NEAR(back.lat, g.lat, 1e-12);
  }
}

TEST(Geo, ClipToRect)
{
  const Ring tri{{0, 0}, {4, 0}, {0, 4}};
  const Ring clipped = clip_to_rect(tri, {0, 0, 2, 2});
  // the triangle covers all of the 2x2 square
  EXPECT_NEAR(std::abs(signed_area(clipped)), 4.0, 1e-12);
  EXPECT_TRUE(clip_to_rect(tri, {5, 5, 6, 6}).empty());
  EXPECT_NEAR(std::abs(signed_area(clip_to_rect(tri, {1, 1, 3, 3}))), 2.0, 1e-12);
}

TEST(Geo, PointInRingAndCrossing)
{
  const std::vector<GeoPoint> ring{{0, 0}, {2, 0}, {2, 2}, {0, 2}, {0, 0}};
  EXPECT_TRUE(point_in_ring({1, 1}, ring));
  EXPECT_FALSE(point_in_ring({3, 1}, ring));
  EXPECT_TRUE(segments_cross_properly({0, 0}, {2, 2}, {0, 2}, {2, 0}));
  EXPECT_FALSE(segments_cross_properly({0, 0}, {1, 0}, {0, 1}, {1, 1}));
}
