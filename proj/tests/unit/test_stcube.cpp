#include "popshift/error.hpp"
#include "popshift/stcube.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace popshift;

namespace {

const Timestamp t0 = *parse_timestamp("2020-05-01T01:00:00Z");

Timestamp at(int k)
{
  return t0 + std::chrono::hours(8) * k;
}

GridSpec grid(int cols = 3, int rows = 2)
{
  return build_grid(extent_from_meters({2.0, 48.0}, cols * 1000.0, rows * 1000.0), 1000.0, CellScheme::square);
}

std::vector<Timestamp> times(int n)
{
  std::vector<Timestamp> t;
  for (int k = 0; k < n; ++k) t.push_back(at(k));
  return t;
}

Event ev(int k, EventKind kind, const std::string& label, std::optional<std::vector<CellId>> zone = {})
{
  return {at(k), kind, label, std::move(zone)};
}

} // namespace

TEST(Cube, BuildFromSlicesMarksMissing)
{
  const GridSpec g = grid();
  std::vector<Slice> slices(3);
  for (int k = 0; k < 3; ++k) {
    slices[k].time = at(k);
    for (std::uint32_t c = 0; c < 6; ++c) {
      if (c == 2 && k == 1) continue;
      SliceRecord r;
      r.cell = {c};
      r.n_baseline = 10;
      r.n_crisis = 10 + c + k;
      r.n_difference = c + k;
      r.baseline_sigma = c == 5 ? std::optional<double>() : std::optional<double>(2.0);
      slices[k].records[{c}] = r;
    }
  }
  const SliceSet s(g, slices);
  const SpaceTimeCube z = build_cube(s, CubeVariable::z_score);
  EXPECT_EQ(z.cell_count(), 6u);
  EXPECT_EQ(z.time_count(), 3u);
  EXPECT_FALSE(z.present(2, 1));
  EXPECT_FALSE(z.present(5, 0));
  EXPECT_DOUBLE_EQ(z.value(3, 2), 2.5);
  EXPECT_EQ(z.missing_count(), 4u);
  const SpaceTimeCube d = build_cube(s, CubeVariable::n_difference);
  EXPECT_TRUE(d.present(5, 0));
  EXPECT_DOUBLE_EQ(d.value(4, 1), 5.0);
  EXPECT_DOUBLE_EQ(slice_view(d, 1)[4], 5.0);
  EXPECT_THROW(slice_view(d, 3), Error);
}

TEST(Cube, RejectsBadConstruction)
{
  const GridSpec g = grid();
  EXPECT_THROW(build_cube(SliceSet(g, {}), CubeVariable::z_score), Error);
  std::vector<Slice> two(2);
  two[0].time = at(0);
  two[1].time = at(1);
  try {
    build_cube(SliceSet(g, two), CubeVariable::gi_star);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_variable);
  }
  EXPECT_THROW(SpaceTimeCube(g, {at(1), at(0)}, CubeVariable::z_score, std::vector<double>(12), std::vector<std::uint8_t>(12)),
               Error);
  EXPECT_THROW(SpaceTimeCube(g, times(2), CubeVariable::z_score, std::vector<double>(11), std::vector<std::uint8_t>(11)),
               Error);
}

TEST(Cube, SaveLoadRoundTrip)
{
  const GridSpec g = grid(4, 3);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  const std::size_t n = g.cell_count() * 5;
  std::vector<double> v(n);
  std::vector<std::uint8_t> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = nd(rng);
    p[i] = rng() % 6 != 0;
  }
  const SpaceTimeCube c(g, times(5), CubeVariable::z_score, v, p);
  const auto dir = std::filesystem::temp_directory_path() / "popshift_cube_test";
  std::filesystem::remove_all(dir);
  save_cube(c, dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "values.csv"));
  const SpaceTimeCube back = load_cube(dir.string(), g);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.variable(), CubeVariable::z_score);
  std::filesystem::remove_all(dir);
}

TEST(Cube, CubeToSlicesKeepsValues)
{
  const GridSpec g = grid();
  std::vector<double> v(18);
  std::vector<std::uint8_t> p(18, 1);
  for (std::size_t i = 0; i < 18; ++i) v[i] = static_cast<double>(i);
  p[4] = 0;
  const SpaceTimeCube c(g, times(3), CubeVariable::z_score, v, p);
  const SliceSet s = cube_to_slices(c);
  EXPECT_TRUE(build_cube(s, CubeVariable::z_score) == c);
}

TEST(Timeline, ValidatesOrderAndLabels)
{
  EXPECT_THROW(EventTimeline({ev(3, EventKind::order_placed, "a"), ev(1, EventKind::order_lifted, "b")}), Error);
  EXPECT_THROW(EventTimeline({ev(1, EventKind::order_placed, "a"), ev(2, EventKind::order_lifted, "a")}), Error);
  EXPECT_NO_THROW(EventTimeline({ev(1, EventKind::order_placed, "a"), ev(1, EventKind::other, "b")}));
}

TEST(Timeline, JsonRoundTripAndDefaults)
{
  const EventTimeline tl({ev(2, EventKind::order_placed, "order", std::vector<CellId>{{1}, {4}}),
                          ev(5, EventKind::order_lifted, "lift")});
  const EventTimeline back = timeline_from_json(timeline_to_json(tl));
  ASSERT_EQ(back.events().size(), 2u);
  EXPECT_EQ(back.events()[0].instant, at(2));
  EXPECT_EQ(back.events()[0].zone->size(), 2u);
  EXPECT_FALSE(back.events()[1].zone);

  // bare array, out of order, unlabeled
  const auto j = nlohmann::json::parse(R"([
    {"instant": "2020-05-02T09:00:00Z", "kind": "order_lifted"},
    {"instant": "2020-05-01T09:00:00Z", "kind": "order_placed"}])");
  const EventTimeline t2 = timeline_from_json(j);
  EXPECT_EQ(t2.events()[0].kind, EventKind::order_placed);
  EXPECT_FALSE(t2.events()[0].label.empty());
  EXPECT_NE(t2.events()[0].label, t2.events()[1].label);
  EXPECT_THROW(timeline_from_json(nlohmann::json::parse(R"([{"instant": "soon", "kind": "other"}])")), Error);
}

TEST(Timeline, ForMaskKeepsGlobalAndTouchingEvents)
{
  const EventTimeline tl({ev(1, EventKind::order_placed, "a", std::vector<CellId>{{0}}),
                          ev(2, EventKind::order_placed, "b", std::vector<CellId>{{3}}), ev(3, EventKind::other, "c")});
  const EventTimeline m = tl.for_mask({0, 0, 0, 1});
  ASSERT_EQ(m.events().size(), 2u);
  EXPECT_EQ(m.events()[0].label, "b");
  EXPECT_EQ(m.events()[1].label, "c");
}

TEST(Sections, BoundariesAtEvents)
{
  const auto ts = times(10);
  const EventTimeline tl({ev(3, EventKind::order_placed, "order"), ev(7, EventKind::order_lifted, "lift")});
  const Sectioning s = section_by_events(ts, tl);
  ASSERT_EQ(s.sections.size(), 3u);
  EXPECT_EQ(s.sections[0], (Section{0, 3, "before order"}));
  EXPECT_EQ(s.sections[1], (Section{3, 7, "order"}));
  EXPECT_EQ(s.sections[2], (Section{7, 10, "lift"}));
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Sections, BetweenSlicesRoundsUp)
{
  const auto ts = times(6);
  const EventTimeline tl(std::vector<Event>{{at(2) + std::chrono::minutes(30), EventKind::order_placed, "order", {}}});
  const Sectioning s = section_by_events(ts, tl);
  ASSERT_EQ(s.sections.size(), 2u);
  EXPECT_EQ(s.sections[1].start_index, 3u);
}

TEST(Sections, EdgeCases)
{
  const auto ts = times(6);
  EXPECT_EQ(section_by_events(ts, {}).sections, (std::vector<Section>{{0, 6, "all"}}));

  const Sectioning late = section_by_events(ts, EventTimeline({ev(9, EventKind::order_lifted, "late")}));
  EXPECT_EQ(late.sections.size(), 1u);
  EXPECT_EQ(late.warnings.size(), 1u);

  const Sectioning early = section_by_events(ts, EventTimeline({ev(-2, EventKind::order_placed, "early")}));
  EXPECT_EQ(early.sections.size(), 1u);

  const Sectioning same =
      section_by_events(ts, EventTimeline({ev(2, EventKind::order_placed, "a"), ev(2, EventKind::other, "b")}));
  ASSERT_EQ(same.sections.size(), 2u);
  EXPECT_EQ(same.sections[1].label, "a+b");
}

TEST(Sections, PartitionTheSeries)
{
  std::mt19937_64 rng(9);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + static_cast<int>(rng() % 30);
    std::vector<Event> events;
    int t = -3;
    for (int e = 0; e < 4; ++e) {
      t += static_cast<int>(rng() % 8);
      events.push_back(ev(t, EventKind::other, "e" + std::to_string(e)));
    }
    const Sectioning s = section_by_events(times(n), EventTimeline(events));
    std::size_t next = 0;
    for (const Section& sec : s.sections) {
      EXPECT_EQ(sec.start_index, next);
      EXPECT_GT(sec.length(), 0u);
      next = sec.end_index;
    }
    EXPECT_EQ(next, static_cast<std::size_t>(n));
  }
}
