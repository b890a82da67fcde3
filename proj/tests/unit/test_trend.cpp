#include "oracles.hpp"

#include "popshift/error.hpp"
#include "popshift/trend.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace popshift;

TEST(MannKendall, MatchesBruteForce)
{
  std::mt19937_64 rng(31);
  for (int k = 0; k < 2000; ++k) {
    const std::size_t n = 4 + rng() % 30;
    std::vector<double> x(n);
    std::vector<std::uint8_t> p(n, 1);
    for (auto& v : x) v = static_cast<double>(rng() % (k % 2 ? 4 : 1000));
    if (k % 3 == 0)
      for (auto& m : p) m = rng() % 4 != 0;
    const oracle::MK o = oracle::mann_kendall(x, p);
    if (o.n < 4) continue;
    const MKResult r = mk_stat(x, p);
    EXPECT_EQ(r.S, o.S);
    EXPECT_EQ(r.var_S, static_cast<double>(o.var18) / 18.0);
    EXPECT_EQ(r.n_used, o.n);
    EXPECT_DOUBLE_EQ(r.tau, static_cast<double>(o.S) / (o.n * (o.n - 1) / 2.0));
  }
}

TEST(MannKendall, HandComputedSeries)
{
  const std::vector<double> x{1, 2, 3, 4};
  const MKResult r = mk_stat(x);
  EXPECT_EQ(r.S, 6);
  EXPECT_DOUBLE_EQ(r.var_S, 4.0 * 3.0 * 13.0 / 18.0);
  EXPECT_NEAR(r.Z, 5.0 / std::sqrt(26.0 / 3.0), 1e-15);
  EXPECT_DOUBLE_EQ(r.tau, 1.0);
}

TEST(MannKendall, PValueAgainstIntegratedNormal)
{
  std::mt19937_64 rng(32);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 200; ++k) {
    std::vector<double> x(12);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = nd(rng) + 0.15 * static_cast<double>(i) * (k % 3);
    const MKResult r = mk_stat(x);
    const double expect = 2.0 * (1.0 - oracle::normal_cdf(std::abs(r.Z)));
    EXPECT_NEAR(r.p_two_sided, expect, 1e-9);
  }
}

TEST(MannKendall, ContinuityCorrection)
{
  // S = 1 becomes Z = 0
  const std::vector<double> x{2, 1, 3, 4, 0};
  const MKResult r = mk_stat(x);
  EXPECT_EQ(r.S, 0);
  const std::vector<double> y{1, 3, 2, 0, 4};
  const MKResult q = mk_stat(y);
  EXPECT_EQ(std::abs(q.S), 2);
  EXPECT_NEAR(std::abs(q.Z), 1.0 / std::sqrt(q.var_S), 1e-15);
}

TEST(MannKendall, ConstantSeriesHasNoTrend)
{
  const std::vector<double> x(8, 3.0);
  const MKResult r = mk_stat(x);
  EXPECT_EQ(r.S, 0);
  EXPECT_EQ(r.var_S, 0.0);
  EXPECT_EQ(r.p_two_sided, 1.0);
  EXPECT_EQ(classify_trend(r, 0.05).direction, TrendDirection::none);
}

TEST(MannKendall, TooShortAfterDroppingMissing)
{
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<std::uint8_t> p{1, 0, 1, 0, 1};
  try {
    mk_stat(x, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_short);
  }
}

TEST(MannKendall, ClassifyUsesStrictAlpha)
{
  MKResult r;
  r.S = 10;
  r.p_two_sided = 0.05;
  EXPECT_EQ(classify_trend(r, 0.05).direction, TrendDirection::none);
  r.p_two_sided = 0.049;
  EXPECT_EQ(classify_trend(r, 0.05).direction, TrendDirection::increasing);
  r.S = -10;
  EXPECT_EQ(classify_trend(r, 0.05).direction, TrendDirection::decreasing);
}

TEST(MannKendall, InvariantUnderMonotoneTransform)
{
  std::mt19937_64 rng(33);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(15), y(15);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = nd(rng);
      y[i] = std::exp(3.0 * x[i]) + 7.0;
    }
    const MKResult a = mk_stat(x), b = mk_stat(y);
    EXPECT_EQ(a.S, b.S);
    EXPECT_EQ(a.p_two_sided, b.p_two_sided);
  }
}

TEST(MannKendall, ReversalFlipsSign)
{
  std::mt19937_64 rng(34);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(11);
    for (auto& v : x) v = std::round(nd(rng) * 2.0);
    std::vector<double> r(x.rbegin(), x.rend());
    EXPECT_EQ(mk_stat(x).S, -mk_stat(r).S);
    EXPECT_EQ(mk_stat(x).var_S, mk_stat(r).var_S);
  }
}

namespace {

SpaceTimeCube cube_of(const std::vector<std::vector<double>>& series, const std::vector<std::vector<std::uint8_t>>& present)
{
  const std::size_t nc = series.size(), nt = series[0].size();
  const GridSpec g(CellScheme::square, {0, 0}, 1000.0, static_cast<int>(nc), 1, {0, 0});
  std::vector<Timestamp> ts;
  for (std::size_t t = 0; t < nt; ++t) ts.push_back(*parse_timestamp("2020-01-01T01:00:00Z") + std::chrono::hours(8) * t);
  std::vector<double> v;
  std::vector<std::uint8_t> p;
  for (std::size_t c = 0; c < nc; ++c) {
    v.insert(v.end(), series[c].begin(), series[c].end());
    p.insert(p.end(), present[c].begin(), present[c].end());
  }
  return SpaceTimeCube(g, ts, CubeVariable::z_score, v, p);
}

} // namespace

TEST(SectionTrends, PerCellPerSection)
{
  const std::vector<double> up{0, 1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1, 0, -1};
  const std::vector<double> flat(14, 1.0);
  std::vector<std::uint8_t> all(14, 1), sparse(14, 0);
  sparse[0] = sparse[1] = sparse[10] = 1;
  const SpaceTimeCube c = cube_of({up, flat, up}, {all, all, sparse});
  const std::vector<Section> secs{{0, 7, "a"}, {7, 14, "b"}};
  const SectionTrends t = cell_section_trends(c, secs, 0.05);
  EXPECT_EQ(t.at(0, 0).trend.direction, TrendDirection::increasing);
  EXPECT_EQ(t.at(0, 1).trend.direction, TrendDirection::decreasing);
  EXPECT_EQ(t.at(1, 0).trend.direction, TrendDirection::none);
  EXPECT_TRUE(t.at(2, 0).too_short);
  EXPECT_FALSE(t.at(2, 0).all_missing);
  EXPECT_EQ(t.at(2, 0).trend.direction, TrendDirection::none);
  EXPECT_TRUE(t.at(2, 1).too_short);
  EXPECT_THROW(cell_section_trends(c, secs, 1.0), Error);
  EXPECT_THROW(cell_section_trends(c, {{0, 15, "x"}}, 0.05), Error);
}

TEST(SectionTrends, AllMissingSection)
{
  std::vector<std::uint8_t> p(8, 1);
  for (std::size_t t = 4; t < 8; ++t) p[t] = 0;
  const SpaceTimeCube c = cube_of({{1, 2, 3, 4, 5, 6, 7, 8}}, {p});
  const SectionTrends t = cell_section_trends(c, {{0, 4, "a"}, {4, 8, "b"}});
  EXPECT_TRUE(t.at(0, 1).all_missing);
  EXPECT_EQ(t.at(0, 0).trend.direction, TrendDirection::none);  // n = 4 cannot reach p < 0.05
}

TEST(Tipping, VShapedSeries)
{
  // |i - 8|: windows starting at 0..4 are significantly decreasing, 5 and 6
  // are not significant, 7 onward are increasing
  std::vector<double> x;
  for (int i = 0; i <= 16; ++i) x.push_back(std::abs(i - 8));
  const auto tp = tipping_points(x, {}, 6, 0.05);
  ASSERT_EQ(tp.size(), 1u);
  EXPECT_EQ(tp[0].t_index, 7u);
  EXPECT_EQ(tp[0].from_direction, TrendDirection::decreasing);
  EXPECT_EQ(tp[0].to_direction, TrendDirection::increasing);
  EXPECT_EQ(tp[0].window, 6u);
}

TEST(Tipping, MonotoneSeriesHasNone)
{
  std::vector<double> x;
  for (int i = 0; i < 20; ++i) x.push_back(i);
  EXPECT_TRUE(tipping_points(x, {}).empty());
}

TEST(Tipping, Preconditions)
{
  const std::vector<double> x(11, 0.0);
  EXPECT_THROW(tipping_points(x, {}, 6), Error);
  EXPECT_THROW(tipping_points(x, {}, 3), Error);
  EXPECT_NO_THROW(tipping_points(x, {}, 5));
}

TEST(Tipping, SkipsWindowsWithTooFewValues)
{
  std::vector<double> x;
  for (int i = 0; i <= 16; ++i) x.push_back(std::abs(i - 8));
  std::vector<std::uint8_t> p(x.size(), 1);
  // blank out the dip; windows through it have too few values
  for (int i = 5; i <= 11; ++i) p[i] = 0;
  const auto tp = tipping_points(x, p, 6, 0.05);
  for (const TippingPoint& t : tp) EXPECT_NE(t.from_direction, t.to_direction);
}
