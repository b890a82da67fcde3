// One PASS/FAIL line per acceptance criterion; exit status 1 when any fails.

#include "oracles.hpp"

#include "popshift/hotspot.hpp"
#include "popshift/ingest.hpp"
#include "popshift/metrics.hpp"
#include "popshift/synth.hpp"
#include "popshift/trend.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace popshift;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

CellMask role_mask(const GroundTruth& t, CellRole role)
{
  CellMask m(t.roles.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = t.roles[i] == role;
  return m;
}

Outcome mk_oracle()
{
  std::mt19937_64 rng(11);
  const auto t0 = Clock::now();
  int bad = 0, tested = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 4 + rng() % 9;
    const int levels = 2 + static_cast<int>(rng() % 6);
    std::vector<double> x(n);
    std::vector<std::uint8_t> present(n, 1);
    for (auto& v : x) v = static_cast<double>(rng() % levels);
    for (auto& p : present) p = rng() % 5 != 0;
    const oracle::MK o = oracle::mann_kendall(x, present);
    if (o.n < kMinTrendLength) continue;
    ++tested;
    const MKResult r = mk_stat(x, present);
    if (r.S != o.S || r.var_S != static_cast<double>(o.var18) / 18.0 || r.n_used != o.n) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && tested > 900 && secs < 5.0,
          fmt("%.0f of %.0f series differ, %.3f s", bad, tested, secs)};
}

Outcome mk_calibration()
{
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  int reject = 0;
  const int trials = 20000;
  std::vector<double> x(10);
  for (int k = 0; k < trials; ++k) {
    for (auto& v : x) v = nd(rng);
    reject += classify_trend(mk_stat(x), 0.05).direction != TrendDirection::none;
  }
  const double rate = static_cast<double>(reject) / trials;
  return {std::abs(rate - 0.05) <= 0.01, fmt("rejection rate %.4f", rate)};
}

GridSpec lattice(int cols, int rows)
{
  return GridSpec(CellScheme::square, {10.0, 45.0}, 1000.0, cols, rows, {10.0, 45.0});
}

Outcome gi_oracle()
{
  const GridSpec g = lattice(8, 8);
  const Neighborhood nb = build_neighborhood(g, NeighborScheme{});
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(64);
    for (auto& v : x) v = u(rng);
    const std::vector<std::uint8_t> present(64, 1);
    const GiStarField f = gi_star(x, present, nb);
    const auto o = oracle::gi_star_grid(x, 8, 8);
    for (std::size_t i = 0; i < 64; ++i) worst = std::max(worst, std::abs(f.value[i] - o[i]));
  }
  const GridSpec g5 = lattice(5, 5);
  std::vector<double> spike(25, 0.0);
  spike[12] = 1.0;
  const GiStarField s = gi_star(spike, std::vector<std::uint8_t>(25, 1), build_neighborhood(g5, NeighborScheme{}));
  const double centre = s.value[12];
  return {worst <= 1e-12 && std::abs(centre - 4.0 / 3.0) <= 1e-9 && std::abs(centre - 1.3333) <= 1e-4,
          fmt("max |diff| %.2e, spike centre %.10f", worst, centre)};
}

Outcome z_contract()
{
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> count(0.0, 500.0), sig(0.0, 0.3), wide(0.0, 50.0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    ZScoreParams p;
    p.c = count(rng);
    p.mu_baseline = count(rng);
    p.sigma_baseline = k % 2 ? sig(rng) : wide(rng);
    if (k % 97 == 0) p.sigma_baseline = 0.0;
    if (k % 89 == 0) p.sigma_baseline = 0.1;
    const double expect = (p.c - p.mu_baseline) / (p.sigma_baseline > 0.1 ? p.sigma_baseline : 0.1);
    const double got = z_score(p);
    const double rel = expect == 0.0 ? std::abs(got) : std::abs(got - expect) / std::abs(expect);
    worst = std::max(worst, rel);
  }
  return {worst <= 1e-15, fmt("max relative error %.2e over 10000 cases", worst)};
}

Outcome regression_oracle()
{
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1000.0), e(-50.0, 50.0), b(-2.0, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 3 + rng() % 60;
    std::vector<double> x(n), y(n);
    const double slope = b(rng);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = slope * x[i] + e(rng) + 100.0;
    }
    CellField fx(n), fy(n);
    for (std::size_t i = 0; i < n; ++i) {
      fx.set(i, x[i]);
      fy.set(i, y[i]);
    }
    const RegressionResult r = fit_penetration(fy, fx);
    const oracle::Line o = oracle::ols(x, y);
    worst = std::max({worst, std::abs(r.slope - o.slope), std::abs(r.intercept - o.intercept) / 1e3,
                      std::abs(r.r_squared - o.r2)});
  }
  // 16 integer populations with FBP exactly a tenth of each
  CellField pop(16), fbp(16);
  for (std::size_t i = 0; i < 16; ++i) {
    pop.set(i, 10.0 * static_cast<double>(3 * i * i + 7 * i + 20));
    fbp.set(i, pop.value[i] / 10.0);
  }
  const RegressionResult p = fit_penetration(fbp, pop);
  return {worst <= 1e-9 && p.slope == 0.1 && p.r_squared == 1.0,
          fmt("max |diff| %.2e; proportional slope %.17g, R^2 %.17g", worst, p.slope, p.r_squared)};
}

Outcome resampling()
{
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> pop(0.0, 1000.0), shift(-0.2, 0.2), size(700.0, 1600.0);
  double worst_total = 0.0, worst_cell = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int cols = 2 + static_cast<int>(rng() % 9), rows = 2 + static_cast<int>(rng() % 9);
    const GeoPoint c{-100.0 + shift(rng), 40.0 + shift(rng)};
    const double s = size(rng);
    const GridSpec src = build_grid(extent_from_meters(c, cols * s, rows * s), s, CellScheme::square);
    // target covers the source with a margin, on its own anchor and cell size
    const double ts = size(rng);
    const GridSpec dst = build_grid(extent_from_meters({c.lon + shift(rng) * 0.01, c.lat + shift(rng) * 0.01},
                                                       cols * s + 4 * ts, rows * s + 4 * ts),
                                    ts, CellScheme::square);
    RasterPopulation ref{src, CellField(src.cell_count())};
    double total = 0.0;
    for (std::size_t i = 0; i < src.cell_count(); ++i) {
      ref.population.set(i, pop(rng));
      total += ref.population.value[i];
    }
    const CellField out = resample_to_grid(ref, dst);
    double got = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out.has(i)) got += out.value[i];
    worst_total = std::max(worst_total, std::abs(got - total) / total);

    // brute force: every source/target pair clipped in lon/lat space
    std::vector<double> expect(dst.cell_count(), 0.0);
    // degrees relative to c keep the shoelace sums well conditioned
    auto poly = [&c](const GridSpec& g, std::size_t i) {
      std::vector<oracle::Pt> p;
      const auto ring = cell_polygon(g, {static_cast<std::uint32_t>(i)});
      for (std::size_t v = 0; v + 1 < ring.size(); ++v) p.push_back({ring[v].lon - c.lon, ring[v].lat - c.lat});
      return p;
    };
    for (std::size_t a = 0; a < src.cell_count(); ++a) {
      const auto pa = poly(src, a);
      const double area = std::abs(oracle::ring_area(pa));
      for (std::size_t b = 0; b < dst.cell_count(); ++b)
        expect[b] += ref.population.value[a] * oracle::convex_intersection_area(pa, poly(dst, b)) / area;
    }
    for (std::size_t b = 0; b < dst.cell_count(); ++b) {
      const double v = out.has(b) ? out.value[b] : 0.0;
      worst_cell = std::max(worst_cell, std::abs(v - expect[b]) / total);
    }
  }
  return {worst_total <= 1e-9 && worst_cell <= 1e-9,
          fmt("max relative total error %.2e, max cell error %.2e of total", worst_total, worst_cell)};
}

// Offset from the order slice to the minimum of the evacuated-zone mean z.
long dip_offset(const Scenario& s)
{
  const RegionalSeries r = regional_mean_z(s.slices, role_mask(s.truth, CellRole::evacuated));
  std::size_t best = 0;
  for (std::size_t t = 1; t < r.mean.size(); ++t)
    if (r.mean[t] < r.mean[best]) best = t;
  return static_cast<long>(best) - static_cast<long>(s.truth.active_begin);
}

Outcome egress_timing()
{
  ScenarioConfig fast = fast_egress_scenario(1), slow = slow_egress_scenario(1);
  fast.noise_sigma = slow.noise_sigma = 0.0;
  const long nf_fast = dip_offset(generate(fast)), nf_slow = dip_offset(generate(slow));
  int off = 0;
  long worst_fast = 0, worst_slow = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const long a = dip_offset(generate(fast_egress_scenario(seed))) - 4;
    const long b = dip_offset(generate(slow_egress_scenario(seed))) - 9;
    worst_fast = std::max(worst_fast, std::abs(a));
    worst_slow = std::max(worst_slow, std::abs(b));
    off += std::abs(a) > 1 || std::abs(b) > 1;
  }
  return {nf_fast == 4 && nf_slow == 9 && off == 0,
          fmt("noise-free offsets %.0f and %.0f; worst noisy deviation %.0f and %.0f slices over 20 seeds",
              static_cast<double>(nf_fast), static_cast<double>(nf_slow), static_cast<double>(worst_fast),
              static_cast<double>(worst_slow))};
}

Outcome trend_recall()
{
  bool ok = true;
  double worst_order = 1.0, worst_lift = 1.0, worst_secs = 0.0;
  int shelter_bad = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t0 = Clock::now();
    const ScenarioConfig sc = default_scenario(seed);
    const Scenario s = generate(sc);
    const SpaceTimeCube z = build_cube(s.slices, CubeVariable::z_score);
    const Sectioning sec = section_by_events(z, sc.events);
    const SectionTrends tr = cell_section_trends(z, sec.sections, 0.05);
    worst_secs = std::max(worst_secs, seconds_since(t0));
    if (sec.sections.size() != 3) return {false, "expected three sections"};
    std::size_t evac = 0, dec = 0, inc = 0;
    for (std::size_t i = 0; i < s.truth.roles.size(); ++i) {
      if (s.truth.roles[i] == CellRole::evacuated) {
        ++evac;
        dec += tr.at(i, 1).trend.direction == TrendDirection::decreasing;
        inc += tr.at(i, 2).trend.direction == TrendDirection::increasing;
      } else if (s.truth.roles[i] == CellRole::shelter) {
        shelter_bad += tr.at(i, 1).trend.direction != TrendDirection::increasing;
        shelter_bad += tr.at(i, 2).trend.direction != TrendDirection::decreasing;
      }
    }
    worst_order = std::min(worst_order, static_cast<double>(dec) / evac);
    worst_lift = std::min(worst_lift, static_cast<double>(inc) / evac);
  }
  ok = worst_order >= 0.95 && worst_lift >= 0.95 && shelter_bad == 0 && worst_secs < 5.0;
  return {ok, fmt("evacuated decreasing %.3f post-order, increasing %.3f post-lift; %.0f shelter misses; %.2f s",
                  worst_order, worst_lift, shelter_bad, worst_secs)};
}

Outcome emerging_fidelity()
{
  double worst_agree = 1.0, worst_evac = 1.0;
  int shelter_window_bad = 0, shelter_return_hot = 0, shelter_return_slices = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ScenarioConfig sc = default_scenario(seed);
    const Scenario s = generate(sc);
    const SpaceTimeCube z = build_cube(s.slices, CubeVariable::z_score);
    const Neighborhood nb = build_neighborhood(sc.grid, NeighborScheme{});
    const GiStarCube gi = gi_star_cube(z, nb);
    const LabelCube labels = classify_cube(gi.cube, ConfidenceBin::c90, SignificanceRule::fdr);
    const EmergingResult er = emerging_classify(labels, gi.cube, {}, s.truth.active_begin, s.truth.active_end);
    const std::size_t nt = z.time_count(), nc = z.cell_count();

    // first slice after the lift with the evacuated zone fully refilled
    std::size_t full = nt;
    for (std::size_t t = s.truth.active_end; t < nt && full == nt; ++t) {
      bool back = true;
      for (std::size_t i = 0; i < nc && back; ++i)
        if (s.truth.roles[i] == CellRole::evacuated && s.truth.noise_free_z[i * nt + t] != 0.0) back = false;
      if (back) full = t;
    }
    if (full == nt) return {false, "scenario never returns fully"};

    std::size_t agree = 0, evac = 0, evac_ok = 0;
    for (std::size_t i = 0; i < nc; ++i) {
      const EmergingCategory& e = er.cells[i];
      agree += e.polarity == s.truth.expected_polarity[i];
      if (s.truth.roles[i] == CellRole::evacuated) {
        ++evac;
        evac_ok += e.category == EmergingKind::stable && e.polarity == SpotKind::cold;
      } else if (s.truth.roles[i] == CellRole::shelter) {
        const bool hot_window = (e.category == EmergingKind::stable || e.category == EmergingKind::new_spot) &&
                                e.polarity == SpotKind::hot;
        shelter_window_bad += !hot_window;
        for (std::size_t t = full; t < nt; ++t) {
          ++shelter_return_slices;
          shelter_return_hot += labels.at(i, t).label == SpotKind::hot;
        }
      }
    }
    worst_agree = std::min(worst_agree, static_cast<double>(agree) / nc);
    worst_evac = std::min(worst_evac, static_cast<double>(evac_ok) / evac);
  }
  const bool ok = worst_agree >= 0.90 && worst_evac >= 0.90 && shelter_window_bad == 0 && shelter_return_hot == 0;
  return {ok, fmt("min agreement %.4f, min evacuated stable cold %.3f, shelter window misses %.0f, "
                  "hot shelter slices after return %.0f",
                  worst_agree, worst_evac, shelter_window_bad, shelter_return_hot)};
}

Outcome false_positives()
{
  double worst_mk = 0.0, worst_none = 1.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ScenarioConfig sc = no_event_scenario(seed);
    const Scenario s = generate(sc);
    const SpaceTimeCube z = build_cube(s.slices, CubeVariable::z_score);
    const SectionTrends tr = cell_section_trends(z, section_by_events(z, sc.events).sections, 0.05);
    std::size_t sig = 0;
    for (std::size_t i = 0; i < z.cell_count(); ++i) sig += tr.at(i, 0).trend.direction != TrendDirection::none;
    const GiStarCube gi = gi_star_cube(z, build_neighborhood(sc.grid, NeighborScheme{}));
    const LabelCube labels = classify_cube(gi.cube, ConfidenceBin::c90, SignificanceRule::fdr);
    const EmergingResult er = emerging_classify(labels, gi.cube);
    std::size_t none = 0;
    for (const EmergingCategory& e : er.cells) none += e.category == EmergingKind::none && !e.excluded;
    worst_mk = std::max(worst_mk, static_cast<double>(sig) / z.cell_count());
    worst_none = std::min(worst_none, static_cast<double>(none) / z.cell_count());
  }
  return {worst_mk <= 0.07 && worst_none >= 0.95,
          fmt("max MK-significant share %.4f, min emerging none share %.4f over 20 seeds", worst_mk, worst_none)};
}

nlohmann::json random_scenario(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int cols = 3 + static_cast<int>(rng() % 10), rows = 3 + static_cast<int>(rng() % 10);
  const std::size_t n = static_cast<std::size_t>(cols * rows);
  std::vector<double> mean(n), sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] = std::round(5.0 + 300.0 * u(rng));
    sigma[i] = u(rng) < 0.1 ? 0.0 : 0.5 + 20.0 * u(rng);
  }
  const int duration = 8 + static_cast<int>(rng() % 20);
  const int order = 1 + static_cast<int>(rng() % (duration / 2));
  nlohmann::json j{
      {"grid", {{"scheme", "square"}, {"center", {-120.0 + 10.0 * u(rng), 30.0 + 10.0 * u(rng)}},
                {"width_m", cols * 1000.0}, {"height_m", rows * 1000.0}, {"cell_size_m", 1000.0}}},
      {"duration_slices", duration},
      {"start_time", "2020-03-01T09:00:00Z"},
      {"seed", rng() % 100000},
      {"noise_sigma", 2.0 * u(rng)},
      {"missing_fraction", 0.3 * u(rng)},
      {"suppress_below", u(rng) < 0.5 ? 0.0 : 40.0},
      {"baseline_field", {{"kind", "explicit"}, {"mean", mean}, {"sigma", sigma}}},
      {"events",
       {{{"kind", "order_placed"}, {"label", "order"}, {"slice", order},
         {"zone", {{"disk", {{"center", {cols / 2, rows / 2}}, {"radius_cells", 1.5}}}}}},
        {{"kind", "order_lifted"}, {"label", "lift"}, {"slice", order + 1 + rng() % (duration - order - 1)}}}},
  };
  return j;
}

Outcome round_trip()
{
  std::mt19937_64 rng(17);
  int bad = 0;
  std::size_t records = 0;
  for (int k = 0; k < 20; ++k) {
    const ScenarioConfig sc = scenario_from_json(random_scenario(rng));
    const Scenario s = generate(sc);
    std::stringstream buf;
    emit_fbdm_csv(s.slices, buf);
    const ParsedSlices back = parse_slices(buf, sc.grid, sc.stamps);
    bad += !(back.slices == s.slices);
    records += s.slices.record_count();
  }
  return {bad == 0, fmt("%.0f of 20 scenarios differ after the round trip (%.0f records)", bad,
                        static_cast<double>(records))};
}

} // namespace

int main()
{
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"mann-kendall oracle equivalence", mk_oracle},
      {"mann-kendall calibration", mk_calibration},
      {"G_i* oracle equivalence", gi_oracle},
      {"z-score contract", z_contract},
      {"regression oracle", regression_oracle},
      {"resampling conservation", resampling},
      {"fast vs slow egress timing", egress_timing},
      {"trend-map recall", trend_recall},
      {"emerging-category fidelity", emerging_fidelity},
      {"false-positive budget", false_positives},
      {"slice csv round trip", round_trip},
  };
  int failed = 0, k = 0;
  for (const auto& [name, fn] : criteria) {
    ++k;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str());
  }
  std::printf("%d of %d criteria passed\n", k - failed, k);
  return failed ? 1 : 0;
}
