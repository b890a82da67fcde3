#include "popshift/synth.hpp"

#include "popshift/csv.hpp"
#include "popshift/error.hpp"
#include "popshift/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace popshift {

const char* role_name(CellRole r)
{
  switch (r) {
  case CellRole::evacuated: return "evacuated";
  case CellRole::shelter: return "shelter";
  case CellRole::unaffected: return "unaffected";
  case CellRole::adjacent_destination: return "adjacent_destination";
  }
  return "unaffected";
}

namespace {

// Evacuation window of one cell; lift == npos when never lifted.
struct CellOrder {
  std::size_t order = static_cast<std::size_t>(-1);
  std::size_t lift = static_cast<std::size_t>(-1);
};

constexpr std::size_t npos = static_cast<std::size_t>(-1);

std::size_t first_slice_at_or_after(const ScenarioConfig& c, Timestamp t)
{
  for (std::size_t k = 0; k < c.duration_slices; ++k)
    if (c.slice_time(k) >= t) return k;
  return npos;
}

std::vector<CellOrder> cell_orders(const ScenarioConfig& c)
{
  const std::size_t n = c.grid.cell_count();
  std::vector<CellOrder> out(n);
  for (const Event& e : c.events.events()) {
    const std::size_t k = first_slice_at_or_after(c, e.instant);
    if (k == npos) continue;
    if (e.kind == EventKind::order_placed) {
      if (!e.zone) throw Error(ErrorKind::config, "order '" + e.label + "' has no zone");
      for (CellId id : *e.zone)
        if (out[id.index].order == npos) out[id.index].order = k;
    } else if (e.kind == EventKind::order_lifted) {
      auto apply = [&](std::size_t i) {
        if (out[i].order != npos && out[i].lift == npos && k > out[i].order) out[i].lift = k;
      };
      if (e.zone) {
        for (CellId id : *e.zone) apply(id.index);
      } else {
        for (std::size_t i = 0; i < n; ++i) apply(i);
      }
    }
  }
  return out;
}

// Exact-tie friendly copy: rounding removes ulp-level jitter between
// analytically equal values.
double tidy(double v) { return std::round(v * 1e9) / 1e9; }

} // namespace

void validate(const ScenarioConfig& c)
{
  const std::size_t n = c.grid.cell_count();
  auto fail = [](const std::string& m) { throw Error(ErrorKind::config, "scenario: " + m); };
  if (c.duration_slices < 2) fail("duration_slices must be at least 2");
  if (c.baseline_mean.size() != n || c.baseline_sigma.size() != n) fail("baseline field does not match the grid");
  for (std::size_t i = 0; i < n; ++i)
    if (!(c.baseline_mean[i] >= 0.0) || !(c.baseline_sigma[i] >= 0.0)) fail("baseline values must be non-negative");
  if (c.diurnal_multipliers.size() != c.stamps.stamp_times.size())
    fail("need one diurnal multiplier per stamp");
  for (double m : c.diurnal_multipliers)
    if (!(m > 0.0)) fail("diurnal multipliers must be positive");
  const EvacParams& p = c.evac_params;
  if (!(p.egress_rate > 0.0 && p.egress_rate <= 1.0)) fail("egress_rate must lie in (0, 1]");
  if (!(p.return_rate > 0.0 && p.return_rate <= 1.0)) fail("return_rate must lie in (0, 1]");
  if (!(p.floor >= 0.0 && p.floor < 1.0)) fail("floor must lie in [0, 1)");
  if (!(p.return_complete >= 0.0 && p.return_complete < 1.0)) fail("return_complete must lie in [0, 1)");
  double uptake = 0.0;
  for (const Shelter& s : c.shelters) {
    if (!c.grid.contains(s.cell)) fail("shelter cell " + std::to_string(s.cell.index) + " outside the grid");
    if (!(s.uptake >= 0.0) || !(s.capacity >= 0.0)) fail("shelter uptake and capacity must be non-negative");
    uptake += s.uptake;
  }
  if (uptake > 1.0 + 1e-12) fail("total shelter uptake exceeds 1");
  for (const Event& e : c.events.events())
    if (e.zone)
      for (CellId id : *e.zone)
        if (!c.grid.contains(id)) fail("event '" + e.label + "' zone leaves the grid");
  if (!(c.noise_sigma >= 0.0)) fail("noise_sigma must be non-negative");
  if (!(c.missing_fraction >= 0.0 && c.missing_fraction < 1.0)) fail("missing_fraction must lie in [0, 1)");
  for (std::size_t k = 0; k < c.duration_slices; ++k)
    if (!snap_to_stamp(c.slice_time(k), c.stamps).stamp) fail("slice times must fall on canonical stamps");
  const auto orders = cell_orders(c);
  for (const Shelter& s : c.shelters)
    if (orders[s.cell.index].order != npos) fail("shelter inside an evacuation zone");
}

Scenario generate(const ScenarioConfig& c)
{
  validate(c);
  const GridSpec& grid = c.grid;
  const std::size_t n = grid.cell_count();
  const std::size_t nt = c.duration_slices;
  const EvacParams& ep = c.evac_params;
  const auto orders = cell_orders(c);

  GroundTruth truth;
  truth.roles.assign(n, CellRole::unaffected);
  std::vector<std::size_t> evac;
  for (std::size_t i = 0; i < n; ++i)
    if (orders[i].order != npos) {
      truth.roles[i] = CellRole::evacuated;
      evac.push_back(i);
    }
  for (const Shelter& s : c.shelters) truth.roles[s.cell.index] = CellRole::shelter;
  if (!evac.empty()) {
    const double r2 = c.destination_ring_m * c.destination_ring_m;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth.roles[i] != CellRole::unaffected) continue;
      const PlanarPoint pi = grid.centroid_planar({static_cast<std::uint32_t>(i)});
      for (std::size_t e : evac) {
        const PlanarPoint pe = grid.centroid_planar({static_cast<std::uint32_t>(e)});
        const double dx = pi.x - pe.x, dy = pi.y - pe.y;
        if (dx * dx + dy * dy <= r2 * (1.0 + 1e-9)) {
          truth.roles[i] = CellRole::adjacent_destination;
          break;
        }
      }
    }
  }
  std::vector<std::size_t> dest;
  for (std::size_t i = 0; i < n; ++i)
    if (truth.roles[i] == CellRole::adjacent_destination) dest.push_back(i);
  if (dest.empty())
    for (std::size_t i = 0; i < n; ++i)
      if (truth.roles[i] == CellRole::unaffected) dest.push_back(i);

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> f(n, 1.0);
  std::vector<double> mu(n), sigma(n), clean(n);
  truth.noise_free_z.assign(n * nt, 0.0);
  std::vector<Slice> slices;
  slices.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const Timestamp time = c.slice_time(t);
    const SnappedTime snapped = snap_to_stamp(time, c.stamps);
    const auto stamp_pos = static_cast<std::size_t>(
        std::find(c.stamps.stamp_times.begin(), c.stamps.stamp_times.end(), *snapped.stamp) -
        c.stamps.stamp_times.begin());
    const double mult = c.diurnal_multipliers[stamp_pos];

    double displaced = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = c.baseline_mean[i] * mult;
      sigma[i] = c.baseline_sigma[i] * mult;
      const CellOrder& o = orders[i];
      if (o.order != npos && t >= o.order) {
        if (o.lift == npos || t < o.lift) {
          f[i] = std::max(ep.floor, f[i] * (1.0 - ep.egress_rate));
        } else {
          f[i] += ep.return_rate * (1.0 - f[i]);
          if (1.0 - f[i] < ep.return_complete) f[i] = 1.0;
        }
      }
      clean[i] = mu[i] * f[i];
      displaced += mu[i] - clean[i];
    }
    double remainder = displaced;
    for (const Shelter& s : c.shelters) {
      const double take = std::min(s.capacity, s.uptake * displaced);
      clean[s.cell.index] += take;
      remainder -= take;
    }
    if (remainder > 0.0) {
      double dest_mu = 0.0;
      for (std::size_t i : dest) dest_mu += mu[i];
      if (dest_mu > 0.0) {
        for (std::size_t i : dest) clean[i] += remainder * mu[i] / dest_mu;
      } else {
        for (std::size_t i : dest) clean[i] += remainder / static_cast<double>(dest.size());
      }
    }

    Slice s;
    s.time = snapped.time;
    s.stamp = snapped.stamp;
    for (std::size_t i = 0; i < n; ++i) {
      truth.noise_free_z[i * nt + t] = tidy(z_score({clean[i], mu[i], sigma[i], kDefaultSigmaMin}));
      double count = clean[i];
      if (c.noise_sigma > 0.0) count = std::max(0.0, count + c.noise_sigma * noise(rng));
      if (c.missing_fraction > 0.0 && unif(rng) < c.missing_fraction) continue;
      if (mu[i] < c.suppress_below) continue;
      SliceRecord r;
      r.cell = {static_cast<std::uint32_t>(i)};
      r.n_baseline = mu[i];
      r.n_crisis = count;
      r.n_difference = count - mu[i];
      if (mu[i] > 0.0) r.percent_change = 100.0 * (count - mu[i]) / mu[i];
      r.baseline_sigma = sigma[i];
      r.z_score = z_score({count, mu[i], sigma[i], kDefaultSigmaMin});
      s.records.emplace(r.cell, r);
    }
    slices.push_back(std::move(s));
  }

  SliceSet set(grid, std::move(slices), c.stamps);
  const auto times = set.timestamps();
  truth.sections = section_by_events(std::span<const Timestamp>(times), c.events).sections;
  const std::size_t ns = truth.sections.size();
  truth.expected_trend.assign(n * ns, TrendDirection::none);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < ns; ++s) {
      const Section& sec = truth.sections[s];
      if (sec.length() < kMinTrendLength) continue;
      const std::span<const double> z(truth.noise_free_z.data() + i * nt + sec.start_index, sec.length());
      truth.expected_trend[i * ns + s] = classify_trend(mk_stat(z), kDefaultAlpha).direction;
    }

  std::size_t first_order = npos, first_lift = npos;
  for (const CellOrder& o : orders) {
    first_order = std::min(first_order, o.order);
    first_lift = std::min(first_lift, o.lift);
  }
  truth.expected_polarity.assign(n, SpotKind::none);
  if (first_order != npos) {
    truth.active_begin = first_order;
    truth.active_end = first_lift == npos ? nt : first_lift;
    for (std::size_t i = 0; i < n; ++i) {
      switch (truth.roles[i]) {
      case CellRole::evacuated: truth.expected_polarity[i] = SpotKind::cold; break;
      case CellRole::shelter:
      case CellRole::adjacent_destination: truth.expected_polarity[i] = SpotKind::hot; break;
      case CellRole::unaffected: break;
      }
    }
  }
  return {std::move(set), std::move(truth)};
}

void emit_fbdm_csv(const SliceSet& slices, std::ostream& out)
{
  csv::RowWriter w(out);
  for (const std::string& col : kSliceColumns) w.field(col);
  w.end();
  auto opt = [&](const std::optional<double>& v) {
    if (v) {
      w.field(*v);
    } else {
      w.field("NA");
    }
  };
  for (const Slice& s : slices.slices()) {
    const std::string ts = format_timestamp(s.time);
    for (const auto& [id, r] : s.records) {
      const GeoPoint g = cell_centroid(slices.grid(), id);
      w.field(ts).field(g.lon).field(g.lat).field(r.n_baseline).field(r.n_crisis).field(r.n_difference);
      opt(r.percent_change);
      opt(r.z_score);
      opt(r.baseline_sigma);
      w.end();
    }
  }
}

void emit_fbdm_csv(const SliceSet& slices, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  emit_fbdm_csv(slices, out);
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

void write_truth_csv(const GridSpec& grid, const GroundTruth& truth, std::ostream& out)
{
  csv::RowWriter w(out);
  w.field("cell_id").field("lon").field("lat").field("role").field("expected_polarity");
  for (const Section& s : truth.sections) w.field("expected_" + s.label);
  w.end();
  const std::size_t ns = truth.sections.size();
  for (std::size_t i = 0; i < truth.roles.size(); ++i) {
    const GeoPoint g = cell_centroid(grid, {static_cast<std::uint32_t>(i)});
    w.field(i).field(g.lon).field(g.lat).field(role_name(truth.roles[i])).field(spot_kind_name(truth.expected_polarity[i]));
    for (std::size_t s = 0; s < ns; ++s) w.field(direction_name(truth.expected_trend[i * ns + s]));
    w.end();
  }
}

std::vector<CellId> disk_cells(const GridSpec& grid, ColRow center, double radius_cells)
{
  const PlanarPoint c = grid.centroid_planar(grid.cell_at(center));
  const double r = radius_cells * grid.cell_size_m();
  std::vector<CellId> out;
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const PlanarPoint p = grid.centroid_planar({static_cast<std::uint32_t>(i)});
    const double dx = p.x - c.x, dy = p.y - c.y;
    if (dx * dx + dy * dy <= r * r * (1.0 + 1e-9)) out.push_back({static_cast<std::uint32_t>(i)});
  }
  return out;
}

namespace {

// sigma_abs, when set, gives every cell the same dispersion; otherwise it is
// sigma_fraction of the cell mean.
void hills_baseline(ScenarioConfig& c, double lo, double hi, double sigma_fraction, std::optional<double> sigma_abs)
{
  const std::size_t n = c.grid.cell_count();
  c.baseline_mean.resize(n);
  c.baseline_sigma.resize(n);
  const double w = c.grid.n_cols(), h = c.grid.n_rows();
  struct Bump {
    double x, y, width, weight;
  };
  const Bump bumps[] = {{0.3, 0.35, 0.18, 1.0}, {0.7, 0.6, 0.22, 0.8}, {0.45, 0.8, 0.12, 0.6}};
  std::vector<double> raw(n);
  double top = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ColRow cr = c.grid.col_row({static_cast<std::uint32_t>(i)});
    const double x = (cr.col + 0.5) / w, y = (cr.row + 0.5) / h;
    double v = 0.0;
    for (const Bump& b : bumps) {
      const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
      v += b.weight * std::exp(-d2 / (2.0 * b.width * b.width));
    }
    raw[i] = v;
    top = std::max(top, v);
  }
  for (std::size_t i = 0; i < n; ++i) {
    c.baseline_mean[i] = lo + (hi - lo) * (top > 0.0 ? raw[i] / top : 0.0);
    c.baseline_sigma[i] = sigma_abs ? *sigma_abs : sigma_fraction * c.baseline_mean[i];
  }
}

void uniform_baseline(ScenarioConfig& c, double mean, double sigma_fraction, std::optional<double> sigma_abs)
{
  c.baseline_mean.assign(c.grid.cell_count(), mean);
  c.baseline_sigma.assign(c.grid.cell_count(), sigma_abs ? *sigma_abs : sigma_fraction * mean);
}

ScenarioConfig base_scenario(std::uint64_t seed)
{
  ScenarioConfig c;
  c.grid = build_grid(extent_from_meters({-118.75, 34.1}, 100000.0, 100000.0), 1000.0, CellScheme::square);
  c.duration_slices = 36;
  c.stamps.utc_offset_minutes = -8 * 60;
  c.start_time = *parse_timestamp("2018-11-08T09:00:00Z");
  c.diurnal_multipliers = {0.9, 1.1, 1.0};
  hills_baseline(c, 20.0, 200.0, 0.2, 8.0);
  c.noise_sigma = 0.25;
  c.seed = seed;
  return c;
}

EventTimeline order_timeline(const ScenarioConfig& c, std::size_t order, std::size_t lift, std::vector<CellId> zone)
{
  std::vector<Event> ev;
  ev.push_back({c.slice_time(order), EventKind::order_placed, "order", zone});
  ev.push_back({c.slice_time(lift), EventKind::order_lifted, "lift", zone});
  return EventTimeline(std::move(ev));
}

} // namespace

ScenarioConfig default_scenario(std::uint64_t seed)
{
  ScenarioConfig c = base_scenario(seed);
  c.events = order_timeline(c, 6, 16, disk_cells(c.grid, {50, 50}, 12.0));
  c.evac_params = {0.25, 0.1, 0.25, 0.02};
  c.shelters = {{c.grid.cell_at({72, 50}), 1e18, 0.05}, {c.grid.cell_at({35, 76}), 1e18, 0.05}};
  return c;
}

ScenarioConfig fast_egress_scenario(std::uint64_t seed)
{
  ScenarioConfig c = base_scenario(seed);
  c.events = order_timeline(c, 6, 11, disk_cells(c.grid, {50, 50}, 12.0));
  c.evac_params = {0.4, 0.1, 0.25, 0.02};
  c.shelters = {{c.grid.cell_at({72, 50}), 1e18, 0.05}};
  return c;
}

ScenarioConfig slow_egress_scenario(std::uint64_t seed)
{
  ScenarioConfig c = base_scenario(seed);
  c.events = order_timeline(c, 3, 13, disk_cells(c.grid, {50, 50}, 12.0));
  c.evac_params = {0.22, 0.1, 0.2, 0.02};
  c.shelters = {{c.grid.cell_at({72, 50}), 1e18, 0.05}};
  return c;
}

ScenarioConfig no_event_scenario(std::uint64_t seed)
{
  return base_scenario(seed);
}

ScenarioConfig scenario_from_json(const nlohmann::json& j)
{
  try {
    ScenarioConfig c;
    c.grid = grid_from_json(j.at("grid"));
    c.duration_slices = j.value("duration_slices", std::size_t{36});
    c.seed = j.value("seed", std::uint64_t{1});
    c.noise_sigma = j.value("noise_sigma", 0.25);
    c.missing_fraction = j.value("missing_fraction", 0.0);
    c.suppress_below = j.value("suppress_below", 0.0);
    c.destination_ring_m = j.value("destination_ring_m", 6000.0);
    c.stamps.utc_offset_minutes = j.value("utc_offset_minutes", 0);
    if (j.contains("stamp_times")) {
      c.stamps.stamp_times.clear();
      for (const auto& s : j.at("stamp_times")) {
        const auto m = parse_minute_of_day(s.get<std::string>());
        if (!m) throw Error(ErrorKind::config, "bad stamp time " + s.dump());
        c.stamps.stamp_times.push_back(*m);
      }
    }
    const auto start = parse_timestamp(j.at("start_time").get<std::string>());
    if (!start) throw Error(ErrorKind::config, "start_time does not parse");
    c.start_time = *start;
    c.diurnal_multipliers = j.value("diurnal_multipliers", std::vector<double>{0.9, 1.1, 1.0});

    const auto& b = j.at("baseline_field");
    const std::string kind = b.value("kind", std::string("hills"));
    const double sf = b.value("sigma_fraction", 0.2);
    std::optional<double> sa;
    if (b.contains("sigma") && b.at("sigma").is_number()) sa = b.at("sigma").get<double>();
    if (kind == "hills") {
      hills_baseline(c, b.value("min", 20.0), b.value("max", 200.0), sf, sa);
    } else if (kind == "uniform") {
      uniform_baseline(c, b.at("mean").get<double>(), sf, sa);
    } else if (kind == "explicit") {
      c.baseline_mean = b.at("mean").get<std::vector<double>>();
      if (b.contains("sigma")) {
        c.baseline_sigma = b.at("sigma").get<std::vector<double>>();
      } else {
        c.baseline_sigma.resize(c.baseline_mean.size());
        for (std::size_t i = 0; i < c.baseline_mean.size(); ++i) c.baseline_sigma[i] = sf * c.baseline_mean[i];
      }
    } else {
      throw Error(ErrorKind::config, "unknown baseline_field kind '" + kind + "'");
    }

    if (j.contains("evac_params")) {
      const auto& e = j.at("evac_params");
      c.evac_params.egress_rate = e.value("egress_rate", c.evac_params.egress_rate);
      c.evac_params.floor = e.value("floor", c.evac_params.floor);
      c.evac_params.return_rate = e.value("return_rate", c.evac_params.return_rate);
      c.evac_params.return_complete = e.value("return_complete", c.evac_params.return_complete);
    }

    auto cell_of = [&](const nlohmann::json& v) -> CellId {
      if (v.is_number_unsigned() || v.is_number_integer()) return {v.get<std::uint32_t>()};
      return c.grid.cell_at({v.at(0).get<int>(), v.at(1).get<int>()});
    };
    auto zone_of = [&](const nlohmann::json& z) {
      std::vector<CellId> cells;
      if (z.contains("disk")) {
        const auto& d = z.at("disk");
        cells = disk_cells(c.grid, c.grid.col_row(cell_of(d.at("center"))), d.at("radius_cells").get<double>());
      } else {
        for (const auto& v : z.at("cells")) cells.push_back(cell_of(v));
      }
      std::sort(cells.begin(), cells.end());
      cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
      return cells;
    };

    std::vector<Event> events;
    for (const auto& e : j.value("events", nlohmann::json::array())) {
      Event ev;
      ev.kind = parse_event_kind(e.at("kind").get<std::string>());
      ev.label = e.value("label", std::string(event_kind_name(ev.kind)) + "#" + std::to_string(events.size()));
      if (e.contains("slice")) {
        ev.instant = c.slice_time(e.at("slice").get<std::size_t>());
      } else {
        const auto t = parse_timestamp(e.at("instant").get<std::string>());
        if (!t) throw Error(ErrorKind::config, "event instant does not parse");
        ev.instant = *t;
      }
      if (e.contains("zone")) ev.zone = zone_of(e.at("zone"));
      events.push_back(std::move(ev));
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.instant < b.instant; });
    c.events = EventTimeline(std::move(events));

    for (const auto& s : j.value("shelters", nlohmann::json::array()))
      c.shelters.push_back({cell_of(s.at("cell")), s.value("capacity", 1e18), s.at("uptake").get<double>()});
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("scenario: ") + e.what());
  }
}

ScenarioConfig read_scenario_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  try {
    return scenario_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, path + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.detail());
  }
}

} // namespace popshift
