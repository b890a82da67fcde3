#include "popshift/cli.hpp"

#include "popshift/csv.hpp"
#include "popshift/error.hpp"
#include "popshift/geojson.hpp"
#include "popshift/svg.hpp"
#include "popshift/trend.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

namespace popshift::cli {

namespace fs = std::filesystem;

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

class Outputs {
public:
  Outputs(const std::string& dir, RunReport& report) : dir_(dir), report_(report) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name)
  {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw Error(ErrorKind::io, "cannot write " + p.string());
    report_.files.push_back(p.string());
    return f;
  }
  void warn(const std::string& w) { report_.warnings.push_back(w); }
  const fs::path& dir() const { return dir_; }

private:
  fs::path dir_;
  RunReport& report_;
};

std::string safe_name(const std::string& s)
{
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out.empty() ? "unnamed" : out;
}

SliceSet load_slices(const PipelineConfig& c, const GridSpec& grid)
{
  if (c.slices.empty()) throw Error(ErrorKind::usage, "config needs a slices file");
  return read_slices_file(c.slices, grid, c.stamp_options()).slices;
}

EventTimeline load_events(const PipelineConfig& c)
{
  if (c.events.empty()) return {};
  std::ifstream in(c.events);
  if (!in) throw Error(ErrorKind::io, "cannot read " + c.events);
  try {
    return timeline_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, c.events + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), c.events + ": " + e.detail());
  }
}

std::vector<std::string> time_ticks(const std::vector<Timestamp>& times)
{
  std::vector<std::string> ticks(times.size());
  for (std::size_t i = 0; i < times.size(); i += 3) ticks[i] = format_timestamp(times[i]).substr(5, 11);
  return ticks;
}

std::vector<svg::Marker> event_markers(const EventTimeline& tl, const std::vector<Timestamp>& times)
{
  std::vector<svg::Marker> out;
  for (const Event& e : tl.events()) {
    const auto it = std::lower_bound(times.begin(), times.end(), e.instant);
    if (it == times.end()) continue;
    const char* color = e.kind == EventKind::order_placed ? "#d62728" : e.kind == EventKind::order_lifted ? "#2ca02c"
                                                                                                          : "#7f7f7f";
    out.push_back({static_cast<std::size_t>(it - times.begin()), color, e.label});
  }
  return out;
}

struct Region {
  std::string name;
  CellMask mask;
};

std::vector<Region> load_regions(const PipelineConfig& c, const GridSpec& grid)
{
  std::vector<Region> out;
  out.push_back({c.mask.kind == MaskSpec::Kind::none ? "all" : "region", resolve_mask(c.mask, grid)});
  for (const auto& [name, spec] : c.regions) out.push_back({name, resolve_mask(spec, grid)});
  return out;
}

// Cube on the analysis lattice plus the region mask on that lattice.
struct Analysis {
  GridSpec grid;
  SpaceTimeCube cube;
  CellMask mask;
  bool masked = false;
};

GeoBox grid_extent(const GridSpec& g)
{
  const PlanarPoint o = g.planar_origin();
  const double w = g.n_cols() * g.cell_size_m(), h = g.n_rows() * g.cell_size_m();
  const GeoPoint a = g.projection().to_geo(o);
  const GeoPoint b = g.projection().to_geo({o.x + w, o.y + h});
  return {a.lon, a.lat, b.lon, b.lat};
}

Analysis make_analysis(const PipelineConfig& c, const SliceSet& slices)
{
  SpaceTimeCube z = build_cube(slices, CubeVariable::z_score);
  CellMask mask = resolve_mask(c.mask, slices.grid());
  const bool masked = c.mask.kind != MaskSpec::Kind::none;
  if (c.analysis_scheme == CellScheme::square && !c.analysis_cell_size_m) return {slices.grid(), std::move(z), mask, masked};
  if (slices.grid().scheme() != CellScheme::square)
    throw Error(ErrorKind::config, "lattice transfer needs square slice cells");

  const GridSpec target = build_grid(grid_extent(slices.grid()), c.analysis_cell_size_m.value_or(slices.grid().cell_size_m()),
                                     c.analysis_scheme);
  const auto weights = overlap_weights(slices.grid(), target);
  const std::size_t nt = z.time_count(), nc = target.cell_count();
  std::vector<double> values(nc * nt, 0.0), cover(nc * nt, 0.0);
  std::vector<std::uint8_t> present(nc * nt, 0);
  for (const OverlapWeight& w : weights)
    for (std::size_t t = 0; t < nt; ++t) {
      if (!z.present(w.source, t)) continue;
      values[w.target * nt + t] += z.value(w.source, t) * w.fraction;
      cover[w.target * nt + t] += w.fraction;
      present[w.target * nt + t] = 1;
    }
  for (std::size_t i = 0; i < values.size(); ++i)
    if (present[i]) values[i] /= cover[i];
  CellMask tmask(nc, 0);
  for (std::size_t i = 0; i < nc; ++i) {
    const auto src = slices.grid().locate(cell_centroid(target, {static_cast<std::uint32_t>(i)}));
    tmask[i] = src && mask[src->index];
  }
  return {target, SpaceTimeCube(target, z.timestamps(), CubeVariable::z_score, std::move(values), std::move(present)),
          std::move(tmask), masked};
}

void write_warnings(Outputs& out, const std::vector<std::string>& warnings)
{
  auto f = out.open("warnings.txt");
  for (const std::string& w : warnings) f << w << '\n';
}

void write_regression_row(csv::RowWriter& w, const std::string& level, const RegressionResult& r)
{
  w.field(level).field(r.slope).field(r.intercept).field(r.r_squared);
  if (r.adj_r_squared) {
    w.field(*r.adj_r_squared);
  } else {
    w.field("NA");
  }
  w.field(r.n).field(r.n_excluded).end();
}

} // namespace

RunReport cmd_penetration(const PipelineConfig& c)
{
  if (!c.reference_raster && c.zones.empty())
    throw Error(ErrorKind::usage, "penetration needs reference_raster or zones");
  check_paths(c);
  RunReport report;
  const GridSpec grid = load_grid(c);
  const SliceSet slices = load_slices(c, grid);
  const CellField fbp = average_baseline(slices);
  Outputs out(c.output_dir, report);

  auto reg = out.open("regression.csv");
  csv::RowWriter rw(reg);
  rw.field("level").field("slope").field("intercept").field("r_squared").field("adj_r_squared").field("n")
      .field("n_excluded").end();
  auto exc = out.open("exceptions.csv");
  csv::RowWriter ew(exc);
  ew.field("unit").field("id").field("reason").end();

  if (c.reference_raster) {
    const ReferenceRaster& rr = *c.reference_raster;
    RasterPopulation ref{grid, CellField(grid.cell_count())};
    if (!rr.ascii.empty()) {
      std::ifstream in(rr.ascii);
      ref = read_ascii_grid(in);
    } else {
      const GridSpec desc = rr.descriptor ? grid_from_json(*rr.descriptor) : grid;
      std::ifstream in(rr.csv);
      try {
        ref = read_raster_csv(in, desc);
      } catch (const Error& e) {
        throw Error(e.kind(), rr.csv + ": " + e.detail());
      }
    }
    const CellField pop = ref.grid == grid ? ref.population : resample_to_grid(ref, grid);
    const PenetrationField pen = penetration_field(fbp, pop);
    const RegressionResult fit = fit_penetration(fbp, pop);
    write_regression_row(rw, "cell", fit);

    auto gj = out.open("penetration_cells.geojson");
    GeoJsonWriter w(gj);
    svg::ScatterChart sc{"FBP against reference population (cells)", "reference population", "baseline users",
                         {}, {}, fit.slope, fit.intercept, ""};
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
      if (!fbp.has(i) || !pop.has(i)) continue;
      nlohmann::json p{{"fbp", fbp.value[i]}, {"population", pop.value[i]}};
      p["penetration_rate"] = pen.rate.has(i) ? nlohmann::json(pen.rate.value[i]) : nlohmann::json(nullptr);
      p["undefined"] = pen.undefined[i] != 0;
      p["above_100"] = pen.above_100[i] != 0;
      w.cell(grid, {static_cast<std::uint32_t>(i)}, p);
      if (pen.undefined[i]) ew.field("cell").field(i).field("undefined_rate").end();
      if (pen.above_100[i]) ew.field("cell").field(i).field("above_100").end();
      sc.x.push_back(pop.value[i]);
      sc.y.push_back(fbp.value[i]);
    }
    w.close();
    sc.annotation = "slope " + csv::format_double(fit.slope) + ", R^2 " + csv::format_double(fit.r_squared);
    auto f = out.open("penetration_cells.svg");
    svg::write_scatter(f, sc);
  }

  if (!c.zones.empty()) {
    std::ifstream in(c.zones);
    ZonalPopulation zones;
    try {
      zones = read_zones_geojson(in);
    } catch (const Error& e) {
      throw Error(e.kind(), c.zones + ": " + e.detail());
    }
    const ZonalField zf = zonal_field_sum(grid, fbp, zones);
    const std::size_t nz = zones.zones.size();
    CellField zfbp(nz), zpop(nz), zrate(nz);
    for (std::size_t z = 0; z < nz; ++z) {
      if (zf.cells_in_zone[z] == 0) {
        ew.field("zone").field(zones.zones[z].zone_id).field("no_cells").end();
        continue;
      }
      zfbp.set(z, zf.total[z]);
      zpop.set(z, zones.zones[z].population);
      if (zones.zones[z].population > 0.0) {
        const double r = penetration_rate(zf.total[z], zones.zones[z].population);
        zrate.set(z, r);
        if (r > 100.0) ew.field("zone").field(zones.zones[z].zone_id).field("above_100").end();
      } else {
        ew.field("zone").field(zones.zones[z].zone_id).field("undefined_rate").end();
      }
    }
    RegressionResult fit;
    bool have_fit = false;
    try {
      fit = fit_penetration(zfbp, zpop);
      have_fit = true;
      write_regression_row(rw, "zone", fit);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_fit) throw;
      out.warn("zone regression: " + e.detail());
    }

    auto dem = out.open("demographics.csv");
    csv::RowWriter dw(dem);
    dw.field("cohort").field("slope").field("intercept").field("r_squared").field("adj_r_squared").field("n")
        .field("n_excluded").end();
    std::set<std::string> cohorts;
    for (const Zone& z : zones.zones)
      for (const auto& [k, v] : z.cohorts) cohorts.insert(k);
    for (const std::string& k : cohorts) {
      CellField share(nz);
      for (std::size_t z = 0; z < nz; ++z) {
        const auto it = zones.zones[z].cohorts.find(k);
        if (it != zones.zones[z].cohorts.end()) share.set(z, it->second);
      }
      try {
        write_regression_row(dw, k, demographic_correlation(zrate, share));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_fit) throw;
        out.warn(k + ": " + e.detail());
      }
    }

    nlohmann::json fc{{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
    svg::ScatterChart sc{"FBP against zone population", "zone population", "baseline users", {}, {}, {}, {}, ""};
    for (std::size_t z = 0; z < nz; ++z) {
      const Zone& zone = zones.zones[z];
      nlohmann::json props{{"zone_id", zone.zone_id}, {"population", zone.population}};
      for (const auto& [k, v] : zone.cohorts) props[k] = v;
      props["fbp"] = zfbp.has(z) ? nlohmann::json(zfbp.value[z]) : nlohmann::json(nullptr);
      props["penetration_rate"] = zrate.has(z) ? nlohmann::json(zrate.value[z]) : nlohmann::json(nullptr);
      nlohmann::json coords = nlohmann::json::array();
      for (const auto& poly : zone.polygons) {
        nlohmann::json rings = nlohmann::json::array();
        for (const auto& ring : poly) {
          nlohmann::json r = nlohmann::json::array();
          for (const GeoPoint& p : ring) r.push_back({p.lon, p.lat});
          rings.push_back(std::move(r));
        }
        coords.push_back(std::move(rings));
      }
      const nlohmann::json geom = zone.polygons.size() == 1
                                      ? nlohmann::json{{"type", "Polygon"}, {"coordinates", coords[0]}}
                                      : nlohmann::json{{"type", "MultiPolygon"}, {"coordinates", coords}};
      fc["features"].push_back({{"type", "Feature"}, {"properties", props}, {"geometry", geom}});
      if (zfbp.has(z)) {
        sc.x.push_back(zone.population);
        sc.y.push_back(zfbp.value[z]);
      }
    }
    auto gj = out.open("penetration_zones.geojson");
    gj << fc.dump() << '\n';
    if (have_fit) {
      sc.fit_slope = fit.slope;
      sc.fit_intercept = fit.intercept;
      sc.annotation = "slope " + csv::format_double(fit.slope) + ", R^2 " + csv::format_double(fit.r_squared);
    }
    auto f = out.open("penetration_zones.svg");
    svg::write_scatter(f, sc);
  }

  std::vector<StampedValue> totals;
  for (const Slice& s : slices.slices()) {
    double sum = 0.0;
    for (const auto& [id, r] : s.records) sum += r.n_baseline;
    totals.push_back({s.stamp, sum});
  }
  auto dcsv = out.open("diurnal.csv");
  csv::RowWriter dw(dcsv);
  dw.field("stamp").field("mean_total_fbp").field("median_total_fbp").field("n_slices").end();
  try {
    for (const DiurnalGroup& g : diurnal_average(totals))
      dw.field(format_minute_of_day(g.stamp)).field(g.mean).field(g.median).field(g.n).end();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::no_stamp) throw;
    out.warn("diurnal: " + e.detail());
  }
  write_warnings(out, report.warnings);
  return report;
}

RunReport cmd_dynamics(const PipelineConfig& c)
{
  check_paths(c);
  RunReport report;
  const GridSpec grid = load_grid(c);
  const SliceSet slices = load_slices(c, grid);
  const EventTimeline events = load_events(c);
  const auto regions = load_regions(c, grid);
  Outputs out(c.output_dir, report);

  auto zf = out.open("regional_z.csv");
  csv::RowWriter zw(zf);
  zw.field("region").field("t_index").field("timestamp").field("mean_z").field("standard_error").field("n_cells").end();
  auto tf = out.open("total_difference.csv");
  csv::RowWriter tw(tf);
  tw.field("region").field("t_index").field("timestamp").field("total_difference").field("n_cells").end();

  for (std::size_t ri = 0; ri < regions.size(); ++ri) {
    const Region& r = regions[ri];
    RegionalSeries rs;
    try {
      rs = regional_mean_z(slices, r.mask);
    } catch (const Error& e) {
      throw Error(e.kind(), "region '" + r.name + "': " + e.detail());
    }
    const TotalSeries ts = total_difference(slices, r.mask);
    for (std::size_t t = 0; t < rs.timestamps.size(); ++t) {
      zw.field(r.name).field(t).field(format_timestamp(rs.timestamps[t]));
      if (rs.mean_defined[t]) {
        zw.field(rs.mean[t]);
      } else {
        zw.field("NA");
      }
      if (rs.se_defined[t]) {
        zw.field(rs.standard_error[t]);
      } else {
        zw.field("NA");
      }
      zw.field(rs.n_cells[t]).end();
      tw.field(r.name).field(t).field(format_timestamp(ts.timestamps[t]));
      if (ts.defined[t]) {
        tw.field(ts.total[t]);
      } else {
        tw.field("NA");
      }
      tw.field(ts.n_cells[t]).end();
    }

    const EventTimeline local = events.for_mask(r.mask);
    const std::string color = kPalette[ri % std::size(kPalette)];
    svg::LineChart zc{"Mean z-score: " + r.name, "slice", "mean z-score", time_ticks(rs.timestamps), {}, {}, 0.0};
    svg::Series zs{r.name, rs.mean, rs.mean_defined, rs.standard_error, color};
    for (std::size_t t = 0; t < zs.error.size(); ++t)
      if (!rs.se_defined[t]) zs.error[t] = 0.0;
    zc.series.push_back(std::move(zs));
    zc.markers = event_markers(local, rs.timestamps);
    auto f1 = out.open("dynamics_z_" + safe_name(r.name) + ".svg");
    svg::write_line_chart(f1, zc);

    svg::LineChart tc{"Total difference: " + r.name, "slice", "crisis minus baseline", time_ticks(ts.timestamps),
                      {}, {}, 0.0};
    tc.series.push_back({r.name, ts.total, ts.defined, {}, color});
    tc.markers = zc.markers;
    auto f2 = out.open("dynamics_total_" + safe_name(r.name) + ".svg");
    svg::write_line_chart(f2, tc);
  }
  write_warnings(out, report.warnings);
  return report;
}

RunReport cmd_trend(const PipelineConfig& c)
{
  check_paths(c);
  RunReport report;
  const GridSpec grid = load_grid(c);
  const SliceSet slices = load_slices(c, grid);
  const EventTimeline events = load_events(c);
  const Analysis a = make_analysis(c, slices);
  Outputs out(c.output_dir, report);
  if (events.empty()) out.warn("no events; the whole series is one section");

  const Sectioning sec = section_by_events(a.cube, events);
  for (const std::string& w : sec.warnings) out.warn(w);
  const SectionTrends tr = cell_section_trends(a.cube, sec.sections, c.alpha);

  auto sf = out.open("trend_summary.csv");
  csv::RowWriter sw(sf);
  sw.field("section").field("label").field("start_index").field("end_index").field("increasing").field("decreasing")
      .field("none").field("too_short").field("all_missing").end();
  for (std::size_t s = 0; s < sec.sections.size(); ++s) {
    const Section& section = sec.sections[s];
    if (section.length() < kMinTrendLength)
      out.warn("section '" + section.label + "' has " + std::to_string(section.length()) +
               " slices; too short for a trend");
    std::size_t inc = 0, dec = 0, none = 0, short_n = 0, missing = 0;
    auto gj = out.open("trend_" + std::to_string(s) + "_" + safe_name(section.label) + ".geojson");
    GeoJsonWriter w(gj, {{"section_label", section.label},
                         {"start", format_timestamp(a.cube.timestamps()[section.start_index])},
                         {"alpha", c.alpha}});
    for (std::size_t i = 0; i < a.cube.cell_count(); ++i) {
      if (!a.mask[i]) continue;
      const CellTrend& ct = tr.at(i, s);
      switch (ct.trend.direction) {
      case TrendDirection::increasing: ++inc; break;
      case TrendDirection::decreasing: ++dec; break;
      case TrendDirection::none: ++none; break;
      }
      short_n += ct.too_short;
      missing += ct.all_missing;
      nlohmann::json p{{"section_label", section.label}, {"direction", direction_name(ct.trend.direction)}};
      p["p"] = ct.too_short ? nlohmann::json(nullptr) : nlohmann::json(ct.p);
      p["tau"] = ct.too_short ? nlohmann::json(nullptr) : nlohmann::json(ct.tau);
      p["n_used"] = ct.n_used;
      p["too_short"] = ct.too_short;
      w.cell(a.grid, {static_cast<std::uint32_t>(i)}, p);
    }
    w.close();
    sw.field(s).field(section.label).field(section.start_index).field(section.end_index).field(inc).field(dec)
        .field(none).field(short_n).field(missing).end();
  }

  auto tf = out.open("tipping.csv");
  csv::RowWriter tw(tf);
  tw.field("scope").field("cell_id").field("t_index").field("timestamp").field("from_direction").field("to_direction")
      .field("window").end();
  const std::size_t nt = a.cube.time_count();
  auto emit = [&](const std::string& scope, std::optional<std::size_t> cell, const std::vector<TippingPoint>& tps) {
    for (const TippingPoint& tp : tps) {
      tw.field(scope);
      if (cell) {
        tw.field(*cell);
      } else {
        tw.empty();
      }
      tw.field(tp.t_index).field(format_timestamp(a.cube.timestamps()[tp.t_index]))
          .field(direction_name(tp.from_direction)).field(direction_name(tp.to_direction)).field(tp.window).end();
    }
  };
  if (nt < 2 * c.tipping_window || c.tipping_window < kMinTrendLength) {
    out.warn("series of " + std::to_string(nt) + " slices too short for tipping window " +
             std::to_string(c.tipping_window));
  } else {
    std::vector<double> mean(nt, 0.0);
    std::vector<std::uint8_t> defined(nt, 0);
    for (std::size_t t = 0; t < nt; ++t) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < a.cube.cell_count(); ++i)
        if (a.mask[i] && a.cube.present(i, t)) {
          sum += a.cube.value(i, t);
          ++n;
        }
      if (n) {
        mean[t] = sum / static_cast<double>(n);
        defined[t] = 1;
      }
    }
    emit("region", std::nullopt, tipping_points(mean, defined, c.tipping_window, c.alpha));
    for (std::size_t i = 0; i < a.cube.cell_count(); ++i)
      if (a.mask[i]) emit("cell", i, tipping_points(a.cube.series(i), a.cube.series_present(i), c.tipping_window, c.alpha));
  }
  write_warnings(out, report.warnings);
  return report;
}

RunReport cmd_emerging(const PipelineConfig& c)
{
  check_paths(c);
  RunReport report;
  const GridSpec grid = load_grid(c);
  const SliceSet slices = load_slices(c, grid);
  const EventTimeline events = load_events(c);
  if (slices.size() < kMinEmergingSlices)
    throw Error(ErrorKind::usage, "emerging classification needs at least " + std::to_string(kMinEmergingSlices) +
                                      " slices, got " + std::to_string(slices.size()));
  const Analysis a = make_analysis(c, slices);
  Outputs out(c.output_dir, report);

  const Neighborhood nb = build_neighborhood(a.grid, c.neighbor_scheme);
  const GiStarCube gi = gi_star_cube(a.cube, nb, a.masked ? std::span<const std::uint8_t>(a.mask)
                                                          : std::span<const std::uint8_t>());
  for (std::size_t t : gi.sparse_slices) out.warn("slice " + std::to_string(t) + " has too few cells for G_i*");
  for (std::size_t t : gi.constant_slices) out.warn("slice " + std::to_string(t) + " is constant; G_i* undefined");
  const ConfidenceBin bin = parse_confidence_bin(c.confidence_bin);
  const LabelCube labels = classify_cube(gi.cube, bin, c.significance);
  const std::size_t nt = gi.cube.time_count();

  if (c.slice_layers != "none") {
    for (std::size_t t = 0; t < nt; ++t) {
      char name[64];
      std::snprintf(name, sizeof name, "spots/spots_%03zu.geojson", t);
      auto f = out.open(name);
      GeoJsonWriter w(f, {{"t_index", t}, {"timestamp", format_timestamp(gi.cube.timestamps()[t])},
                          {"bin", c.confidence_bin}, {"significance", significance_rule_name(c.significance)}});
      for (std::size_t i = 0; i < gi.cube.cell_count(); ++i) {
        if (!a.mask[i] || !gi.cube.present(i, t)) continue;
        const SpotLabel& l = labels.at(i, t);
        if (c.slice_layers == "significant" && !l.significant()) continue;
        w.cell(a.grid, {static_cast<std::uint32_t>(i)},
               {{"gi", gi.cube.value(i, t)}, {"label", spot_kind_name(l.label)}, {"bin", c.confidence_bin}});
      }
    }
  }

  struct Window {
    std::string name;
    std::size_t begin, end;
  };
  std::vector<Window> windows{{"all", 0, nt}};
  if (!events.empty()) {
    const Sectioning sec = section_by_events(gi.cube, events);
    for (const std::string& w : sec.warnings) out.warn(w);
    for (const Section& s : sec.sections) {
      if (s.length() < kMinEmergingSlices) {
        out.warn("section '" + s.label + "' has " + std::to_string(s.length()) + " slices; no emerging layer");
        continue;
      }
      if (sec.sections.size() > 1) windows.push_back({s.label, s.start_index, s.end_index});
    }
  }

  EmergingConfig ec;
  ec.alpha = c.alpha;
  auto sf = out.open("emerging_summary.csv");
  csv::RowWriter sw(sf);
  sw.field("window").field("start_index").field("end_index").field("category").field("polarity").field("count").end();
  for (const Window& win : windows) {
    const EmergingResult er = emerging_classify(labels, gi.cube, ec, win.begin, win.end);
    const std::string name = win.name == "all" ? "emerging.geojson" : "emerging_" + safe_name(win.name) + ".geojson";
    auto f = out.open(name);
    GeoJsonWriter w(f, {{"window", win.name}, {"start_index", win.begin}, {"end_index", win.end}});
    std::map<std::pair<int, int>, std::size_t> counts;
    std::size_t excluded = 0;
    for (std::size_t i = 0; i < er.cells.size(); ++i) {
      if (!a.mask[i]) continue;
      const EmergingCategory& e = er.cells[i];
      if (e.excluded) {
        ++excluded;
      } else {
        ++counts[{static_cast<int>(e.category), static_cast<int>(e.polarity)}];
      }
      nlohmann::json p{{"category", emerging_kind_name(e.category)}, {"polarity", spot_kind_name(e.polarity)},
                       {"intensity_dir", direction_name(e.intensity_trend.direction)}};
      p["intensity_p"] = e.intensity_defined ? nlohmann::json(e.intensity_p) : nlohmann::json(nullptr);
      p["excluded"] = e.excluded;
      w.cell(a.grid, {static_cast<std::uint32_t>(i)}, p);
    }
    w.close();
    for (EmergingKind k : {EmergingKind::new_spot, EmergingKind::unstable, EmergingKind::stable, EmergingKind::none})
      for (SpotKind s : {SpotKind::hot, SpotKind::cold, SpotKind::none}) {
        const bool valid = (k == EmergingKind::none) == (s == SpotKind::none);
        if (!valid) continue;
        const auto it = counts.find({static_cast<int>(k), static_cast<int>(s)});
        sw.field(win.name).field(win.begin).field(win.end).field(emerging_kind_name(k)).field(spot_kind_name(s))
            .field(it == counts.end() ? std::size_t{0} : it->second).end();
      }
    sw.field(win.name).field(win.begin).field(win.end).field("excluded").field("none").field(excluded).end();
  }
  write_warnings(out, report.warnings);
  return report;
}

namespace {

// Reference raster and block zones derived from the scenario baseline so the
// penetration command has something to measure.
void write_reference(const nlohmann::json& scenario, const ScenarioConfig& sc, Outputs& out)
{
  const nlohmann::json ref = scenario.value("reference", nlohmann::json::object());
  const double pen = ref.value("penetration", 0.1);
  const double effect = ref.value("cohort_effect", 0.0);
  const int block = ref.value("zone_block_cells", 10);
  if (!(pen > 0.0) || block < 1) throw Error(ErrorKind::config, "reference penetration and zone_block_cells must be positive");
  const GridSpec& g = sc.grid;
  const int nbx = (g.n_cols() + block - 1) / block, nby = (g.n_rows() + block - 1) / block;

  auto young = [&](int bx) { return 0.2 + 0.3 * (nbx > 1 ? static_cast<double>(bx) / (nbx - 1) : 0.5); };
  auto senior = [&](int by) { return 0.3 - 0.2 * (nby > 1 ? static_cast<double>(by) / (nby - 1) : 0.5); };

  // Penetration of a block rises with its young share when cohort_effect > 0.
  auto block_pen = [&](int bx) { return pen * (1.0 + effect * (young(bx) - 0.35)); };

  RasterPopulation raster{g, CellField(g.cell_count())};
  std::vector<double> zone_pop(static_cast<std::size_t>(nbx * nby), 0.0);
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const ColRow cr = g.col_row({static_cast<std::uint32_t>(i)});
    const int bx = cr.col / block, by = cr.row / block;
    const double p = sc.baseline_mean[i] / block_pen(bx);
    raster.population.set(i, p);
    zone_pop[static_cast<std::size_t>(by * nbx + bx)] += p;
  }
  {
    auto f = out.open("reference.csv");
    write_raster_csv(f, raster);
  }

  ZonalPopulation zones;
  const LocalProjection& proj = g.projection();
  const PlanarPoint o = g.planar_origin();
  const double s = g.cell_size_m();
  for (int by = 0; by < nby; ++by)
    for (int bx = 0; bx < nbx; ++bx) {
      const double x0 = o.x + bx * block * s, y0 = o.y + by * block * s;
      const double x1 = o.x + std::min(g.n_cols(), (bx + 1) * block) * s;
      const double y1 = o.y + std::min(g.n_rows(), (by + 1) * block) * s;
      std::vector<GeoPoint> ring{proj.to_geo({x0, y0}), proj.to_geo({x1, y0}), proj.to_geo({x1, y1}),
                                 proj.to_geo({x0, y1}), proj.to_geo({x0, y0})};
      Zone z;
      z.zone_id = "Z" + std::to_string(by) + "_" + std::to_string(bx);
      z.polygons.push_back({ring});
      z.population = zone_pop[static_cast<std::size_t>(by * nbx + bx)];
      z.cohorts["cohort_young"] = young(bx);
      z.cohorts["cohort_senior"] = senior(by);
      zones.zones.push_back(std::move(z));
    }
  auto f = out.open("zones.geojson");
  write_zones_geojson(f, zones);
}

void write_cells(Outputs& out, const std::string& name, const std::vector<std::uint32_t>& cells)
{
  auto f = out.open(name);
  f << nlohmann::json{{"cells", cells}}.dump() << '\n';
}

} // namespace

RunReport cmd_synth(const nlohmann::json& scenario, const std::string& out_dir)
{
  const ScenarioConfig sc = scenario_from_json(scenario);
  const Scenario s = generate(sc);
  RunReport report;
  Outputs out(out_dir, report);
  {
    auto f = out.open("slices.csv");
    emit_fbdm_csv(s.slices, f);
  }
  {
    auto f = out.open("grid.json");
    f << grid_to_json(sc.grid).dump(2) << '\n';
  }
  {
    auto f = out.open("events.json");
    f << timeline_to_json(sc.events).dump(2) << '\n';
  }
  {
    auto f = out.open("truth.csv");
    write_truth_csv(sc.grid, s.truth, f);
  }
  std::map<CellRole, std::vector<std::uint32_t>> by_role;
  for (std::size_t i = 0; i < s.truth.roles.size(); ++i) by_role[s.truth.roles[i]].push_back(static_cast<std::uint32_t>(i));
  nlohmann::json regions = nlohmann::json::object();
  for (CellRole r : {CellRole::evacuated, CellRole::shelter, CellRole::adjacent_destination}) {
    if (by_role[r].empty()) continue;
    const std::string name = std::string("mask_") + role_name(r) + ".json";
    write_cells(out, name, by_role[r]);
    regions[role_name(r)] = {{"cells_file", name}};
  }
  write_reference(scenario, sc, out);

  nlohmann::json stamps = nlohmann::json::array();
  for (int m : sc.stamps.stamp_times) stamps.push_back(format_minute_of_day(m));
  const nlohmann::json pipeline{{"slices", "slices.csv"},
                                {"grid_file", "grid.json"},
                                {"events", "events.json"},
                                {"reference_raster", {{"csv", "reference.csv"}}},
                                {"zones", "zones.geojson"},
                                {"regions", regions},
                                {"utc_offset_minutes", sc.stamps.utc_offset_minutes},
                                {"stamp_times", stamps},
                                {"output_dir", "report"}};
  auto f = out.open("pipeline.json");
  f << pipeline.dump(2) << '\n';
  return report;
}

namespace {

nlohmann::json read_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, path + ": " + e.what());
  }
}

void append(RunReport& into, const RunReport& from)
{
  into.files.insert(into.files.end(), from.files.begin(), from.files.end());
  into.warnings.insert(into.warnings.end(), from.warnings.begin(), from.warnings.end());
}

} // namespace

RunReport cmd_run_all(const PipelineConfig& c)
{
  if (c.scenario.empty()) throw Error(ErrorKind::usage, "run-all needs a scenario in the config");
  check_paths(c);
  nlohmann::json scenario = read_json(c.scenario);
  if (c.seed) scenario["seed"] = *c.seed;
  const std::string synth_dir = (fs::path(c.output_dir) / "synth").string();
  RunReport report = cmd_synth(scenario, synth_dir);

  PipelineConfig p = load_pipeline_config((fs::path(synth_dir) / "pipeline.json").string());
  p.alpha = c.alpha;
  p.confidence_bin = c.confidence_bin;
  p.neighbor_scheme = c.neighbor_scheme;
  p.tipping_window = c.tipping_window;
  p.significance = c.significance;
  p.analysis_scheme = c.analysis_scheme;
  p.analysis_cell_size_m = c.analysis_cell_size_m;
  p.slice_layers = c.slice_layers;
  if (c.mask.kind != MaskSpec::Kind::none) p.mask = c.mask;

  const auto step = [&](const char* name, RunReport (*fn)(const PipelineConfig&)) {
    PipelineConfig q = p;
    q.output_dir = (fs::path(c.output_dir) / name).string();
    append(report, fn(q));
  };
  step("penetration", cmd_penetration);
  step("dynamics", cmd_dynamics);
  step("trend", cmd_trend);
  step("emerging", cmd_emerging);
  return report;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Population displacement analytics over gridded crisis population slices"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  Overrides o;
  std::string out_dir;
  double alpha = 0.0;
  int bin = 0;
  std::size_t window = 0;
  std::uint64_t seed = 0;
  auto* opt_config = app.add_option("--config", config_path, "pipeline or scenario config (JSON)");
  auto* opt_out = app.add_option("--out", out_dir, "output directory");
  auto* opt_alpha = app.add_option("--alpha", alpha, "trend significance level");
  auto* opt_bin = app.add_option("--bin", bin, "confidence bin for hot/cold spots")->check(CLI::IsMember({90, 95, 99}));
  auto* opt_window = app.add_option("--window", window, "tipping-point window in slices");
  auto* opt_seed = app.add_option("--seed", seed, "scenario seed");

  auto* penetration = app.add_subcommand("penetration", "penetration rates and representativeness regression");
  auto* dynamics = app.add_subcommand("dynamics", "regional z-score and total difference series");
  auto* trend = app.add_subcommand("trend", "per-cell section trends and tipping points");
  auto* emerging = app.add_subcommand("emerging", "hot/cold spots per slice and emerging categories");
  auto* synth = app.add_subcommand("synth", "generate a synthetic crisis scenario");
  auto* run_all = app.add_subcommand("run-all", "synth, then every analysis command");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*opt_out) o.out = out_dir;
  if (*opt_alpha) o.alpha = alpha;
  if (*opt_bin) o.bin = bin;
  if (*opt_window) o.window = window;
  if (*opt_seed) o.seed = seed;

  try {
    if (!*opt_config) throw Error(ErrorKind::usage, "--config is required");
    RunReport report;
    if (synth->parsed()) {
      nlohmann::json j = read_json(config_path);
      std::string base = fs::absolute(config_path).parent_path().string();
      if (!j.contains("baseline_field") && j.contains("scenario")) {
        const std::string sp = (fs::path(base) / j.at("scenario").get<std::string>()).string();
        j = read_json(sp);
      }
      if (o.seed) j["seed"] = *o.seed;
      report = cmd_synth(j, o.out.value_or((fs::path(base) / "synth_out").string()));
    } else {
      PipelineConfig c = load_pipeline_config(config_path);
      apply_overrides(c, o);
      if (penetration->parsed()) report = cmd_penetration(c);
      if (dynamics->parsed()) report = cmd_dynamics(c);
      if (trend->parsed()) report = cmd_trend(c);
      if (emerging->parsed()) report = cmd_emerging(c);
      if (run_all->parsed()) report = cmd_run_all(c);
    }
    for (const std::string& f : report.files) out << "wrote " << f << '\n';
    for (const std::string& w : report.warnings) err << "warning: " << w << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_data_error(e.kind()) ? kExitData : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

} // namespace popshift::cli
