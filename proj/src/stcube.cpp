#include "popshift/stcube.hpp"

#include "popshift/csv.hpp"
#include "popshift/error.hpp"
#include "popshift/metrics.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

namespace popshift {

const char* variable_name(CubeVariable v)
{
  switch (v) {
  case CubeVariable::z_score: return "z_score";
  case CubeVariable::n_crisis: return "n_crisis";
  case CubeVariable::n_difference: return "n_difference";
  case CubeVariable::gi_star: return "gi_star";
  }
  return "unknown";
}

CubeVariable parse_cube_variable(const std::string& s)
{
  for (CubeVariable v : {CubeVariable::z_score, CubeVariable::n_crisis, CubeVariable::n_difference,
                         CubeVariable::gi_star})
    if (s == variable_name(v)) return v;
  throw Error(ErrorKind::invalid_variable, "unknown cube variable '" + s + "'");
}

SpaceTimeCube::SpaceTimeCube(GridSpec grid, std::vector<Timestamp> timestamps, CubeVariable variable,
                             std::vector<double> values, std::vector<std::uint8_t> present)
    : grid_(std::move(grid)), timestamps_(std::move(timestamps)), variable_(variable), n_cells_(grid_.cell_count()),
      values_(std::move(values)), present_(std::move(present))
{
  const std::size_t n = n_cells_ * timestamps_.size();
  if (values_.size() != n || present_.size() != n)
    throw Error(ErrorKind::config, "cube arrays do not match cells x timestamps");
  for (std::size_t i = 1; i < timestamps_.size(); ++i)
    if (!(timestamps_[i - 1] < timestamps_[i])) throw Error(ErrorKind::schema, "cube timestamps must increase");
}

std::size_t SpaceTimeCube::missing_count() const
{
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), 0));
}

bool SpaceTimeCube::operator==(const SpaceTimeCube& o) const
{
  if (!(grid_ == o.grid_) || timestamps_ != o.timestamps_ || variable_ != o.variable_ || present_ != o.present_)
    return false;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (present_[i] && values_[i] != o.values_[i]) return false;
  return true;
}

SliceView slice_view(const SpaceTimeCube& cube, std::size_t t_index)
{
  if (t_index >= cube.time_count())
    throw Error(ErrorKind::out_of_range, "time index " + std::to_string(t_index) + " outside cube");
  return SliceView(cube, t_index);
}

SpaceTimeCube build_cube(const SliceSet& slices, CubeVariable variable, double sigma_min)
{
  if (variable == CubeVariable::gi_star)
    throw Error(ErrorKind::invalid_variable, "gi_star cubes are derived from a z_score cube, not from slices");
  if (slices.size() < 2) throw Error(ErrorKind::too_short, "a cube needs at least two timestamps");
  const std::size_t nc = slices.grid().cell_count();
  const std::size_t nt = slices.size();
  std::vector<double> values(nc * nt, 0.0);
  std::vector<std::uint8_t> present(nc * nt, 0);
  for (std::size_t t = 0; t < nt; ++t) {
    for (const auto& [id, rec] : slices[t].records) {
      std::optional<double> v;
      switch (variable) {
      case CubeVariable::z_score: v = record_z(rec, sigma_min); break;
      case CubeVariable::n_crisis: v = rec.n_crisis; break;
      case CubeVariable::n_difference: v = rec.n_difference; break;
      case CubeVariable::gi_star: break;
      }
      if (!v) continue;
      values[id.index * nt + t] = *v;
      present[id.index * nt + t] = 1;
    }
  }
  return SpaceTimeCube(slices.grid(), slices.timestamps(), variable, std::move(values), std::move(present));
}

SliceSet cube_to_slices(const SpaceTimeCube& cube)
{
  std::vector<Slice> slices;
  const StampOptions stamps;
  for (std::size_t t = 0; t < cube.time_count(); ++t) {
    Slice s;
    s.time = cube.timestamps()[t];
    s.stamp = snap_to_stamp(s.time, stamps).stamp;
    for (std::size_t c = 0; c < cube.cell_count(); ++c) {
      if (!cube.present(c, t)) continue;
      SliceRecord r;
      r.cell = {static_cast<std::uint32_t>(c)};
      const double v = cube.value(c, t);
      if (cube.variable() == CubeVariable::z_score || cube.variable() == CubeVariable::gi_star) {
        r.z_score = v;
      } else {
        r.n_crisis = v;
        r.n_difference = v;
      }
      s.records.emplace(r.cell, r);
    }
    slices.push_back(std::move(s));
  }
  return SliceSet(cube.grid(), std::move(slices), stamps);
}

const char* event_kind_name(EventKind k)
{
  switch (k) {
  case EventKind::order_placed: return "order_placed";
  case EventKind::order_lifted: return "order_lifted";
  case EventKind::other: return "other";
  }
  return "other";
}

EventKind parse_event_kind(const std::string& s)
{
  if (s == "order_placed") return EventKind::order_placed;
  if (s == "order_lifted") return EventKind::order_lifted;
  if (s == "other") return EventKind::other;
  throw Error(ErrorKind::config, "unknown event kind '" + s + "'");
}

EventTimeline::EventTimeline(std::vector<Event> events) : events_(std::move(events))
{
  std::set<std::string> labels;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (i > 0 && events_[i].instant < events_[i - 1].instant)
      throw Error(ErrorKind::config, "event instants must be non-decreasing");
    if (!labels.insert(events_[i].label).second)
      throw Error(ErrorKind::config, "duplicate event label '" + events_[i].label + "'");
  }
}

EventTimeline EventTimeline::for_mask(const std::vector<std::uint8_t>& mask) const
{
  std::vector<Event> kept;
  for (const Event& e : events_) {
    if (!e.zone) {
      kept.push_back(e);
      continue;
    }
    for (CellId c : *e.zone)
      if (c.index < mask.size() && mask[c.index]) {
        kept.push_back(e);
        break;
      }
  }
  return EventTimeline(std::move(kept));
}

nlohmann::json timeline_to_json(const EventTimeline& tl)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const Event& e : tl.events()) {
    nlohmann::json j{{"instant", format_timestamp(e.instant)}, {"kind", event_kind_name(e.kind)}, {"label", e.label}};
    if (e.zone) {
      nlohmann::json z = nlohmann::json::array();
      for (CellId c : *e.zone) z.push_back(c.index);
      j["zone"] = std::move(z);
    }
    arr.push_back(std::move(j));
  }
  return {{"events", arr}};
}

EventTimeline timeline_from_json(const nlohmann::json& j)
{
  const nlohmann::json& arr = j.is_array() ? j : j.at("events");
  std::vector<Event> events;
  try {
    for (const auto& ej : arr) {
      Event e;
      const auto t = parse_timestamp(ej.at("instant").get<std::string>());
      if (!t) throw Error(ErrorKind::config, "event instant does not parse: " + ej.at("instant").dump());
      e.instant = *t;
      e.kind = parse_event_kind(ej.value("kind", std::string("other")));
      e.label = ej.value("label", std::string());
      if (e.label.empty()) e.label = std::string(event_kind_name(e.kind)) + "#" + std::to_string(events.size());
      if (ej.contains("zone") && !ej.at("zone").is_null()) {
        std::vector<CellId> zone;
        for (const auto& c : ej.at("zone")) zone.push_back({c.get<std::uint32_t>()});
        std::sort(zone.begin(), zone.end());
        e.zone = std::move(zone);
      }
      events.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::config, std::string("malformed events: ") + ex.what());
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.instant < b.instant; });
  return EventTimeline(std::move(events));
}

Sectioning section_by_events(std::span<const Timestamp> timestamps, const EventTimeline& timeline)
{
  Sectioning out;
  const std::size_t nt = timestamps.size();
  std::vector<std::pair<std::size_t, std::string>> bounds;
  for (const Event& e : timeline.events()) {
    if (nt == 0 || e.instant > timestamps.back()) {
      out.warnings.push_back("event '" + e.label + "' falls after the last slice; ignored");
      continue;
    }
    const auto idx = static_cast<std::size_t>(
        std::lower_bound(timestamps.begin(), timestamps.end(), e.instant) - timestamps.begin());
    if (idx == 0) continue;
    if (!bounds.empty() && bounds.back().first == idx) {
      bounds.back().second += "+" + e.label;
    } else {
      bounds.emplace_back(idx, e.label);
    }
  }
  std::size_t start = 0;
  std::string label = bounds.empty() ? "all" : "before " + bounds.front().second;
  for (const auto& [idx, lbl] : bounds) {
    out.sections.push_back({start, idx, label});
    start = idx;
    label = lbl;
  }
  out.sections.push_back({start, nt, label});
  return out;
}

Sectioning section_by_events(const SpaceTimeCube& cube, const EventTimeline& timeline)
{
  return section_by_events(std::span<const Timestamp>(cube.timestamps()), timeline);
}

void save_cube(const SpaceTimeCube& cube, const std::string& dir)
{
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw Error(ErrorKind::io, "cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("cells.csv");
    csv::RowWriter w(f);
    w.field("cell_id").field("col").field("row").field("lon").field("lat").end();
    for (std::size_t c = 0; c < cube.cell_count(); ++c) {
      const CellId id{static_cast<std::uint32_t>(c)};
      const ColRow cr = cube.grid().col_row(id);
      const GeoPoint g = cell_centroid(cube.grid(), id);
      w.field(c).field(cr.col).field(cr.row).field(g.lon).field(g.lat).end();
    }
  }
  {
    auto f = open("timestamps.csv");
    csv::RowWriter w(f);
    w.field("t_index").field("timestamp").end();
    for (std::size_t t = 0; t < cube.time_count(); ++t) w.field(t).field(format_timestamp(cube.timestamps()[t])).end();
  }
  {
    auto f = open("values.csv");
    csv::RowWriter w(f);
    w.field("cell_id").field("t_index").field(variable_name(cube.variable())).end();
    for (std::size_t c = 0; c < cube.cell_count(); ++c)
      for (std::size_t t = 0; t < cube.time_count(); ++t) {
        w.field(c).field(t);
        if (cube.present(c, t)) {
          w.field(cube.value(c, t));
        } else {
          w.field("NA");
        }
        w.end();
      }
  }
}

SpaceTimeCube load_cube(const std::string& dir, const GridSpec& grid)
{
  namespace fs = std::filesystem;
  auto open = [&](const char* name) {
    std::ifstream f(fs::path(dir) / name);
    if (!f) throw Error(ErrorKind::io, "cannot read " + (fs::path(dir) / name).string());
    return f;
  };
  std::vector<Timestamp> times;
  {
    auto f = open("timestamps.csv");
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
      if (csv::trim(line).empty()) continue;
      const auto fields = csv::split_line(line);
      const auto t = fields.size() == 2 ? parse_timestamp(fields[1]) : std::nullopt;
      if (!t) throw Error(ErrorKind::row, "timestamps.csv: bad row '" + line + "'");
      times.push_back(*t);
    }
  }
  auto f = open("values.csv");
  std::string line;
  std::getline(f, line);
  const auto header = csv::split_line(line);
  if (header.size() != 3 || header[0] != "cell_id" || header[1] != "t_index")
    throw Error(ErrorKind::schema, "values.csv header must be cell_id,t_index,<variable>");
  const CubeVariable var = parse_cube_variable(header[2]);
  const std::size_t nt = times.size();
  std::vector<double> values(grid.cell_count() * nt, 0.0);
  std::vector<std::uint8_t> present(values.size(), 0);
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    const auto c = fields.size() == 3 ? csv::parse_double(fields[0]) : std::nullopt;
    const auto t = fields.size() == 3 ? csv::parse_double(fields[1]) : std::nullopt;
    if (!c || !t || *c < 0 || *t < 0 || *c >= grid.cell_count() || *t >= nt)
      throw Error(ErrorKind::row, "values.csv line " + std::to_string(line_no) + ": bad cell or time index");
    if (fields[2] == "NA") continue;
    const auto v = csv::parse_double(fields[2]);
    if (!v) throw Error(ErrorKind::row, "values.csv line " + std::to_string(line_no) + ": bad value");
    const std::size_t idx = static_cast<std::size_t>(*c) * nt + static_cast<std::size_t>(*t);
    values[idx] = *v;
    present[idx] = 1;
  }
  return SpaceTimeCube(grid, std::move(times), var, std::move(values), std::move(present));
}

} // namespace popshift
