#include "popshift/ingest.hpp"

#include "popshift/csv.hpp"
#include "popshift/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace popshift {

SnappedTime snap_to_stamp(Timestamp t, const StampOptions& opts)
{
  const int mod = minute_of_day(t, opts.utc_offset_minutes);
  int best_delta = 0;
  std::optional<int> best;
  for (int stamp : opts.stamp_times) {
    // signed circular distance in (-720, 720]
    int d = stamp - mod;
    if (d > 720) d -= 1440;
    if (d <= -720) d += 1440;
    if (std::abs(d) <= opts.snap_tolerance_minutes && (!best || std::abs(d) < std::abs(best_delta))) {
      best = stamp;
      best_delta = d;
    }
  }
  if (!best) return {t, std::nullopt};
  // Drop seconds as well; canonical stamps sit on whole minutes.
  const auto whole = std::chrono::floor<std::chrono::minutes>(t);
  return {Timestamp(whole + std::chrono::minutes(best_delta)), best};
}

SliceSet::SliceSet(GridSpec grid, std::vector<Slice> slices, StampOptions stamps)
    : grid_(std::move(grid)), slices_(std::move(slices)), stamps_(std::move(stamps))
{
  for (std::size_t i = 1; i < slices_.size(); ++i) {
    if (!(slices_[i - 1].time < slices_[i].time))
      throw Error(ErrorKind::schema, "slice timestamps must be strictly increasing");
  }
  for (const Slice& s : slices_) {
    for (const auto& [id, rec] : s.records) {
      if (!grid_.contains(id) || rec.cell != id)
        throw Error(ErrorKind::out_of_range, "slice record references a cell outside the grid");
    }
  }
}

std::set<int> SliceSet::stamp_times() const
{
  std::set<int> out;
  for (const Slice& s : slices_)
    if (s.stamp) out.insert(*s.stamp);
  return out;
}

std::vector<Timestamp> SliceSet::timestamps() const
{
  std::vector<Timestamp> out;
  out.reserve(slices_.size());
  for (const Slice& s : slices_) out.push_back(s.time);
  return out;
}

std::vector<std::size_t> SliceSet::gap_indices() const
{
  std::vector<std::size_t> out;
  const auto limit = std::chrono::minutes(kCadenceMinutes + stamps_.snap_tolerance_minutes);
  for (std::size_t i = 1; i < slices_.size(); ++i)
    if (slices_[i].time - slices_[i - 1].time > limit) out.push_back(i);
  return out;
}

std::size_t SliceSet::record_count() const
{
  std::size_t n = 0;
  for (const Slice& s : slices_) n += s.records.size();
  return n;
}

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

struct Header {
  std::map<std::string, std::size_t> index;
  std::size_t width = 0;

  std::optional<std::size_t> find(const std::string& name) const
  {
    const auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

Header read_header(const std::string& line, const std::vector<std::string>& required)
{
  Header h;
  const auto names = csv::split_line(line);
  h.width = names.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!h.index.emplace(names[i], i).second) throw Error(ErrorKind::schema, "duplicate column '" + names[i] + "'");
  }
  std::string missing;
  for (const auto& r : required)
    if (!h.index.contains(r)) missing += (missing.empty() ? "" : ", ") + r;
  if (!missing.empty()) throw Error(ErrorKind::schema, "missing required column(s): " + missing);
  return h;
}

bool is_na(std::string_view s)
{
  return s.empty() || s == "NA" || s == "NaN" || s == "nan";
}

double required_number(const std::vector<std::string>& f, std::size_t col, const char* name, std::size_t line)
{
  const auto v = csv::parse_double(f[col]);
  if (!v || !std::isfinite(*v))
    throw Error(ErrorKind::row, at_line(line) + "cannot parse " + name + " '" + f[col] + "'");
  return *v;
}

std::optional<double> optional_number(const std::vector<std::string>& f, std::optional<std::size_t> col,
                                      const char* name, std::size_t line)
{
  if (!col || is_na(f[*col])) return std::nullopt;
  const auto v = csv::parse_double(f[*col]);
  if (!v || !std::isfinite(*v))
    throw Error(ErrorKind::row, at_line(line) + "cannot parse " + name + " '" + f[*col] + "'");
  return v;
}

bool getline_any(std::istream& in, std::string& line)
{
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

} // namespace

ParsedSlices parse_slices(std::istream& in, const GridSpec& grid, const StampOptions& stamps)
{
  std::string line;
  std::size_t line_no = 0;
  ParseReport report;
  while (getline_any(in, line)) {
    ++line_no;
    if (!csv::trim(line).empty()) break;
    ++report.blank_lines;
  }
  if (csv::trim(line).empty()) throw Error(ErrorKind::schema, "missing header row");
  const Header h = read_header(line, {"timestamp", "lon", "lat", "n_baseline", "n_crisis"});
  const std::size_t c_ts = *h.find("timestamp"), c_lon = *h.find("lon"), c_lat = *h.find("lat");
  const std::size_t c_base = *h.find("n_baseline"), c_crisis = *h.find("n_crisis");
  const auto c_diff = h.find("n_difference"), c_pct = h.find("percent_change");
  const auto c_z = h.find("z_score"), c_sigma = h.find("baseline_sigma");

  struct Keyed {
    SliceRecord rec;
    std::optional<int> stamp;
    std::size_t line;
  };
  std::map<Timestamp, std::unordered_map<std::uint32_t, Keyed>> by_time;

  while (getline_any(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) {
      ++report.blank_lines;
      continue;
    }
    ++report.data_lines;
    const auto f = csv::split_line(line);
    if (f.size() != h.width)
      throw Error(ErrorKind::row, at_line(line_no) + "expected " + std::to_string(h.width) + " fields, found " +
                                      std::to_string(f.size()));
    const auto ts = parse_timestamp(f[c_ts]);
    if (!ts) throw Error(ErrorKind::row, at_line(line_no) + "cannot parse timestamp '" + f[c_ts] + "'");
    const double lon = required_number(f, c_lon, "lon", line_no);
    const double lat = required_number(f, c_lat, "lat", line_no);

    SliceRecord rec;
    rec.n_baseline = required_number(f, c_base, "n_baseline", line_no);
    rec.n_crisis = required_number(f, c_crisis, "n_crisis", line_no);
    if (rec.n_baseline < 0 || rec.n_crisis < 0)
      throw Error(ErrorKind::row, at_line(line_no) + "population counts must be non-negative");
    const auto diff = optional_number(f, c_diff, "n_difference", line_no);
    if (diff) {
      if (std::abs(*diff - (rec.n_crisis - rec.n_baseline)) > 1e-6 * std::max(1.0, rec.n_baseline))
        throw Error(ErrorKind::row, at_line(line_no) + "n_difference disagrees with n_crisis - n_baseline");
      rec.n_difference = *diff;
    } else {
      rec.n_difference = rec.n_crisis - rec.n_baseline;
    }
    rec.percent_change = optional_number(f, c_pct, "percent_change", line_no);
    rec.z_score = optional_number(f, c_z, "z_score", line_no);
    rec.baseline_sigma = optional_number(f, c_sigma, "baseline_sigma", line_no);
    if (rec.baseline_sigma && *rec.baseline_sigma < 0)
      throw Error(ErrorKind::row, at_line(line_no) + "baseline_sigma must be non-negative");

    const auto cell = grid.locate({lon, lat});
    if (!cell) {
      ++report.dropped_outside;
      continue;
    }
    rec.cell = *cell;
    const SnappedTime snapped = snap_to_stamp(*ts, stamps);
    if (!snapped.stamp) ++report.non_canonical_rows;
    auto& bucket = by_time[snapped.time];
    const auto [it, inserted] = bucket.try_emplace(cell->index, Keyed{rec, snapped.stamp, line_no});
    if (!inserted)
      throw Error(ErrorKind::duplicate, "lines " + std::to_string(it->second.line) + " and " +
                                            std::to_string(line_no) + " share timestamp " +
                                            format_timestamp(snapped.time) + " and cell " +
                                            std::to_string(cell->index));
    ++report.records;
  }

  std::vector<Slice> slices;
  slices.reserve(by_time.size());
  for (auto& [t, bucket] : by_time) {
    Slice s;
    s.time = t;
    for (auto& [id, k] : bucket) {
      s.stamp = k.stamp;
      s.records.emplace(k.rec.cell, k.rec);
    }
    slices.push_back(std::move(s));
  }
  return {SliceSet(grid, std::move(slices), stamps), report};
}

ParsedSlices read_slices_file(const std::string& path, const GridSpec& grid, const StampOptions& stamps)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  try {
    return parse_slices(in, grid, stamps);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.detail());
  }
}

RasterPopulation read_raster_csv(std::istream& in, const GridSpec& descriptor)
{
  if (descriptor.scheme() != CellScheme::square)
    throw Error(ErrorKind::config, "reference raster grids must use square cells");
  std::string line;
  std::size_t line_no = 0;
  while (getline_any(in, line)) {
    ++line_no;
    if (!csv::trim(line).empty()) break;
  }
  if (csv::trim(line).empty()) throw Error(ErrorKind::schema, "missing header row");
  const Header h = read_header(line, {"lon", "lat", "population"});
  const std::size_t c_lon = *h.find("lon"), c_lat = *h.find("lat"), c_pop = *h.find("population");

  RasterPopulation out{descriptor, CellField(descriptor.cell_count())};
  std::vector<std::size_t> seen_at(descriptor.cell_count(), 0);
  while (getline_any(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != h.width) throw Error(ErrorKind::row, at_line(line_no) + "wrong field count");
    const double lon = required_number(f, c_lon, "lon", line_no);
    const double lat = required_number(f, c_lat, "lat", line_no);
    if (is_na(f[c_pop])) continue;
    const double pop = required_number(f, c_pop, "population", line_no);
    if (pop < 0) throw Error(ErrorKind::row, at_line(line_no) + "population must be non-negative");
    const auto cell = descriptor.locate({lon, lat});
    if (!cell) continue;
    if (seen_at[cell->index] != 0)
      throw Error(ErrorKind::duplicate, "lines " + std::to_string(seen_at[cell->index]) + " and " +
                                            std::to_string(line_no) + " fall in the same raster cell");
    seen_at[cell->index] = line_no;
    out.population.set(cell->index, pop);
  }
  return out;
}

RasterPopulation read_ascii_grid(std::istream& in)
{
  std::vector<std::string> tokens;
  for (std::string t; in >> t;) tokens.push_back(std::move(t));
  std::map<std::string, double> header;
  std::size_t pos = 0;
  // Header keys are words; the first bare number starts the data block.
  while (pos < tokens.size() && !csv::parse_double(tokens[pos])) {
    std::string key = tokens[pos];
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto v = pos + 1 < tokens.size() ? csv::parse_double(tokens[pos + 1]) : std::nullopt;
    if (!v) throw Error(ErrorKind::schema, "ascii grid header key '" + tokens[pos] + "' has no value");
    header[key] = *v;
    pos += 2;
  }
  for (const char* k : {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize"})
    if (!header.contains(k)) throw Error(ErrorKind::schema, std::string("ascii grid header lacks ") + k);
  const int ncols = static_cast<int>(header["ncols"]);
  const int nrows = static_cast<int>(header["nrows"]);
  const double cell = header["cellsize"];
  const GeoPoint origin{header["xllcorner"], header["yllcorner"]};
  GeoPoint anchor = origin;
  if (header.contains("anchor_lon") && header.contains("anchor_lat")) {
    anchor = {header["anchor_lon"], header["anchor_lat"]};
  } else {
    const LocalProjection p(origin);
    anchor = p.to_geo({ncols * cell / 2.0, nrows * cell / 2.0});
  }
  GridSpec grid(CellScheme::square, origin, cell, ncols, nrows, anchor);
  const bool has_nodata = header.contains("nodata_value");
  const double nodata = has_nodata ? header["nodata_value"] : 0.0;

  RasterPopulation out{grid, CellField(grid.cell_count())};
  for (int r = nrows - 1; r >= 0; --r) {
    for (int c = 0; c < ncols; ++c) {
      if (pos >= tokens.size()) throw Error(ErrorKind::schema, "ascii grid has fewer values than ncols*nrows");
      const std::string& token = tokens[pos++];
      const auto v = csv::parse_double(token);
      if (!v) throw Error(ErrorKind::row, "ascii grid value '" + token + "' is not a number");
      if (has_nodata && *v == nodata) continue;
      if (*v < 0) throw Error(ErrorKind::row, "ascii grid population must be non-negative");
      out.population.set(grid.cell_at({c, r}).index, *v);
    }
  }
  return out;
}

void write_raster_csv(std::ostream& out, const RasterPopulation& raster)
{
  csv::RowWriter w(out);
  w.field("lon").field("lat").field("population").end();
  for (std::size_t i = 0; i < raster.population.size(); ++i) {
    if (!raster.population.has(i)) continue;
    const GeoPoint c = cell_centroid(raster.grid, {static_cast<std::uint32_t>(i)});
    w.field(c.lon).field(c.lat).field(raster.population.value[i]).end();
  }
}

bool Zone::contains(GeoPoint p) const
{
  for (const auto& poly : polygons) {
    if (poly.empty() || !point_in_ring(p, poly[0])) continue;
    bool in_hole = false;
    for (std::size_t h = 1; h < poly.size() && !in_hole; ++h) in_hole = point_in_ring(p, poly[h]);
    if (!in_hole) return true;
  }
  return false;
}

GeoBox Zone::bounds() const
{
  GeoBox b{1e300, 1e300, -1e300, -1e300};
  for (const auto& poly : polygons)
    for (const auto& ring : poly)
      for (const GeoPoint& p : ring) {
        b.lon_min = std::min(b.lon_min, p.lon);
        b.lat_min = std::min(b.lat_min, p.lat);
        b.lon_max = std::max(b.lon_max, p.lon);
        b.lat_max = std::max(b.lat_max, p.lat);
      }
  return b;
}

namespace {

std::vector<GeoPoint> parse_ring(const nlohmann::json& j)
{
  std::vector<GeoPoint> ring;
  for (const auto& p : j) ring.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  if (ring.size() < 4 || !(ring.front() == ring.back()))
    throw Error(ErrorKind::schema, "polygon rings need at least four positions and must be closed");
  return ring;
}

bool ring_self_intersects(const std::vector<GeoPoint>& ring)
{
  const std::size_t n = ring.size() - 1;  // closed
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross_properly(ring[i], ring[i + 1], ring[j], ring[j + 1])) return true;
    }
  return false;
}

bool boxes_overlap(const GeoBox& a, const GeoBox& b)
{
  return a.lon_min <= b.lon_max && b.lon_min <= a.lon_max && a.lat_min <= b.lat_max && b.lat_min <= a.lat_max;
}

bool zones_edges_cross(const Zone& a, const Zone& b)
{
  for (const auto& pa : a.polygons)
    for (const auto& ra : pa)
      for (const auto& pb : b.polygons)
        for (const auto& rb : pb)
          for (std::size_t i = 0; i + 1 < ra.size(); ++i)
            for (std::size_t j = 0; j + 1 < rb.size(); ++j)
              if (segments_cross_properly(ra[i], ra[i + 1], rb[j], rb[j + 1])) return true;
  return false;
}

} // namespace

ZonalPopulation read_zones_geojson(std::istream& in)
{
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("zones GeoJSON does not parse: ") + e.what());
  }
  ZonalPopulation out;
  try {
    if (doc.at("type") != "FeatureCollection") throw Error(ErrorKind::schema, "zones must be a FeatureCollection");
    for (const auto& feat : doc.at("features")) {
      Zone z;
      const auto& props = feat.at("properties");
      const auto& id = props.at("zone_id");
      z.zone_id = id.is_string() ? id.get<std::string>() : id.dump();
      z.population = props.at("population").get<double>();
      if (!(z.population >= 0)) throw Error(ErrorKind::schema, "zone " + z.zone_id + " has negative population");
      for (const auto& [k, v] : props.items())
        if (k.starts_with("cohort_") && v.is_number()) z.cohorts[k] = v.get<double>();
      const auto& geom = feat.at("geometry");
      const std::string type = geom.at("type").get<std::string>();
      auto add_polygon = [&](const nlohmann::json& rings) {
        std::vector<std::vector<GeoPoint>> poly;
        for (const auto& r : rings) {
          poly.push_back(parse_ring(r));
          if (ring_self_intersects(poly.back()))
            throw Error(ErrorKind::schema, "zone " + z.zone_id + " has a self-intersecting ring");
        }
        z.polygons.push_back(std::move(poly));
      };
      if (type == "Polygon") {
        add_polygon(geom.at("coordinates"));
      } else if (type == "MultiPolygon") {
        for (const auto& p : geom.at("coordinates")) add_polygon(p);
      } else {
        throw Error(ErrorKind::schema, "zone " + z.zone_id + " geometry must be Polygon or MultiPolygon");
      }
      out.zones.push_back(std::move(z));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed zones GeoJSON: ") + e.what());
  }
  return out;
}

void write_zones_geojson(std::ostream& out, const ZonalPopulation& zones)
{
  nlohmann::json fc{{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  for (const Zone& z : zones.zones) {
    nlohmann::json coords = nlohmann::json::array();
    for (const auto& poly : z.polygons) {
      nlohmann::json rings = nlohmann::json::array();
      for (const auto& ring : poly) {
        nlohmann::json r = nlohmann::json::array();
        for (const GeoPoint& p : ring) r.push_back({p.lon, p.lat});
        rings.push_back(std::move(r));
      }
      coords.push_back(std::move(rings));
    }
    nlohmann::json props{{"zone_id", z.zone_id}, {"population", z.population}};
    for (const auto& [k, v] : z.cohorts) props[k] = v;
    nlohmann::json geom = z.polygons.size() == 1
                              ? nlohmann::json{{"type", "Polygon"}, {"coordinates", coords[0]}}
                              : nlohmann::json{{"type", "MultiPolygon"}, {"coordinates", coords}};
    fc["features"].push_back({{"type", "Feature"}, {"properties", props}, {"geometry", geom}});
  }
  out << fc.dump() << '\n';
}

std::vector<int> assign_cells_to_zones(const GridSpec& grid, const ZonalPopulation& zones)
{
  const std::size_t nz = zones.zones.size();
  std::vector<GeoBox> boxes;
  boxes.reserve(nz);
  for (const Zone& z : zones.zones) boxes.push_back(z.bounds());

  std::set<std::pair<std::size_t, std::size_t>> overlapping;
  for (std::size_t a = 0; a < nz; ++a)
    for (std::size_t b = a + 1; b < nz; ++b)
      if (boxes_overlap(boxes[a], boxes[b]) && zones_edges_cross(zones.zones[a], zones.zones[b]))
        overlapping.insert({a, b});

  std::vector<int> zone_of(grid.cell_count(), -1);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const GeoPoint c = cell_centroid(grid, {static_cast<std::uint32_t>(i)});
    for (std::size_t z = 0; z < nz; ++z) {
      const GeoBox& b = boxes[z];
      if (c.lon < b.lon_min || c.lon > b.lon_max || c.lat < b.lat_min || c.lat > b.lat_max) continue;
      if (!zones.zones[z].contains(c)) continue;
      if (zone_of[i] >= 0) {
        overlapping.insert({static_cast<std::size_t>(zone_of[i]), z});
      } else {
        zone_of[i] = static_cast<int>(z);
      }
    }
  }
  if (!overlapping.empty()) {
    std::string msg = "overlapping zones:";
    for (const auto& [a, b] : overlapping) msg += " (" + zones.zones[a].zone_id + ", " + zones.zones[b].zone_id + ")";
    throw Error(ErrorKind::ambiguity, msg);
  }
  return zone_of;
}

std::vector<OverlapWeight> overlap_weights(const GridSpec& source, const GridSpec& target)
{
  if (source.scheme() != CellScheme::square)
    throw Error(ErrorKind::config, "overlap source must be a square grid");
  const bool same_frame = source.projection() == target.projection();
  const PlanarPoint so = source.planar_origin();
  const double s = source.cell_size_m();

  std::vector<OverlapWeight> out;
  for (std::size_t t = 0; t < target.cell_count(); ++t) {
    const CellId tid{static_cast<std::uint32_t>(t)};
    Ring ring = target.polygon_planar(tid);
    if (!same_frame)
      for (PlanarPoint& p : ring) p = source.projection().to_planar(target.projection().to_geo(p));
    const PlanarRect bb = bounding_rect(ring);
    const int c0 = std::max(0, static_cast<int>(std::floor((bb.x_min - so.x) / s)));
    const int c1 = std::min(source.n_cols() - 1, static_cast<int>(std::floor((bb.x_max - so.x) / s)));
    const int r0 = std::max(0, static_cast<int>(std::floor((bb.y_min - so.y) / s)));
    const int r1 = std::min(source.n_rows() - 1, static_cast<int>(std::floor((bb.y_max - so.y) / s)));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) {
        const PlanarRect rect{so.x + c * s, so.y + r * s, so.x + (c + 1) * s, so.y + (r + 1) * s};
        double overlap = 0.0;
        if (target.scheme() == CellScheme::square) {
          const double w = std::min(bb.x_max, rect.x_max) - std::max(bb.x_min, rect.x_min);
          const double h = std::min(bb.y_max, rect.y_max) - std::max(bb.y_min, rect.y_min);
          overlap = w > 0 && h > 0 ? w * h : 0.0;
        } else {
          overlap = signed_area(clip_to_rect(ring, rect));
        }
        const double fraction = overlap / rect.area();
        if (fraction > 1e-14)
          out.push_back({source.cell_at({c, r}).index, static_cast<std::uint32_t>(t), fraction});
      }
  }
  return out;
}

CellField resample_to_grid(const RasterPopulation& ref, const GridSpec& target)
{
  const auto weights = overlap_weights(ref.grid, target);
  if (weights.empty()) throw Error(ErrorKind::no_overlap, "reference raster does not overlap the target grid");
  CellField out(target.cell_count());
  for (const OverlapWeight& w : weights) {
    if (!ref.population.has(w.source)) continue;
    out.value[w.target] += ref.population.value[w.source] * w.fraction;
    out.present[w.target] = 1;
  }
  return out;
}

CellField square_to_hex_transfer(const GridSpec& square, const CellField& field, const GridSpec& hex,
                                 TransferMode mode)
{
  if (field.size() != square.cell_count()) throw Error(ErrorKind::config, "field size does not match square grid");
  const auto weights = overlap_weights(square, hex);
  if (weights.empty()) throw Error(ErrorKind::no_overlap, "square grid does not overlap the hexagon grid");
  CellField out(hex.cell_count());
  std::vector<double> area(hex.cell_count(), 0.0);
  for (const OverlapWeight& w : weights) {
    if (!field.has(w.source)) continue;
    out.value[w.target] += field.value[w.source] * w.fraction;
    area[w.target] += w.fraction;
    out.present[w.target] = 1;
  }
  if (mode == TransferMode::mean)
    for (std::size_t t = 0; t < out.size(); ++t)
      if (out.has(t)) out.value[t] /= area[t];
  return out;
}

SliceVariable parse_slice_variable(const std::string& s)
{
  if (s == "n_baseline") return SliceVariable::n_baseline;
  if (s == "n_crisis") return SliceVariable::n_crisis;
  if (s == "n_difference") return SliceVariable::n_difference;
  throw Error(ErrorKind::invalid_variable, "unknown slice variable '" + s + "'");
}

double record_value(const SliceRecord& r, SliceVariable v)
{
  switch (v) {
  case SliceVariable::n_baseline: return r.n_baseline;
  case SliceVariable::n_crisis: return r.n_crisis;
  case SliceVariable::n_difference: return r.n_difference;
  }
  return 0.0;
}

ZonalTotals zonal_sum(const SliceSet& slices, const ZonalPopulation& zones, SliceVariable variable)
{
  const auto zone_of = assign_cells_to_zones(slices.grid(), zones);
  ZonalTotals out;
  const std::size_t nz = zones.zones.size();
  const std::size_t nt = slices.size();
  for (const Zone& z : zones.zones) out.zone_ids.push_back(z.zone_id);
  out.timestamps = slices.timestamps();
  out.totals.assign(nz * nt, 0.0);
  out.cells_in_zone.assign(nz, 0);
  for (int z : zone_of)
    if (z >= 0) ++out.cells_in_zone[z];
  for (std::size_t t = 0; t < nt; ++t)
    for (const auto& [id, rec] : slices[t].records) {
      const int z = zone_of[id.index];
      if (z >= 0) out.totals[z * nt + t] += record_value(rec, variable);
    }
  out.empty_zone.resize(nz);
  for (std::size_t z = 0; z < nz; ++z) out.empty_zone[z] = out.cells_in_zone[z] == 0;
  return out;
}

ZonalField zonal_field_sum(const GridSpec& grid, const CellField& field, const ZonalPopulation& zones)
{
  if (field.size() != grid.cell_count()) throw Error(ErrorKind::config, "field size does not match grid");
  const auto zone_of = assign_cells_to_zones(grid, zones);
  ZonalField out;
  out.total.assign(zones.zones.size(), 0.0);
  out.cells_in_zone.assign(zones.zones.size(), 0);
  for (std::size_t i = 0; i < zone_of.size(); ++i) {
    if (zone_of[i] < 0) continue;
    ++out.cells_in_zone[zone_of[i]];
    if (field.has(i)) out.total[zone_of[i]] += field.value[i];
  }
  return out;
}

} // namespace popshift
