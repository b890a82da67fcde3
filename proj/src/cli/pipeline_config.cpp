#include "popshift/cli.hpp"

#include "popshift/csv.hpp"
#include "popshift/error.hpp"

#include <filesystem>
#include <fstream>

namespace popshift::cli {

namespace fs = std::filesystem;

StampOptions PipelineConfig::stamp_options() const
{
  StampOptions s;
  s.utc_offset_minutes = utc_offset_minutes;
  s.stamp_times = stamp_times;
  return s;
}

namespace {

std::string resolve(const std::string& base, const std::string& p)
{
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path.lexically_normal().string()
                                            : (fs::path(base) / path).lexically_normal().string();
}

std::string str(const nlohmann::json& j, const char* key)
{
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<std::string>() : std::string();
}

MaskSpec mask_from_json(const nlohmann::json& j, const std::string& base)
{
  MaskSpec m;
  if (j.is_null()) return m;
  if (j.is_array()) {
    m.kind = MaskSpec::Kind::cells;
    m.cells = j.get<std::vector<std::uint32_t>>();
  } else if (j.contains("cells")) {
    m.kind = MaskSpec::Kind::cells;
    m.cells = j.at("cells").get<std::vector<std::uint32_t>>();
  } else if (j.contains("cells_file")) {
    m.kind = MaskSpec::Kind::cells_file;
    m.path = resolve(base, j.at("cells_file").get<std::string>());
  } else if (j.contains("polygon_file")) {
    m.kind = MaskSpec::Kind::polygon_file;
    m.path = resolve(base, j.at("polygon_file").get<std::string>());
  } else {
    throw Error(ErrorKind::config, "mask needs one of cells, cells_file, polygon_file");
  }
  return m;
}

void require(const std::string& path, const char* what)
{
  if (!path.empty() && !fs::exists(path)) throw Error(ErrorKind::config, std::string(what) + " not found: " + path);
}

std::vector<std::uint32_t> read_cell_list(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  const auto first = in.peek();
  if (first == '[' || first == '{') {
    try {
      const auto j = nlohmann::json::parse(in);
      return (j.is_array() ? j : j.at("cells")).get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::schema, path + ": " + e.what());
    }
  }
  // CSV with a cell_id column
  std::string line;
  std::getline(in, line);
  const auto header = csv::split_line(line);
  const auto it = std::find(header.begin(), header.end(), "cell_id");
  if (it == header.end()) throw Error(ErrorKind::schema, path + ": no cell_id column");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<std::uint32_t> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_line(line);
    const auto v = col < f.size() ? csv::parse_double(f[col]) : std::nullopt;
    if (!v || *v < 0) throw Error(ErrorKind::row, path + ": line " + std::to_string(line_no) + ": bad cell_id");
    out.push_back(static_cast<std::uint32_t>(*v));
  }
  return out;
}

// Polygon features without the zone property requirements (fire perimeters
// and the like).
ZonalPopulation read_polygons(std::istream& in, const std::string& path)
{
  ZonalPopulation out;
  try {
    const auto doc = nlohmann::json::parse(in);
    const auto& features = doc.at("type") == "FeatureCollection" ? doc.at("features") : nlohmann::json::array({doc});
    for (const auto& f : features) {
      const auto& g = f.contains("geometry") ? f.at("geometry") : f;
      Zone z;
      auto add = [&](const nlohmann::json& rings) {
        std::vector<std::vector<GeoPoint>> poly;
        for (const auto& r : rings) {
          std::vector<GeoPoint> ring;
          for (const auto& pt : r) ring.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
          poly.push_back(std::move(ring));
        }
        z.polygons.push_back(std::move(poly));
      };
      const std::string type = g.at("type").get<std::string>();
      if (type == "Polygon") {
        add(g.at("coordinates"));
      } else if (type == "MultiPolygon") {
        for (const auto& p : g.at("coordinates")) add(p);
      } else {
        throw Error(ErrorKind::schema, path + ": mask geometry must be Polygon or MultiPolygon");
      }
      out.zones.push_back(std::move(z));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, path + ": " + e.what());
  }
  return out;
}

} // namespace

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::string& base)
{
  PipelineConfig c;
  try {
    c.slices = resolve(base, str(j, "slices"));
    if (j.contains("grid")) c.grid = j.at("grid");
    c.grid_file = resolve(base, str(j, "grid_file"));
    if (j.contains("reference_raster") && !j.at("reference_raster").is_null()) {
      const auto& r = j.at("reference_raster");
      ReferenceRaster rr;
      if (r.is_string()) {
        rr.csv = resolve(base, r.get<std::string>());
      } else {
        rr.csv = resolve(base, str(r, "csv"));
        rr.ascii = resolve(base, str(r, "ascii"));
        if (r.contains("descriptor")) {
          const auto& d = r.at("descriptor");
          if (d.is_string()) {
            const std::string dp = resolve(base, d.get<std::string>());
            require(dp, "raster descriptor");
            std::ifstream in(dp);
            rr.descriptor = nlohmann::json::parse(in);
          } else {
            rr.descriptor = d;
          }
        }
      }
      if (rr.csv.empty() == rr.ascii.empty())
        throw Error(ErrorKind::config, "reference_raster needs exactly one of csv, ascii");
      c.reference_raster = rr;
    }
    c.zones = resolve(base, str(j, "zones"));
    c.events = resolve(base, str(j, "events"));
    c.scenario = resolve(base, str(j, "scenario"));
    if (j.contains("mask")) c.mask = mask_from_json(j.at("mask"), base);
    if (j.contains("regions"))
      for (const auto& [name, m] : j.at("regions").items()) c.regions[name] = mask_from_json(m, base);
    c.alpha = j.value("alpha", c.alpha);
    c.confidence_bin = j.value("confidence_bin", c.confidence_bin);
    if (j.contains("neighbor_scheme")) c.neighbor_scheme = neighbor_scheme_from_json(j.at("neighbor_scheme"));
    c.tipping_window = j.value("tipping_window", c.tipping_window);
    c.output_dir = resolve(base, j.value("output_dir", c.output_dir));
    c.utc_offset_minutes = j.value("utc_offset_minutes", c.utc_offset_minutes);
    if (j.contains("stamp_times")) {
      c.stamp_times.clear();
      for (const auto& s : j.at("stamp_times")) {
        const auto m = s.is_string() ? parse_minute_of_day(s.get<std::string>()) : std::optional<int>(s.get<int>());
        if (!m) throw Error(ErrorKind::config, "bad stamp time " + s.dump());
        c.stamp_times.push_back(*m);
      }
    }
    if (j.contains("significance")) c.significance = parse_significance_rule(j.at("significance").get<std::string>());
    if (j.contains("analysis_scheme")) c.analysis_scheme = parse_scheme(j.at("analysis_scheme").get<std::string>());
    if (j.contains("analysis_cell_size_m")) c.analysis_cell_size_m = j.at("analysis_cell_size_m").get<double>();
    c.slice_layers = j.value("slice_layers", c.slice_layers);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("pipeline config: ") + e.what());
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw Error(ErrorKind::config, "alpha must lie in (0, 1)");
  parse_confidence_bin(c.confidence_bin);
  if (c.slice_layers != "significant" && c.slice_layers != "all" && c.slice_layers != "none")
    throw Error(ErrorKind::config, "slice_layers must be significant, all or none");
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, path + ": " + e.what());
  }
  return pipeline_config_from_json(j, fs::absolute(path).parent_path().string());
}

void check_paths(const PipelineConfig& c)
{
  require(c.slices, "slices");
  require(c.grid_file, "grid_file");
  if (c.reference_raster) {
    require(c.reference_raster->csv, "reference raster");
    require(c.reference_raster->ascii, "reference raster");
  }
  require(c.zones, "zones");
  require(c.events, "events");
  require(c.scenario, "scenario");
  require(c.mask.path, "mask file");
  for (const auto& [name, m] : c.regions) require(m.path, "region mask file");
}

void apply_overrides(PipelineConfig& c, const Overrides& o)
{
  if (o.out) c.output_dir = fs::absolute(*o.out).lexically_normal().string();
  if (o.alpha) {
    if (!(*o.alpha > 0.0 && *o.alpha < 1.0)) throw Error(ErrorKind::config, "alpha must lie in (0, 1)");
    c.alpha = *o.alpha;
  }
  if (o.bin) {
    parse_confidence_bin(*o.bin);
    c.confidence_bin = *o.bin;
  }
  if (o.window) c.tipping_window = *o.window;
  if (o.seed) c.seed = *o.seed;
}

GridSpec load_grid(const PipelineConfig& c)
{
  if (c.grid) return grid_from_json(*c.grid);
  if (c.grid_file.empty()) throw Error(ErrorKind::usage, "config needs grid or grid_file");
  std::ifstream in(c.grid_file);
  if (!in) throw Error(ErrorKind::config, "cannot read " + c.grid_file);
  try {
    return grid_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, c.grid_file + ": " + e.what());
  }
}

CellMask resolve_mask(const MaskSpec& spec, const GridSpec& grid)
{
  CellMask m(grid.cell_count(), 0);
  switch (spec.kind) {
  case MaskSpec::Kind::none: std::fill(m.begin(), m.end(), 1); return m;
  case MaskSpec::Kind::cells:
  case MaskSpec::Kind::cells_file: {
    const auto cells = spec.kind == MaskSpec::Kind::cells ? spec.cells : read_cell_list(spec.path);
    for (std::uint32_t c : cells) {
      if (c >= grid.cell_count())
        throw Error(ErrorKind::config, "mask cell " + std::to_string(c) + " outside the grid");
      m[c] = 1;
    }
    return m;
  }
  case MaskSpec::Kind::polygon_file: {
    std::ifstream in(spec.path);
    if (!in) throw Error(ErrorKind::io, "cannot read " + spec.path);
    const ZonalPopulation polys = read_polygons(in, spec.path);
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
      const GeoPoint p = cell_centroid(grid, {static_cast<std::uint32_t>(i)});
      for (const Zone& z : polys.zones)
        if (z.contains(p)) {
          m[i] = 1;
          break;
        }
    }
    return m;
  }
  }
  return m;
}

} // namespace popshift::cli
