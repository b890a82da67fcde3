#pragma once

#include "popshift/field.hpp"
#include "popshift/grid.hpp"
#include "popshift/timeutil.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace popshift {

// One cell of one 8-hour slice in the FBDM schema.
struct SliceRecord {
  CellId cell;
  double n_baseline = 0.0;
  double n_crisis = 0.0;
  double n_difference = 0.0;
  std::optional<double> percent_change;
  std::optional<double> z_score;
  std::optional<double> baseline_sigma;

  bool operator==(const SliceRecord&) const = default;
};

struct Slice {
  Timestamp time;
  std::optional<int> stamp;  // local minute-of-day when canonical
  std::map<CellId, SliceRecord> records;

  bool canonical() const { return stamp.has_value(); }
  const SliceRecord* find(CellId c) const
  {
    const auto it = records.find(c);
    return it == records.end() ? nullptr : &it->second;
  }
  bool operator==(const Slice&) const = default;
};

inline constexpr int kCadenceMinutes = 8 * 60;

struct StampOptions {
  int utc_offset_minutes = 0;
  std::vector<int> stamp_times{60, 9 * 60, 17 * 60};
  int snap_tolerance_minutes = 30;
};

struct SnappedTime {
  Timestamp time;
  std::optional<int> stamp;
};

// Snaps t to the nearest canonical stamp when within tolerance.
SnappedTime snap_to_stamp(Timestamp t, const StampOptions& opts);

// Time-ordered slices on one grid. Cells absent from a slice are missing.
class SliceSet {
public:
  SliceSet(GridSpec grid, std::vector<Slice> slices, StampOptions stamps = {});

  const GridSpec& grid() const { return grid_; }
  const std::vector<Slice>& slices() const { return slices_; }
  std::size_t size() const { return slices_.size(); }
  bool empty() const { return slices_.empty(); }
  const Slice& operator[](std::size_t i) const { return slices_[i]; }
  const StampOptions& stamp_options() const { return stamps_; }

  std::set<int> stamp_times() const;
  std::vector<Timestamp> timestamps() const;
  // Indices i where the interval (i-1, i] exceeds one cadence step.
  std::vector<std::size_t> gap_indices() const;
  std::size_t record_count() const;

  bool operator==(const SliceSet& o) const { return grid_ == o.grid_ && slices_ == o.slices_; }

private:
  GridSpec grid_;
  std::vector<Slice> slices_;
  StampOptions stamps_;
};

// Header names of the slice CSV, in emission order.
inline const std::vector<std::string> kSliceColumns{"timestamp", "lon",       "lat",     "n_baseline",    "n_crisis",
                                                    "n_difference", "percent_change", "z_score", "baseline_sigma"};

struct ParseReport {
  std::size_t data_lines = 0;
  std::size_t blank_lines = 0;
  std::size_t records = 0;
  std::size_t dropped_outside = 0;
  std::size_t non_canonical_rows = 0;
};

struct ParsedSlices {
  SliceSet slices;
  ParseReport report;
};

ParsedSlices parse_slices(std::istream& in, const GridSpec& grid, const StampOptions& stamps = {});
ParsedSlices read_slices_file(const std::string& path, const GridSpec& grid, const StampOptions& stamps = {});

struct RasterPopulation {
  GridSpec grid;
  CellField population;
};

// CSV of lon,lat,population snapped onto the descriptor grid.
RasterPopulation read_raster_csv(std::istream& in, const GridSpec& descriptor);
// ESRI-style ASCII grid: ncols, nrows, xllcorner/yllcorner (degrees),
// cellsize (meters), optional NODATA_value, anchor_lon, anchor_lat. Data rows
// run north to south.
RasterPopulation read_ascii_grid(std::istream& in);
void write_raster_csv(std::ostream& out, const RasterPopulation& raster);

struct Zone {
  std::string zone_id;
  // Polygons of a (multi)polygon; ring 0 is the shell, the rest are holes.
  std::vector<std::vector<std::vector<GeoPoint>>> polygons;
  double population = 0.0;
  std::map<std::string, double> cohorts;  // keys keep the "cohort_" prefix

  bool contains(GeoPoint p) const;
  GeoBox bounds() const;
};

struct ZonalPopulation {
  std::vector<Zone> zones;
};

ZonalPopulation read_zones_geojson(std::istream& in);
void write_zones_geojson(std::ostream& out, const ZonalPopulation& zones);

// Zone index for every cell by the centroid rule, -1 when no zone contains
// the centroid. Throws ambiguity naming each overlapping pair.
std::vector<int> assign_cells_to_zones(const GridSpec& grid, const ZonalPopulation& zones);

struct OverlapWeight {
  std::uint32_t source;
  std::uint32_t target;
  double fraction;  // share of the source cell's area inside the target cell
};

// Area overlap between every square source cell and every target cell
// (square or hexagon), across differing projection anchors.
std::vector<OverlapWeight> overlap_weights(const GridSpec& source, const GridSpec& target);

CellField resample_to_grid(const RasterPopulation& ref, const GridSpec& target);

enum class TransferMode { count, mean };

CellField square_to_hex_transfer(const GridSpec& square, const CellField& field, const GridSpec& hex,
                                 TransferMode mode);

enum class SliceVariable { n_baseline, n_crisis, n_difference };

SliceVariable parse_slice_variable(const std::string& s);
double record_value(const SliceRecord& r, SliceVariable v);

struct ZonalTotals {
  std::vector<std::string> zone_ids;
  std::vector<Timestamp> timestamps;
  std::vector<double> totals;  // zone-major: totals[z * timestamps.size() + t]
  std::vector<std::size_t> cells_in_zone;
  std::vector<std::uint8_t> empty_zone;

  double at(std::size_t zone, std::size_t t) const { return totals[zone * timestamps.size() + t]; }
};

ZonalTotals zonal_sum(const SliceSet& slices, const ZonalPopulation& zones, SliceVariable variable);

struct ZonalField {
  std::vector<double> total;  // per zone, over present cells
  std::vector<std::size_t> cells_in_zone;
};

// Sum of a static per-cell field per zone by the centroid rule.
ZonalField zonal_field_sum(const GridSpec& grid, const CellField& field, const ZonalPopulation& zones);

} // namespace popshift
