#pragma once

#include "popshift/grid.hpp"
#include "popshift/ingest.hpp"
#include "popshift/timeutil.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popshift {

enum class CubeVariable { z_score, n_crisis, n_difference, gi_star };

const char* variable_name(CubeVariable v);
CubeVariable parse_cube_variable(const std::string& s);

// Dense cell x time array of one variable. Storage is cell-major so each
// cell's time series is contiguous.
class SpaceTimeCube {
public:
  SpaceTimeCube(GridSpec grid, std::vector<Timestamp> timestamps, CubeVariable variable, std::vector<double> values,
                std::vector<std::uint8_t> present);

  const GridSpec& grid() const { return grid_; }
  const std::vector<Timestamp>& timestamps() const { return timestamps_; }
  CubeVariable variable() const { return variable_; }
  std::size_t cell_count() const { return n_cells_; }
  std::size_t time_count() const { return timestamps_.size(); }

  bool present(std::size_t cell, std::size_t t) const { return present_[cell * time_count() + t] != 0; }
  double value(std::size_t cell, std::size_t t) const { return values_[cell * time_count() + t]; }

  std::span<const double> series(std::size_t cell) const { return {values_.data() + cell * time_count(), time_count()}; }
  std::span<const std::uint8_t> series_present(std::size_t cell) const
  {
    return {present_.data() + cell * time_count(), time_count()};
  }

  std::size_t missing_count() const;

  bool operator==(const SpaceTimeCube& o) const;

private:
  GridSpec grid_;
  std::vector<Timestamp> timestamps_;
  CubeVariable variable_;
  std::size_t n_cells_;
  std::vector<double> values_;
  std::vector<std::uint8_t> present_;
};

// Read-only per-cell field of one time index; strided over the cube storage.
class SliceView {
public:
  SliceView(const SpaceTimeCube& cube, std::size_t t) : cube_(&cube), t_(t) {}
  std::size_t size() const { return cube_->cell_count(); }
  std::size_t time_index() const { return t_; }
  bool present(std::size_t cell) const { return cube_->present(cell, t_); }
  double operator[](std::size_t cell) const { return cube_->value(cell, t_); }

private:
  const SpaceTimeCube* cube_;
  std::size_t t_;
};

SliceView slice_view(const SpaceTimeCube& cube, std::size_t t_index);  // throws out_of_range

// z_score cubes read the record z (or compute it from baseline_sigma); records
// without a usable value become missing entries.
SpaceTimeCube build_cube(const SliceSet& slices, CubeVariable variable, double sigma_min = 0.1);

// SliceSet carrying only the cube's variable: z_score in z_score, counts in
// n_crisis over a zero baseline.
SliceSet cube_to_slices(const SpaceTimeCube& cube);

enum class EventKind { order_placed, order_lifted, other };

const char* event_kind_name(EventKind k);
EventKind parse_event_kind(const std::string& s);

struct Event {
  Timestamp instant;
  EventKind kind = EventKind::other;
  std::string label;
  std::optional<std::vector<CellId>> zone;
};

class EventTimeline {
public:
  EventTimeline() = default;
  explicit EventTimeline(std::vector<Event> events);  // validates order and unique labels

  const std::vector<Event>& events() const { return events_; }
  bool empty() const { return events_.empty(); }

  // Events that are global or whose zone touches the mask.
  EventTimeline for_mask(const std::vector<std::uint8_t>& mask) const;

private:
  std::vector<Event> events_;
};

nlohmann::json timeline_to_json(const EventTimeline& tl);
EventTimeline timeline_from_json(const nlohmann::json& j);

struct Section {
  std::size_t start_index = 0;
  std::size_t end_index = 0;  // exclusive
  std::string label;

  std::size_t length() const { return end_index - start_index; }
  bool operator==(const Section&) const = default;
};

struct Sectioning {
  std::vector<Section> sections;
  std::vector<std::string> warnings;
};

// Boundaries at the first slice with timestamp >= each event instant; the
// slice at an event opens the following section. Events before the first
// slice add no boundary; events after the last one are dropped with a
// warning.
Sectioning section_by_events(std::span<const Timestamp> timestamps, const EventTimeline& timeline);
Sectioning section_by_events(const SpaceTimeCube& cube, const EventTimeline& timeline);

// cells.csv, timestamps.csv, values.csv (missing written as NA).
void save_cube(const SpaceTimeCube& cube, const std::string& dir);
SpaceTimeCube load_cube(const std::string& dir, const GridSpec& grid);

} // namespace popshift
