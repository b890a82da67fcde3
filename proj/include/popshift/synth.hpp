#pragma once

#include "popshift/hotspot.hpp"
#include "popshift/ingest.hpp"
#include "popshift/stcube.hpp"
#include "popshift/trend.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace popshift {

struct EvacParams {
  double egress_rate = 0.4;  // share of the remaining population leaving per slice
  double floor = 0.1;        // share of baseline that never leaves
  double return_rate = 0.25;  // share of the missing population returning per slice
  double return_complete = 0.02;  // snap to full return below this shortfall
};

struct Shelter {
  CellId cell;
  double capacity = 1e18;
  double uptake = 0.0;  // share of the displaced population taken in
};

struct ScenarioConfig {
  GridSpec grid{CellScheme::square, {0.0, 0.0}, 1000.0, 1, 1, {0.0, 0.0}};
  std::size_t duration_slices = 36;
  Timestamp start_time;
  StampOptions stamps;
  std::vector<double> baseline_mean;   // per cell, before the diurnal multiplier
  std::vector<double> baseline_sigma;  // per cell, before the diurnal multiplier
  std::vector<double> diurnal_multipliers;  // one per stamp in stamps.stamp_times
  EventTimeline events;
  EvacParams evac_params;
  std::vector<Shelter> shelters;
  double destination_ring_m = 6000.0;
  double noise_sigma = 0.25;
  std::uint64_t seed = 1;
  double missing_fraction = 0.0;  // records dropped at random
  double suppress_below = 0.0;    // records with baseline below this are absent

  Timestamp slice_time(std::size_t k) const { return start_time + std::chrono::minutes(kCadenceMinutes) * k; }
};

// Throws config on any violated constraint.
void validate(const ScenarioConfig& config);

enum class CellRole { evacuated, shelter, unaffected, adjacent_destination };
const char* role_name(CellRole r);

struct GroundTruth {
  std::vector<CellRole> roles;
  std::vector<Section> sections;
  std::vector<TrendDirection> expected_trend;  // cell-major over sections
  std::size_t active_begin = 0;  // first order slice
  std::size_t active_end = 0;    // first lift slice (exclusive end of the active window)
  std::vector<SpotKind> expected_polarity;  // during the active window
  std::vector<double> noise_free_z;  // cell-major over slices

  TrendDirection trend_at(std::size_t cell, std::size_t section) const
  {
    return expected_trend[cell * sections.size() + section];
  }
};

struct Scenario {
  SliceSet slices;
  GroundTruth truth;
};

Scenario generate(const ScenarioConfig& config);

// Slice CSV in the ingest column order; parse_slices reads it back unchanged.
void emit_fbdm_csv(const SliceSet& slices, std::ostream& out);
void emit_fbdm_csv(const SliceSet& slices, const std::string& path);

void write_truth_csv(const GridSpec& grid, const GroundTruth& truth, std::ostream& out);

// JSON scenario file. Keys follow the ScenarioConfig fields; see
// configs/default_scenario.json.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig read_scenario_file(const std::string& path);

// Built-in scenarios on a 100 x 100 km square grid, 36 slices.
ScenarioConfig default_scenario(std::uint64_t seed = 1);
// Fast egress: the regional dip bottoms out four slices after the order.
ScenarioConfig fast_egress_scenario(std::uint64_t seed = 1);
// Slow egress: nine slices from order to the bottom.
ScenarioConfig slow_egress_scenario(std::uint64_t seed = 1);
ScenarioConfig no_event_scenario(std::uint64_t seed = 1);

// Cells in the disk of the given radius (in cells) around a cell.
std::vector<CellId> disk_cells(const GridSpec& grid, ColRow center, double radius_cells);

} // namespace popshift
