#pragma once

#include "popshift/grid.hpp"
#include "popshift/hotspot.hpp"
#include "popshift/ingest.hpp"
#include "popshift/metrics.hpp"
#include "popshift/stcube.hpp"
#include "popshift/synth.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace popshift::cli {

struct MaskSpec {
  enum class Kind { none, cells, cells_file, polygon_file };
  Kind kind = Kind::none;
  std::vector<std::uint32_t> cells;
  std::string path;
};

struct ReferenceRaster {
  std::string csv;  // lon,lat,population
  std::optional<nlohmann::json> descriptor;  // grid of the csv raster; defaults to the slice grid
  std::string ascii;  // ASCII grid alternative
};

// Paths are absolute after loading (relative ones resolve against the
// config file's directory).
struct PipelineConfig {
  std::string slices;
  std::optional<nlohmann::json> grid;
  std::string grid_file;
  std::optional<ReferenceRaster> reference_raster;
  std::string zones;
  std::string events;
  std::string scenario;
  MaskSpec mask;
  std::map<std::string, MaskSpec> regions;
  double alpha = kDefaultAlpha;
  int confidence_bin = 90;
  NeighborScheme neighbor_scheme;
  std::size_t tipping_window = kDefaultTippingWindow;
  std::string output_dir = "out";
  int utc_offset_minutes = 0;
  std::vector<int> stamp_times{60, 9 * 60, 17 * 60};
  SignificanceRule significance = SignificanceRule::fdr;
  CellScheme analysis_scheme = CellScheme::square;
  std::optional<double> analysis_cell_size_m;
  std::string slice_layers = "significant";  // significant | all | none
  std::optional<std::uint64_t> seed;

  StampOptions stamp_options() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::string& base_dir);
PipelineConfig load_pipeline_config(const std::string& path);

// Throws config naming the first referenced path that does not exist.
void check_paths(const PipelineConfig& config);

struct Overrides {
  std::optional<std::string> out;
  std::optional<double> alpha;
  std::optional<int> bin;
  std::optional<std::size_t> window;
  std::optional<std::uint64_t> seed;
};

void apply_overrides(PipelineConfig& config, const Overrides& o);

GridSpec load_grid(const PipelineConfig& config);
CellMask resolve_mask(const MaskSpec& spec, const GridSpec& grid);

struct RunReport {
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

RunReport cmd_penetration(const PipelineConfig& config);
RunReport cmd_dynamics(const PipelineConfig& config);
RunReport cmd_trend(const PipelineConfig& config);
RunReport cmd_emerging(const PipelineConfig& config);
// Writes slices, grid, events, ground truth, masks, a reference raster,
// zones and a ready-to-run pipeline config into out_dir.
RunReport cmd_synth(const nlohmann::json& scenario, const std::string& out_dir);
RunReport cmd_run_all(const PipelineConfig& config);

// Full command line front end; returns the process exit status.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

} // namespace popshift::cli
