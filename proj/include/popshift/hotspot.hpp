#pragma once

#include "popshift/grid.hpp"
#include "popshift/stcube.hpp"
#include "popshift/trend.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace popshift {

// Neighbor lists of every cell in compressed row form.
struct Neighborhood {
  NeighborScheme scheme;
  std::vector<std::size_t> offsets;  // size cell_count + 1
  std::vector<std::uint32_t> index;

  std::size_t cell_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::uint32_t> of(std::size_t cell) const
  {
    return {index.data() + offsets[cell], offsets[cell + 1] - offsets[cell]};
  }
};

Neighborhood build_neighborhood(const GridSpec& grid, const NeighborScheme& scheme);

struct GiStarField {
  std::vector<double> value;
  std::vector<std::uint8_t> present;  // 0 where the statistic is undefined
  bool all_constant = false;
  std::size_t n_used = 0;
  NeighborScheme scheme;
};

// Getis-Ord G_i* with binary weights. Cells that are missing or outside
// analysis_mask (empty = every cell) take no part in the global moments or the
// neighbor sums and get no statistic. Throws too_sparse below two usable
// cells.
GiStarField gi_star(std::span<const double> x, std::span<const std::uint8_t> present, const Neighborhood& nb,
                    std::span<const std::uint8_t> analysis_mask = {});

struct GiStarCube {
  SpaceTimeCube cube;
  std::vector<std::size_t> sparse_slices;    // fewer than two usable cells; left missing
  std::vector<std::size_t> constant_slices;  // zero dispersion; left missing
};

// G_i* of every slice of a value cube.
GiStarCube gi_star_cube(const SpaceTimeCube& values, const Neighborhood& nb,
                        std::span<const std::uint8_t> analysis_mask = {});

enum class ConfidenceBin { c90 = 90, c95 = 95, c99 = 99 };

ConfidenceBin parse_confidence_bin(int bin);
double bin_threshold(ConfidenceBin bin);  // 1.645, 1.960, 2.576

enum class SpotKind { hot, cold, none };
const char* spot_kind_name(SpotKind k);

struct SpotLabel {
  SpotKind label = SpotKind::none;
  ConfidenceBin bin = ConfidenceBin::c90;
  bool masked = false;

  bool significant() const { return label != SpotKind::none; }
};

// Fixed thresholds of the bin.
std::vector<SpotLabel> classify_spots(const GiStarField& gi, ConfidenceBin bin);

// Benjamini-Hochberg over the defined cells of one slice at q = 1 - bin/100.
// Every cell flagged here is also flagged by classify_spots.
std::vector<SpotLabel> classify_spots_fdr(const GiStarField& gi, ConfidenceBin bin);

enum class SignificanceRule { fixed, fdr };
SignificanceRule parse_significance_rule(const std::string& s);
const char* significance_rule_name(SignificanceRule r);

struct LabelCube {
  std::size_t n_cells = 0;
  std::size_t n_times = 0;
  std::vector<SpotLabel> labels;  // cell-major

  const SpotLabel& at(std::size_t cell, std::size_t t) const { return labels[cell * n_times + t]; }
  SpotLabel& at(std::size_t cell, std::size_t t) { return labels[cell * n_times + t]; }
};

std::vector<SpotLabel> classify_slice(const GiStarField& gi, ConfidenceBin bin, SignificanceRule rule);
LabelCube classify_cube(const SpaceTimeCube& gi, ConfidenceBin bin, SignificanceRule rule);

enum class EmergingKind { new_spot, unstable, stable, none };
const char* emerging_kind_name(EmergingKind k);

struct EmergingCategory {
  EmergingKind category = EmergingKind::none;
  SpotKind polarity = SpotKind::none;
  TrendClass intensity_trend;
  double intensity_p = 1.0;
  bool intensity_defined = false;
  bool excluded = false;  // missing in too many slices
};

struct EmergingConfig {
  double new_max_earlier = 0.10;
  double stable_min = 0.80;
  double max_missing = 0.50;
  double alpha = kDefaultAlpha;
};

inline constexpr std::size_t kMinEmergingSlices = 8;

struct EmergingResult {
  std::size_t t_begin = 0;
  std::size_t t_end = 0;
  std::vector<EmergingCategory> cells;
  std::size_t excluded_count = 0;
};

// Classifies every cell from its labels over slices [t_begin, t_end).
// Fractions are over the slices where the cell has a statistic; "final"
// means the last such slice. Throws too_short when the window holds fewer
// than eight slices.
EmergingResult emerging_classify(const LabelCube& labels, const SpaceTimeCube& gi, const EmergingConfig& config = {},
                                 std::size_t t_begin = 0, std::size_t t_end = static_cast<std::size_t>(-1));

} // namespace popshift
