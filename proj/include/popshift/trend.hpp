#pragma once

#include "popshift/stcube.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace popshift {

inline constexpr std::size_t kMinTrendLength = 4;
inline constexpr double kDefaultAlpha = 0.05;

struct MKResult {
  long long S = 0;
  double var_S = 0.0;
  double Z = 0.0;
  double p_two_sided = 1.0;
  double tau = 0.0;
  std::size_t n_used = 0;
};

// Mann-Kendall statistic with tie-corrected variance and continuity
// correction. Entries whose present flag is 0 are dropped before pairing; an
// empty present span means every entry is present. Throws too_short when
// fewer than four values remain.
MKResult mk_stat(std::span<const double> values, std::span<const std::uint8_t> present = {});

enum class TrendDirection { increasing, decreasing, none };

const char* direction_name(TrendDirection d);

struct TrendClass {
  TrendDirection direction = TrendDirection::none;
  double alpha = kDefaultAlpha;
};

TrendClass classify_trend(const MKResult& r, double alpha);

struct CellTrend {
  TrendClass trend;
  double p = 1.0;
  double tau = 0.0;
  std::size_t n_used = 0;
  bool too_short = false;
  bool all_missing = false;
};

struct SectionTrends {
  std::size_t n_cells = 0;
  std::vector<Section> sections;
  std::vector<CellTrend> cells;  // cells[cell * sections.size() + s]

  const CellTrend& at(std::size_t cell, std::size_t section) const { return cells[cell * sections.size() + section]; }
};

SectionTrends cell_section_trends(const SpaceTimeCube& cube, const std::vector<Section>& sections,
                                  double alpha = kDefaultAlpha);

struct TippingPoint {
  std::size_t t_index = 0;  // start of the first window with the new direction
  TrendDirection from_direction = TrendDirection::none;
  TrendDirection to_direction = TrendDirection::none;
  std::size_t window = 0;
};

inline constexpr std::size_t kDefaultTippingWindow = 6;

// Rolling Mann-Kendall over windows [s, s + window). Windows with fewer than
// four present values are skipped.
std::vector<TippingPoint> tipping_points(std::span<const double> values, std::span<const std::uint8_t> present,
                                         std::size_t window = kDefaultTippingWindow, double alpha = kDefaultAlpha);

} // namespace popshift
