#pragma once

#include "popshift/hotspot.hpp"
#include "popshift/trend.hpp"

// Single-threaded versions of the parallel kernels. They follow the same
// definitions and exist so tests and benchmarks can compare against them.
namespace popshift::reference {

GiStarField gi_star(std::span<const double> x, std::span<const std::uint8_t> present, const Neighborhood& nb,
                    std::span<const std::uint8_t> analysis_mask = {});

GiStarCube gi_star_cube(const SpaceTimeCube& values, const Neighborhood& nb,
                        std::span<const std::uint8_t> analysis_mask = {});

SectionTrends cell_section_trends(const SpaceTimeCube& cube, const std::vector<Section>& sections,
                                  double alpha = kDefaultAlpha);

} // namespace popshift::reference
