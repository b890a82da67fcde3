#pragma once

#include "popshift/field.hpp"
#include "popshift/ingest.hpp"

#include <optional>
#include <span>
#include <vector>

namespace popshift {

inline constexpr double kDefaultSigmaMin = 0.1;

struct ZScoreParams {
  double c = 0.0;             // crisis population
  double mu_baseline = 0.0;   // baseline mean
  double sigma_baseline = 0.0;  // baseline standard deviation
  double sigma_min = kDefaultSigmaMin;
};

// (c - mu) / max(sigma, sigma_min); negative when the crisis count is below
// the pre-crisis level.
double z_score(const ZScoreParams& p);

// z for a slice record: the stored value when present, otherwise computed
// from baseline_sigma when that is present, otherwise nullopt.
std::optional<double> record_z(const SliceRecord& r, double sigma_min = kDefaultSigmaMin);

// 100 * fb_users / total_pop. Throws undefined_rate when total_pop <= 0.
double penetration_rate(double fb_users, double total_pop);

struct PenetrationField {
  CellField rate;
  std::vector<std::uint8_t> undefined;  // reference population <= 0
  std::vector<std::uint8_t> above_100;
};

// Per-unit penetration over paired fields; undefined rates are flagged and
// left absent. cap, when set, clips retained rates from above.
PenetrationField penetration_field(const CellField& fb_users, const CellField& total_pop,
                                   std::optional<double> cap = std::nullopt);

// Mean n_baseline per cell over the slices where the cell is present.
CellField average_baseline(const SliceSet& slices);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::optional<double> adj_r_squared;
  std::size_t n = 0;
  std::size_t n_excluded = 0;
};

// Ordinary least squares of y on x with intercept over pairs where both
// members are present.
RegressionResult fit_ols(const CellField& x, const CellField& y);

// FBP regressed on total population; the slope reads as mean penetration.
RegressionResult fit_penetration(const CellField& fbp, const CellField& pop);

// Penetration rate regressed on a cohort share, with adjusted R^2.
RegressionResult demographic_correlation(const CellField& pen_rate, const CellField& cohort_share);

struct StampedValue {
  std::optional<int> stamp;
  double value = 0.0;
};

struct DiurnalGroup {
  int stamp = 0;
  double mean = 0.0;
  double median = 0.0;
  std::size_t n = 0;
};

std::vector<DiurnalGroup> diurnal_average(std::span<const StampedValue> values);

struct RegionalSeries {
  std::vector<Timestamp> timestamps;
  std::vector<double> mean;
  std::vector<double> standard_error;
  std::vector<std::size_t> n_cells;
  std::vector<std::uint8_t> se_defined;  // n_cells >= 2
  std::vector<std::uint8_t> mean_defined;  // n_cells >= 1
};

// Cell subset as a per-cell membership mask.
using CellMask = std::vector<std::uint8_t>;

RegionalSeries regional_mean_z(const SliceSet& slices, const CellMask& mask, double sigma_min = kDefaultSigmaMin);

struct TotalSeries {
  std::vector<Timestamp> timestamps;
  std::vector<double> total;
  std::vector<std::size_t> n_cells;
  std::vector<std::uint8_t> defined;
};

TotalSeries total_difference(const SliceSet& slices, const CellMask& mask);

} // namespace popshift
