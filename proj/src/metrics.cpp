#include "popshift/metrics.hpp"

#include "popshift/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace popshift {

double z_score(const ZScoreParams& p)
{
  return (p.c - p.mu_baseline) / std::max(p.sigma_baseline, p.sigma_min);
}

std::optional<double> record_z(const SliceRecord& r, double sigma_min)
{
  if (r.z_score) return r.z_score;
  if (r.baseline_sigma) return z_score({r.n_crisis, r.n_baseline, *r.baseline_sigma, sigma_min});
  return std::nullopt;
}

double penetration_rate(double fb_users, double total_pop)
{
  if (!(total_pop > 0.0)) throw Error(ErrorKind::undefined_rate, "total population must be positive");
  if (fb_users < 0.0) throw Error(ErrorKind::undefined_rate, "user count must be non-negative");
  return 100.0 * fb_users / total_pop;
}

PenetrationField penetration_field(const CellField& fb_users, const CellField& total_pop, std::optional<double> cap)
{
  const std::size_t n = fb_users.size();
  PenetrationField out{CellField(n), std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (!fb_users.has(i) || !total_pop.has(i)) continue;
    if (!(total_pop.value[i] > 0.0)) {
      out.undefined[i] = 1;
      continue;
    }
    double r = penetration_rate(fb_users.value[i], total_pop.value[i]);
    if (r > 100.0) out.above_100[i] = 1;
    if (cap) r = std::min(r, *cap);
    out.rate.set(i, r);
  }
  return out;
}

CellField average_baseline(const SliceSet& slices)
{
  if (slices.empty()) throw Error(ErrorKind::empty_input, "no slices to average");
  const std::size_t n = slices.grid().cell_count();
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (const Slice& s : slices.slices())
    for (const auto& [id, rec] : s.records) {
      sum[id.index] += rec.n_baseline;
      ++count[id.index];
    }
  CellField out(n);
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] > 0) out.set(i, sum[i] / static_cast<double>(count[i]));
  return out;
}

RegressionResult fit_ols(const CellField& x, const CellField& y)
{
  if (x.size() != y.size()) throw Error(ErrorKind::config, "regression inputs differ in length");
  RegressionResult r;
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x.has(i) || !y.has(i) || !std::isfinite(x.value[i]) || !std::isfinite(y.value[i])) {
      ++r.n_excluded;
      continue;
    }
    sx += x.value[i];
    sy += y.value[i];
    ++r.n;
  }
  if (r.n < 2) throw Error(ErrorKind::degenerate_fit, "fewer than two complete pairs");
  const double n = static_cast<double>(r.n);
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x.has(i) || !y.has(i) || !std::isfinite(x.value[i]) || !std::isfinite(y.value[i])) continue;
    const double dx = x.value[i] - mx, dy = y.value[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::degenerate_fit, "x has zero variance");
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r_squared = syy > 0.0 ? std::clamp((sxy * sxy) / (sxx * syy), 0.0, 1.0) : 1.0;
  if (r.n > 2) r.adj_r_squared = 1.0 - (1.0 - r.r_squared) * (n - 1.0) / (n - 2.0);
  return r;
}

RegressionResult fit_penetration(const CellField& fbp, const CellField& pop)
{
  return fit_ols(pop, fbp);
}

RegressionResult demographic_correlation(const CellField& pen_rate, const CellField& cohort_share)
{
  RegressionResult r = fit_ols(cohort_share, pen_rate);
  if (!r.adj_r_squared) throw Error(ErrorKind::degenerate_fit, "adjusted R^2 needs more than two pairs");
  return r;
}

std::vector<DiurnalGroup> diurnal_average(std::span<const StampedValue> values)
{
  std::map<int, std::vector<double>> groups;
  for (const StampedValue& v : values)
    if (v.stamp && std::isfinite(v.value)) groups[*v.stamp].push_back(v.value);
  if (groups.empty()) throw Error(ErrorKind::no_stamp, "no values carry a canonical stamp");
  std::vector<DiurnalGroup> out;
  for (auto& [stamp, vals] : groups) {
    DiurnalGroup g;
    g.stamp = stamp;
    g.n = vals.size();
    double s = 0.0;
    for (double v : vals) s += v;
    g.mean = s / static_cast<double>(g.n);
    std::sort(vals.begin(), vals.end());
    const std::size_t mid = g.n / 2;
    g.median = g.n % 2 ? vals[mid] : (vals[mid - 1] + vals[mid]) / 2.0;
    out.push_back(g);
  }
  return out;
}

namespace {

void check_mask(const SliceSet& slices, const CellMask& mask)
{
  if (mask.size() != slices.grid().cell_count()) throw Error(ErrorKind::config, "mask size does not match grid");
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }))
    throw Error(ErrorKind::empty_region, "mask selects no cells");
}

} // namespace

RegionalSeries regional_mean_z(const SliceSet& slices, const CellMask& mask, double sigma_min)
{
  check_mask(slices, mask);
  RegionalSeries out;
  out.timestamps = slices.timestamps();
  const std::size_t nt = slices.size();
  out.mean.assign(nt, 0.0);
  out.standard_error.assign(nt, 0.0);
  out.n_cells.assign(nt, 0);
  out.se_defined.assign(nt, 0);
  out.mean_defined.assign(nt, 0);
  std::vector<double> vals;
  for (std::size_t t = 0; t < nt; ++t) {
    vals.clear();
    for (const auto& [id, rec] : slices[t].records) {
      if (!mask[id.index]) continue;
      if (const auto z = record_z(rec, sigma_min)) vals.push_back(*z);
    }
    const std::size_t n = vals.size();
    out.n_cells[t] = n;
    if (n == 0) continue;
    double s = 0.0;
    for (double v : vals) s += v;
    const double m = s / static_cast<double>(n);
    out.mean[t] = m;
    out.mean_defined[t] = 1;
    if (n >= 2) {
      double ss = 0.0;
      for (double v : vals) ss += (v - m) * (v - m);
      const double sd = std::sqrt(ss / static_cast<double>(n - 1));
      out.standard_error[t] = sd / std::sqrt(static_cast<double>(n));
      out.se_defined[t] = 1;
    }
  }
  return out;
}

TotalSeries total_difference(const SliceSet& slices, const CellMask& mask)
{
  check_mask(slices, mask);
  TotalSeries out;
  out.timestamps = slices.timestamps();
  const std::size_t nt = slices.size();
  out.total.assign(nt, 0.0);
  out.n_cells.assign(nt, 0);
  out.defined.assign(nt, 0);
  for (std::size_t t = 0; t < nt; ++t) {
    for (const auto& [id, rec] : slices[t].records) {
      if (!mask[id.index]) continue;
      out.total[t] += rec.n_crisis - rec.n_baseline;
      ++out.n_cells[t];
    }
    out.defined[t] = out.n_cells[t] > 0;
  }
  return out;
}

} // namespace popshift
