#include "popshift/trend.hpp"

#include "popshift/error.hpp"

#include <algorithm>
#include <cmath>

namespace popshift {

MKResult mk_stat(std::span<const double> values, std::span<const std::uint8_t> present)
{
  if (!present.empty() && present.size() != values.size())
    throw Error(ErrorKind::config, "presence mask length differs from series length");
  std::vector<double> x;
  x.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (present.empty() || present[i]) x.push_back(values[i]);

  MKResult r;
  r.n_used = x.size();
  if (r.n_used < kMinTrendLength)
    throw Error(ErrorKind::too_short,
                "Mann-Kendall needs at least " + std::to_string(kMinTrendLength) + " values, got " +
                    std::to_string(r.n_used));

  const std::size_t n = x.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) r.S += (x[j] > x[i]) - (x[j] < x[i]);

  std::sort(x.begin(), x.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && x[j] == x[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
    i = j;
  }
  const double dn = static_cast<double>(n);
  r.var_S = std::max(0.0, (dn * (dn - 1.0) * (2.0 * dn + 5.0) - tie_term) / 18.0);

  if (r.S != 0 && r.var_S > 0.0) {
    const double s = static_cast<double>(r.S);
    r.Z = (r.S > 0 ? s - 1.0 : s + 1.0) / std::sqrt(r.var_S);
  }
  r.p_two_sided = std::clamp(std::erfc(std::fabs(r.Z) / std::sqrt(2.0)), 0.0, 1.0);
  r.tau = static_cast<double>(r.S) / (dn * (dn - 1.0) / 2.0);
  return r;
}

const char* direction_name(TrendDirection d)
{
  switch (d) {
  case TrendDirection::increasing: return "increasing";
  case TrendDirection::decreasing: return "decreasing";
  case TrendDirection::none: return "none";
  }
  return "none";
}

TrendClass classify_trend(const MKResult& r, double alpha)
{
  TrendClass c;
  c.alpha = alpha;
  if (r.p_two_sided < alpha && r.S != 0) c.direction = r.S > 0 ? TrendDirection::increasing : TrendDirection::decreasing;
  return c;
}

SectionTrends cell_section_trends(const SpaceTimeCube& cube, const std::vector<Section>& sections, double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::config, "alpha must lie in (0, 1)");
  for (const Section& s : sections)
    if (s.start_index >= s.end_index || s.end_index > cube.time_count())
      throw Error(ErrorKind::out_of_range, "section '" + s.label + "' outside the cube");

  SectionTrends out;
  out.n_cells = cube.cell_count();
  out.sections = sections;
  const std::size_t ns = sections.size();
  out.cells.resize(out.n_cells * ns);

  const auto nc = static_cast<long long>(out.n_cells);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < nc; ++c) {
    const auto cell = static_cast<std::size_t>(c);
    const auto series = cube.series(cell);
    const auto mask = cube.series_present(cell);
    for (std::size_t s = 0; s < ns; ++s) {
      const Section& sec = sections[s];
      CellTrend& ct = out.cells[cell * ns + s];
      ct.trend.alpha = alpha;
      const auto v = series.subspan(sec.start_index, sec.length());
      const auto m = mask.subspan(sec.start_index, sec.length());
      const auto used = static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](std::uint8_t b) { return b; }));
      ct.n_used = used;
      if (used == 0) {
        ct.all_missing = true;
        ct.too_short = true;
        continue;
      }
      if (used < kMinTrendLength) {
        ct.too_short = true;
        continue;
      }
      const MKResult r = mk_stat(v, m);
      ct.trend = classify_trend(r, alpha);
      ct.p = r.p_two_sided;
      ct.tau = r.tau;
    }
  }
  return out;
}

std::vector<TippingPoint> tipping_points(std::span<const double> values, std::span<const std::uint8_t> present,
                                         std::size_t window, double alpha)
{
  if (window < kMinTrendLength) throw Error(ErrorKind::too_short, "tipping window must be at least 4 slices");
  if (values.size() < 2 * window)
    throw Error(ErrorKind::too_short, "series shorter than twice the tipping window");
  if (!present.empty() && present.size() != values.size())
    throw Error(ErrorKind::config, "presence mask length differs from series length");

  std::vector<TippingPoint> out;
  TrendDirection prev = TrendDirection::none;
  for (std::size_t s = 0; s + window <= values.size(); ++s) {
    const auto v = values.subspan(s, window);
    const auto m = present.empty() ? present : present.subspan(s, window);
    if (!m.empty() && static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](std::uint8_t b) { return b; })) <
                          kMinTrendLength) continue;
    const TrendDirection d = classify_trend(mk_stat(v, m), alpha).direction;
    if (d == TrendDirection::none) continue;
    if (prev != TrendDirection::none && d != prev) out.push_back({s, prev, d, window});
    prev = d;
  }
  return out;
}

} // namespace popshift
