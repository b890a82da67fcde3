#include "popshift/reference.hpp"

#include "popshift/error.hpp"

#include <algorithm>
#include <cmath>

namespace popshift::reference {

GiStarField gi_star(std::span<const double> x, std::span<const std::uint8_t> present, const Neighborhood& nb,
                    std::span<const std::uint8_t> analysis_mask)
{
  const std::size_t n_cells = x.size();
  if (present.size() != n_cells || nb.cell_count() != n_cells ||
      (!analysis_mask.empty() && analysis_mask.size() != n_cells))
    throw Error(ErrorKind::config, "field, mask and neighborhood sizes differ");
  std::vector<std::uint8_t> ok(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) ok[i] = present[i] && (analysis_mask.empty() || analysis_mask[i]);

  GiStarField out;
  out.scheme = nb.scheme;
  out.value.assign(n_cells, 0.0);
  out.present.assign(n_cells, 0);

  std::vector<double> used;
  for (std::size_t i = 0; i < n_cells; ++i)
    if (ok[i]) used.push_back(x[i]);
  out.n_used = used.size();
  if (used.size() < 2) throw Error(ErrorKind::too_sparse, "G_i* needs at least two non-missing cells");
  const auto [lo, hi] = std::minmax_element(used.begin(), used.end());
  if (*lo == *hi) {
    out.all_constant = true;
    return out;
  }
  const double n = static_cast<double>(used.size());
  double sum = 0.0;
  for (double v : used) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : used) ss += (v - mean) * (v - mean);
  const double disp = std::sqrt(ss / n);
  if (!(disp > 0.0)) {
    out.all_constant = true;
    return out;
  }
  for (std::size_t i = 0; i < n_cells; ++i) {
    if (!ok[i]) continue;
    double wx = 0.0, w = 0.0;
    for (std::uint32_t j : nb.of(i))
      if (ok[j]) {
        wx += x[j];
        w += 1.0;
      }
    const double spread = (n * w - w * w) / (n - 1.0);
    if (!(spread > 0.0)) continue;
    out.value[i] = (wx - mean * w) / (disp * std::sqrt(spread));
    out.present[i] = 1;
  }
  return out;
}

GiStarCube gi_star_cube(const SpaceTimeCube& values, const Neighborhood& nb, std::span<const std::uint8_t> analysis_mask)
{
  const std::size_t nc = values.cell_count();
  const std::size_t nt = values.time_count();
  std::vector<double> g(nc * nt, 0.0);
  std::vector<std::uint8_t> p(nc * nt, 0);
  std::vector<std::size_t> sparse, constant;
  std::vector<double> x(nc);
  std::vector<std::uint8_t> pr(nc);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t c = 0; c < nc; ++c) {
      x[c] = values.value(c, t);
      pr[c] = values.present(c, t) ? 1 : 0;
    }
    GiStarField f;
    try {
      f = reference::gi_star(x, pr, nb, analysis_mask);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::too_sparse) throw;
      sparse.push_back(t);
      continue;
    }
    if (f.all_constant) constant.push_back(t);
    for (std::size_t c = 0; c < nc; ++c) {
      g[c * nt + t] = f.value[c];
      p[c * nt + t] = f.present[c];
    }
  }
  return {SpaceTimeCube(values.grid(), values.timestamps(), CubeVariable::gi_star, std::move(g), std::move(p)),
          std::move(sparse), std::move(constant)};
}

SectionTrends cell_section_trends(const SpaceTimeCube& cube, const std::vector<Section>& sections, double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::config, "alpha must lie in (0, 1)");
  SectionTrends out;
  out.n_cells = cube.cell_count();
  out.sections = sections;
  out.cells.resize(out.n_cells * sections.size());
  for (std::size_t c = 0; c < out.n_cells; ++c)
    for (std::size_t s = 0; s < sections.size(); ++s) {
      const Section& sec = sections[s];
      if (sec.start_index >= sec.end_index || sec.end_index > cube.time_count())
        throw Error(ErrorKind::out_of_range, "section '" + sec.label + "' outside the cube");
      CellTrend& ct = out.cells[c * sections.size() + s];
      ct.trend.alpha = alpha;
      std::vector<double> v;
      for (std::size_t t = sec.start_index; t < sec.end_index; ++t)
        if (cube.present(c, t)) v.push_back(cube.value(c, t));
      ct.n_used = v.size();
      ct.all_missing = v.empty();
      if (v.size() < kMinTrendLength) {
        ct.too_short = true;
        continue;
      }
      const MKResult r = mk_stat(v);
      ct.trend = classify_trend(r, alpha);
      ct.p = r.p_two_sided;
      ct.tau = r.tau;
    }
  return out;
}

} // namespace popshift::reference
