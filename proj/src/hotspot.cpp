#include "popshift/hotspot.hpp"

#include "popshift/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popshift {

Neighborhood build_neighborhood(const GridSpec& grid, const NeighborScheme& scheme)
{
  Neighborhood nb;
  nb.scheme = scheme;
  const std::size_t n = grid.cell_count();
  nb.offsets.reserve(n + 1);
  nb.offsets.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    for (CellId c : neighbors(grid, {static_cast<std::uint32_t>(i)}, scheme)) nb.index.push_back(c.index);
    nb.offsets.push_back(nb.index.size());
  }
  return nb;
}

namespace {

bool usable(std::span<const std::uint8_t> present, std::span<const std::uint8_t> mask, std::size_t i)
{
  return present[i] && (mask.empty() || mask[i]);
}

} // namespace

GiStarField gi_star(std::span<const double> x, std::span<const std::uint8_t> present, const Neighborhood& nb,
                    std::span<const std::uint8_t> analysis_mask)
{
  const std::size_t n_cells = x.size();
  if (present.size() != n_cells || nb.cell_count() != n_cells ||
      (!analysis_mask.empty() && analysis_mask.size() != n_cells))
    throw Error(ErrorKind::config, "field, mask and neighborhood sizes differ");

  GiStarField out;
  out.scheme = nb.scheme;
  out.value.assign(n_cells, 0.0);
  out.present.assign(n_cells, 0);

  double sum = 0.0;
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    if (!usable(present, analysis_mask, i)) continue;
    if (n == 0) lo = hi = x[i];
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
    sum += x[i];
    ++n;
  }
  out.n_used = n;
  if (n < 2) throw Error(ErrorKind::too_sparse, "G_i* needs at least two non-missing cells, got " + std::to_string(n));
  if (lo == hi) {
    out.all_constant = true;
    return out;
  }
  const double dn = static_cast<double>(n);
  const double mean = sum / dn;
  double ss = 0.0;
  for (std::size_t i = 0; i < n_cells; ++i)
    if (usable(present, analysis_mask, i)) ss += (x[i] - mean) * (x[i] - mean);
  const double disp = std::sqrt(ss / dn);
  if (!(disp > 0.0)) {
    out.all_constant = true;
    return out;
  }

  const auto nc = static_cast<long long>(n_cells);
#pragma omp parallel for schedule(static)
  for (long long ci = 0; ci < nc; ++ci) {
    const auto i = static_cast<std::size_t>(ci);
    if (!usable(present, analysis_mask, i)) continue;
    double wx = 0.0, w = 0.0;
    for (std::uint32_t j : nb.of(i)) {
      if (!usable(present, analysis_mask, j)) continue;
      wx += x[j];
      w += 1.0;
    }
    const double spread = (dn * w - w * w) / (dn - 1.0);
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
  if (nb.cell_count() != nc || (!analysis_mask.empty() && analysis_mask.size() != nc))
    throw Error(ErrorKind::config, "cube, mask and neighborhood sizes differ");
  std::vector<double> g(nc * nt, 0.0);
  std::vector<std::uint8_t> p(nc * nt, 0);
  std::vector<std::uint8_t> sparse(nt, 0), constant(nt, 0);

  const auto ntl = static_cast<long long>(nt);
#pragma omp parallel for schedule(dynamic)
  for (long long tl = 0; tl < ntl; ++tl) {
    const auto t = static_cast<std::size_t>(tl);
    std::vector<double> x(nc);
    std::vector<std::uint8_t> pr(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      x[c] = values.value(c, t);
      pr[c] = values.present(c, t) ? 1 : 0;
    }
    GiStarField f;
    try {
      f = gi_star(x, pr, nb, analysis_mask);
    } catch (const Error&) {
      sparse[t] = 1;
      continue;
    }
    if (f.all_constant) constant[t] = 1;
    for (std::size_t c = 0; c < nc; ++c) {
      g[c * nt + t] = f.value[c];
      p[c * nt + t] = f.present[c];
    }
  }
  GiStarCube out{SpaceTimeCube(values.grid(), values.timestamps(), CubeVariable::gi_star, std::move(g), std::move(p)),
                 {},
                 {}};
  for (std::size_t t = 0; t < nt; ++t) {
    if (sparse[t]) out.sparse_slices.push_back(t);
    if (constant[t]) out.constant_slices.push_back(t);
  }
  return out;
}

ConfidenceBin parse_confidence_bin(int bin)
{
  switch (bin) {
  case 90: return ConfidenceBin::c90;
  case 95: return ConfidenceBin::c95;
  case 99: return ConfidenceBin::c99;
  default: throw Error(ErrorKind::config, "confidence bin must be 90, 95 or 99, got " + std::to_string(bin));
  }
}

double bin_threshold(ConfidenceBin bin)
{
  switch (bin) {
  case ConfidenceBin::c90: return 1.645;
  case ConfidenceBin::c95: return 1.960;
  case ConfidenceBin::c99: return 2.576;
  }
  return 1.645;
}

const char* spot_kind_name(SpotKind k)
{
  switch (k) {
  case SpotKind::hot: return "hot";
  case SpotKind::cold: return "cold";
  case SpotKind::none: return "none";
  }
  return "none";
}

std::vector<SpotLabel> classify_spots(const GiStarField& gi, ConfidenceBin bin)
{
  const double thr = bin_threshold(bin);
  std::vector<SpotLabel> out(gi.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].bin = bin;
    if (!gi.present[i]) {
      out[i].masked = true;
      continue;
    }
    if (gi.value[i] >= thr) {
      out[i].label = SpotKind::hot;
    } else if (gi.value[i] <= -thr) {
      out[i].label = SpotKind::cold;
    }
  }
  return out;
}

std::vector<SpotLabel> classify_spots_fdr(const GiStarField& gi, ConfidenceBin bin)
{
  const double q = 1.0 - static_cast<double>(static_cast<int>(bin)) / 100.0;
  std::vector<SpotLabel> out(gi.value.size());
  std::vector<std::pair<double, std::size_t>> pv;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].bin = bin;
    if (!gi.present[i]) {
      out[i].masked = true;
      continue;
    }
    pv.emplace_back(std::erfc(std::fabs(gi.value[i]) / std::sqrt(2.0)), i);
  }
  std::sort(pv.begin(), pv.end());
  const double m = static_cast<double>(pv.size());
  std::size_t k = 0;  // number of rejections
  for (std::size_t r = pv.size(); r > 0; --r)
    if (pv[r - 1].first <= static_cast<double>(r) / m * q) {
      k = r;
      break;
    }
  // Fixed thresholds are rounded; keep the subset relation exact.
  const double thr = bin_threshold(bin);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = pv[r].second;
    if (gi.value[i] >= thr) {
      out[i].label = SpotKind::hot;
    } else if (gi.value[i] <= -thr) {
      out[i].label = SpotKind::cold;
    }
  }
  return out;
}

SignificanceRule parse_significance_rule(const std::string& s)
{
  if (s == "fixed") return SignificanceRule::fixed;
  if (s == "fdr") return SignificanceRule::fdr;
  throw Error(ErrorKind::config, "significance must be 'fixed' or 'fdr', got '" + s + "'");
}

const char* significance_rule_name(SignificanceRule r)
{
  return r == SignificanceRule::fixed ? "fixed" : "fdr";
}

std::vector<SpotLabel> classify_slice(const GiStarField& gi, ConfidenceBin bin, SignificanceRule rule)
{
  return rule == SignificanceRule::fixed ? classify_spots(gi, bin) : classify_spots_fdr(gi, bin);
}

LabelCube classify_cube(const SpaceTimeCube& gi, ConfidenceBin bin, SignificanceRule rule)
{
  LabelCube out;
  out.n_cells = gi.cell_count();
  out.n_times = gi.time_count();
  out.labels.resize(out.n_cells * out.n_times);
  const auto ntl = static_cast<long long>(out.n_times);
#pragma omp parallel for schedule(static)
  for (long long tl = 0; tl < ntl; ++tl) {
    const auto t = static_cast<std::size_t>(tl);
    GiStarField f;
    f.value.resize(out.n_cells);
    f.present.resize(out.n_cells);
    for (std::size_t c = 0; c < out.n_cells; ++c) {
      f.value[c] = gi.value(c, t);
      f.present[c] = gi.present(c, t) ? 1 : 0;
    }
    const auto labels = classify_slice(f, bin, rule);
    for (std::size_t c = 0; c < out.n_cells; ++c) out.at(c, t) = labels[c];
  }
  return out;
}

const char* emerging_kind_name(EmergingKind k)
{
  switch (k) {
  case EmergingKind::new_spot: return "new";
  case EmergingKind::unstable: return "unstable";
  case EmergingKind::stable: return "stable";
  case EmergingKind::none: return "none";
  }
  return "none";
}

EmergingResult emerging_classify(const LabelCube& labels, const SpaceTimeCube& gi, const EmergingConfig& config,
                                 std::size_t t_begin, std::size_t t_end)
{
  if (labels.n_cells != gi.cell_count() || labels.n_times != gi.time_count())
    throw Error(ErrorKind::config, "label cube and G_i* cube differ in shape");
  t_end = std::min(t_end, labels.n_times);
  if (t_begin >= t_end || t_end - t_begin < kMinEmergingSlices)
    throw Error(ErrorKind::too_short, "emerging classification needs at least " + std::to_string(kMinEmergingSlices) +
                                          " slices, got " + std::to_string(t_end > t_begin ? t_end - t_begin : 0));
  EmergingResult out;
  out.t_begin = t_begin;
  out.t_end = t_end;
  out.cells.resize(labels.n_cells);
  const std::size_t len = t_end - t_begin;

  const auto ncl = static_cast<long long>(labels.n_cells);
#pragma omp parallel for schedule(static)
  for (long long cl = 0; cl < ncl; ++cl) {
    const auto c = static_cast<std::size_t>(cl);
    EmergingCategory& ec = out.cells[c];
    ec.intensity_trend.alpha = config.alpha;

    std::size_t n_present = 0, n_hot = 0, n_cold = 0;
    std::size_t last_present = 0;
    SpotKind last_sig = SpotKind::none;
    for (std::size_t t = t_begin; t < t_end; ++t) {
      const SpotLabel& l = labels.at(c, t);
      if (l.masked || !gi.present(c, t)) continue;
      ++n_present;
      last_present = t;
      if (l.label == SpotKind::hot) ++n_hot;
      if (l.label == SpotKind::cold) ++n_cold;
      if (l.significant()) last_sig = l.label;
    }
    if (static_cast<double>(len - n_present) > config.max_missing * static_cast<double>(len)) {
      ec.excluded = true;
      continue;
    }

    const auto series = gi.series(c).subspan(t_begin, len);
    const auto mask = gi.series_present(c).subspan(t_begin, len);
    if (n_present >= kMinTrendLength) {
      const MKResult r = mk_stat(series, mask);
      ec.intensity_trend = classify_trend(r, config.alpha);
      ec.intensity_p = r.p_two_sided;
      ec.intensity_defined = true;
    }

    const std::size_t n_sig = n_hot + n_cold;
    if (n_sig == 0) continue;
    const bool final_sig = labels.at(c, last_present).significant();
    const std::size_t earlier_sig = n_sig - (final_sig ? 1 : 0);
    if (n_hot > 0 && n_cold > 0) {
      ec.category = EmergingKind::unstable;
      ec.polarity = last_sig;
      continue;
    }
    ec.polarity = n_hot > 0 ? SpotKind::hot : SpotKind::cold;
    if (final_sig && static_cast<double>(earlier_sig) <= config.new_max_earlier * static_cast<double>(n_present - 1)) {
      ec.category = EmergingKind::new_spot;
    } else if (final_sig && static_cast<double>(n_sig) >= config.stable_min * static_cast<double>(n_present)) {
      ec.category = EmergingKind::stable;
    } else {
      ec.category = EmergingKind::unstable;
    }
  }
  for (const EmergingCategory& ec : out.cells) out.excluded_count += ec.excluded;
  return out;
}

} // namespace popshift
