#include "popshift/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace popshift::svg {

namespace {

constexpr double kWidth = 800, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v)
  {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle()
  {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (lo == hi) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

class Frame {
public:
  Frame(Range x, Range y) : x_(x), y_(y) {}
  double px(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double v) const { return kHeight - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }
  const Range& x() const { return x_; }
  const Range& y() const { return y_; }

private:
  Range x_, y_;
};

void open_doc(std::ostream& out, const std::string& title)
{
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
}

void axes(std::ostream& out, const Frame& f, const std::string& x_label, const std::string& y_label, bool x_ticks)
{
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<path d=\"M" << x0 << ' ' << y1 << "V" << y0 << "H" << x1 << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = f.y().lo + (f.y().hi - f.y().lo) * i / 5.0;
    const double y = f.py(v);
    out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << num(y) << "\" x2=\"" << x0 << "\" y2=\"" << num(y)
        << "\" stroke=\"black\"/><text x=\"" << x0 - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
        << tick_label(v) << "</text>\n";
    if (x_ticks) {
      const double xv = f.x().lo + (f.x().hi - f.x().lo) * i / 5.0;
      const double x = f.px(xv);
      out << "<line x1=\"" << num(x) << "\" y1=\"" << y0 << "\" x2=\"" << num(x) << "\" y2=\"" << y0 + 4
          << "\" stroke=\"black\"/><text x=\"" << num(x) << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">"
          << tick_label(xv) << "</text>\n";
    }
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">" << escape(x_label)
      << "</text>\n";
  out << "<text transform=\"translate(16 " << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";
}

} // namespace

std::string escape(const std::string& text)
{
  std::string out;
  for (char c : text) {
    switch (c) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

void write_line_chart(std::ostream& out, const LineChart& c)
{
  std::size_t n = 0;
  Range xr, yr;
  for (const Series& s : c.series) {
    n = std::max(n, s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!s.defined.empty() && !s.defined[i]) continue;
      const double e = i < s.error.size() ? s.error[i] : 0.0;
      yr.add(s.y[i] - e);
      yr.add(s.y[i] + e);
    }
  }
  if (c.reference_y) yr.add(*c.reference_y);
  xr.add(0.0);
  xr.add(n > 1 ? static_cast<double>(n - 1) : 1.0);
  yr.settle();
  const Frame f(xr, yr);

  open_doc(out, c.title);
  axes(out, f, c.x_label, c.y_label, c.x_ticks.empty());
  const double y0 = kHeight - kBottom;
  for (std::size_t i = 0; i < c.x_ticks.size(); ++i) {
    if (c.x_ticks[i].empty()) continue;
    const double x = f.px(static_cast<double>(i));
    out << "<line x1=\"" << num(x) << "\" y1=\"" << y0 << "\" x2=\"" << num(x) << "\" y2=\"" << y0 + 4
        << "\" stroke=\"black\"/><text x=\"" << num(x) << "\" y=\"" << y0 + 18
        << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(c.x_ticks[i]) << "</text>\n";
  }
  if (c.reference_y)
    out << "<line x1=\"" << kLeft << "\" y1=\"" << num(f.py(*c.reference_y)) << "\" x2=\"" << kWidth - kRight
        << "\" y2=\"" << num(f.py(*c.reference_y)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";

  for (std::size_t si = 0; si < c.series.size(); ++si) {
    const Series& s = c.series[si];
    std::string d;
    bool pen = false;
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!s.defined.empty() && !s.defined[i]) {
        pen = false;
        continue;
      }
      d += (pen ? "L" : "M") + num(f.px(static_cast<double>(i))) + ' ' + num(f.py(s.y[i]));
      pen = true;
    }
    out << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"/>\n";
    for (std::size_t i = 0; i < s.error.size() && i < s.y.size(); ++i) {
      if (!s.defined.empty() && !s.defined[i]) continue;
      const double x = f.px(static_cast<double>(i));
      out << "<line x1=\"" << num(x) << "\" y1=\"" << num(f.py(s.y[i] - s.error[i])) << "\" x2=\"" << num(x)
          << "\" y2=\"" << num(f.py(s.y[i] + s.error[i])) << "\" stroke=\"" << s.color << "\"/>\n";
    }
    out << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << kTop + 14 * (si + 1)
        << "\" text-anchor=\"end\" fill=\"" << s.color << "\">" << escape(s.name) << "</text>\n";
  }

  if (!c.series.empty()) {
    const Series& s = c.series.front();
    for (const Marker& m : c.markers) {
      if (m.x_index >= s.y.size()) continue;
      const double x = f.px(static_cast<double>(m.x_index));
      const double y = f.py(s.y[m.x_index]);
      out << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"6\" fill=\"" << m.color
          << "\" fill-opacity=\"0.8\"><title>" << escape(m.label) << "</title></circle>\n";
    }
  }
  out << "</svg>\n";
}

void write_scatter(std::ostream& out, const ScatterChart& c)
{
  Range xr, yr;
  const std::size_t n = std::min(c.x.size(), c.y.size());
  for (std::size_t i = 0; i < n; ++i) {
    xr.add(c.x[i]);
    yr.add(c.y[i]);
  }
  xr.settle();
  yr.settle();
  const Frame f(xr, yr);
  open_doc(out, c.title);
  axes(out, f, c.x_label, c.y_label, true);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
    out << "<circle cx=\"" << num(f.px(c.x[i])) << "\" cy=\"" << num(f.py(c.y[i]))
        << "\" r=\"2.5\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
  }
  if (c.fit_slope && c.fit_intercept) {
    const double a = xr.lo, b = xr.hi;
    out << "<line x1=\"" << num(f.px(a)) << "\" y1=\"" << num(f.py(*c.fit_intercept + *c.fit_slope * a)) << "\" x2=\""
        << num(f.px(b)) << "\" y2=\"" << num(f.py(*c.fit_intercept + *c.fit_slope * b))
        << "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  }
  if (!c.annotation.empty())
    out << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16 << "\">" << escape(c.annotation) << "</text>\n";
  out << "</svg>\n";
}

} // namespace popshift::svg
