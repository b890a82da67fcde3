#include "popshift/csv.hpp"

#include <charconv>
#include <cmath>

namespace popshift::csv {

std::string_view trim(std::string_view s)
{
  const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(std::string_view line)
{
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
      cur.clear();
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else if (!was_quoted) {
      cur.push_back(c);
    }
  }
  out.push_back(was_quoted ? cur : std::string(trim(cur)));
  return out;
}

std::optional<double> parse_double(std::string_view s)
{
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_double(double v)
{
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void RowWriter::sep()
{
  if (!first_) os_ << ',';
  first_ = false;
}

RowWriter& RowWriter::field(std::string_view s)
{
  sep();
  if (s.find_first_of(",\"\n") != std::string_view::npos) {
    os_ << '"';
    for (char c : s) {
      if (c == '"') os_ << '"';
      os_ << c;
    }
    os_ << '"';
  } else {
    os_ << s;
  }
  return *this;
}

RowWriter& RowWriter::field(double v)
{
  sep();
  os_ << format_double(v);
  return *this;
}

RowWriter& RowWriter::field(long long v)
{
  sep();
  os_ << v;
  return *this;
}

RowWriter& RowWriter::empty()
{
  sep();
  return *this;
}

void RowWriter::end()
{
  os_ << '\n';
  first_ = true;
}

} // namespace popshift::csv
