#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace popshift::csv {

// Splits one record on commas; double-quoted fields may contain commas and
// doubled quotes. Surrounding whitespace is trimmed from unquoted fields.
std::vector<std::string> split_line(std::string_view line);

std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);

// Shortest representation that parses back to the identical double.
std::string format_double(double v);

// Appends fields with separators; values that need quoting are quoted.
class RowWriter {
public:
  explicit RowWriter(std::ostream& os) : os_(os) {}
  RowWriter& field(std::string_view s);
  RowWriter& field(double v);
  RowWriter& field(long long v);
  RowWriter& field(std::size_t v) { return field(static_cast<long long>(v)); }
  RowWriter& field(int v) { return field(static_cast<long long>(v)); }
  RowWriter& empty();
  void end();

private:
  void sep();
  std::ostream& os_;
  bool first_ = true;
};

} // namespace popshift::csv
