#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace popshift {

// Per-cell values with a presence mask. Absent entries carry no value
// semantics; their slot in `value` is unspecified.
struct CellField {
  std::vector<double> value;
  std::vector<std::uint8_t> present;

  CellField() = default;
  explicit CellField(std::size_t n, double fill = 0.0, bool is_present = false)
      : value(n, fill), present(n, is_present ? 1 : 0) {}

  std::size_t size() const { return value.size(); }
  bool has(std::size_t i) const { return present[i] != 0; }
  void set(std::size_t i, double v)
  {
    value[i] = v;
    present[i] = 1;
  }
  std::size_t count_present() const
  {
    std::size_t n = 0;
    for (auto p : present) n += p != 0;
    return n;
  }
};

} // namespace popshift
