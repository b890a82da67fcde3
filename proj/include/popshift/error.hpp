#pragma once

#include <stdexcept>
#include <string>

namespace popshift {

enum class ErrorKind {
  invalid_extent,
  out_of_range,
  schema,
  row,
  duplicate,
  no_overlap,
  ambiguity,
  undefined_rate,
  empty_input,
  degenerate_fit,
  no_stamp,
  empty_region,
  too_short,
  too_sparse,
  invalid_variable,
  config,
  usage,
  io,
};

const char* error_kind_name(ErrorKind kind);

// Every failure raised by the library carries a kind so that front ends can
// map it onto an exit status without string matching.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorKind kind_;
  std::string detail_;
};

// True for the kinds that indicate bad input data rather than bad usage.
bool is_data_error(ErrorKind kind);

} // namespace popshift
