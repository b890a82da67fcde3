#include "popshift/error.hpp"

namespace popshift {

const char* error_kind_name(ErrorKind kind)
{
  switch (kind) {
  case ErrorKind::invalid_extent: return "invalid-extent";
  case ErrorKind::out_of_range: return "out-of-range";
  case ErrorKind::schema: return "schema";
  case ErrorKind::row: return "row";
  case ErrorKind::duplicate: return "duplicate";
  case ErrorKind::no_overlap: return "no-overlap";
  case ErrorKind::ambiguity: return "ambiguity";
  case ErrorKind::undefined_rate: return "undefined-rate";
  case ErrorKind::empty_input: return "empty-input";
  case ErrorKind::degenerate_fit: return "degenerate-fit";
  case ErrorKind::no_stamp: return "no-stamp";
  case ErrorKind::empty_region: return "empty-region";
  case ErrorKind::too_short: return "too-short";
  case ErrorKind::too_sparse: return "too-sparse";
  case ErrorKind::invalid_variable: return "invalid-variable";
  case ErrorKind::config: return "config";
  case ErrorKind::usage: return "usage";
  case ErrorKind::io: return "io";
  }
  return "unknown";
}

bool is_data_error(ErrorKind kind)
{
  switch (kind) {
  case ErrorKind::config:
  case ErrorKind::usage:
  case ErrorKind::empty_region:
    return false;
  default:
    return true;
  }
}

} // namespace popshift
