#pragma once

#include "popshift/grid.hpp"

#include <iosfwd>
#include <vector>

#include <json.hpp>

namespace popshift {

// Streams a FeatureCollection one feature per line so large cell layers are
// never held in memory as a single document.
class GeoJsonWriter {
public:
  explicit GeoJsonWriter(std::ostream& out, const nlohmann::json& collection_properties = nullptr);
  GeoJsonWriter(const GeoJsonWriter&) = delete;
  GeoJsonWriter& operator=(const GeoJsonWriter&) = delete;
  ~GeoJsonWriter();

  void polygon(const std::vector<GeoPoint>& closed_ring, const nlohmann::json& properties);
  void cell(const GridSpec& grid, CellId id, nlohmann::json properties);  // adds cell_id
  void close();
  std::size_t count() const { return count_; }

private:
  std::ostream& out_;
  std::size_t count_ = 0;
  bool closed_ = false;
};

} // namespace popshift
