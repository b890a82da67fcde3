#include "popshift/geojson.hpp"

#include <ostream>

namespace popshift {

GeoJsonWriter::GeoJsonWriter(std::ostream& out, const nlohmann::json& collection_properties) : out_(out)
{
  out_ << "{\"type\":\"FeatureCollection\",";
  if (!collection_properties.is_null()) out_ << "\"properties\":" << collection_properties.dump() << ',';
  out_ << "\"features\":[";
}

GeoJsonWriter::~GeoJsonWriter()
{
  if (!closed_) close();
}

void GeoJsonWriter::polygon(const std::vector<GeoPoint>& closed_ring, const nlohmann::json& properties)
{
  nlohmann::json ring = nlohmann::json::array();
  for (const GeoPoint& p : closed_ring) ring.push_back({p.lon, p.lat});
  const nlohmann::json feature{{"type", "Feature"},
                               {"properties", properties.is_null() ? nlohmann::json::object() : properties},
                               {"geometry", {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring})}}}};
  out_ << (count_ ? ",\n" : "\n") << feature.dump();
  ++count_;
}

void GeoJsonWriter::cell(const GridSpec& grid, CellId id, nlohmann::json properties)
{
  if (properties.is_null()) properties = nlohmann::json::object();
  properties["cell_id"] = id.index;
  polygon(cell_polygon(grid, id), properties);
}

void GeoJsonWriter::close()
{
  if (closed_) return;
  out_ << "\n]}\n";
  closed_ = true;
}

} // namespace popshift
