#pragma once

#include <string>
#include <vector>

#include "vergepipe/curation.hpp"
#include "vergepipe/io.hpp"

namespace vergepipe {

/// RFC 7946 FeatureCollection with one Point per sample at its panorama,
/// coordinates in [lon, lat] order.
std::string export_geojson(const DatasetManifest& manifest);

/// One Point per survey point at its surveyed location, with the snap
/// outcome as properties.
std::string export_geojson(const std::vector<SectionSnaps>& snaps);

}  // namespace vergepipe
