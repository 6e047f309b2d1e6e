#pragma once

#include <string>

#include "travest/geometry.hpp"

namespace travest {

// ASCII PLY with float x/y/z and an optional integer `label` property.
PointCloud load_ply(const std::string& path);
void save_ply(const PointCloud& cloud, const std::string& path);

// Little-endian binary container: magic "GSPC", u32 point count, u32
// flags (bit 0: labels present); body is count f32 (x,y,z) triples
// followed, when flagged, by count u16 labels.
PointCloud load_gspc(const std::string& path);
void save_gspc(const PointCloud& cloud, const std::string& path);

// Dispatch on extension: ".ply" is ASCII PLY, everything else GSPC.
PointCloud load_cloud(const std::string& path);
void save_cloud(const PointCloud& cloud, const std::string& path);

}  // namespace travest
