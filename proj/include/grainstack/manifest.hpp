#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grainstack/raster_io.hpp"

namespace grainstack {

// Ordered list of slice rasters. Slice paths are stored absolute in memory and
// written relative to the manifest's directory when they live underneath it.
struct StackManifest {
    RasterKind kind = RasterKind::label;
    std::string axis_order = "zyx";
    double pixel_size_xy = 1.0;  // micrometers
    double z_spacing = 1.0;      // micrometers
    std::vector<std::filesystem::path> slices;  // z ascending

    bool anisotropic() const { return z_spacing != pixel_size_xy; }
    bool operator==(const StackManifest&) const = default;
};

// Parses the JSON document and checks that every slice exists and that all
// slices share one width/height.
//   malformed JSON / unknown kind  -> FormatError
//   missing slice file             -> ResolutionError
//   heterogeneous dimensions       -> ConsistencyError
//   empty slice list               -> ValidationError
StackManifest load_manifest(const std::filesystem::path& path);

void save_manifest(const StackManifest& manifest, const std::filesystem::path& path);

// Width/height shared by the manifest's slices (reads the first header).
RasterHeader manifest_geometry(const StackManifest& manifest);

}  // namespace grainstack
