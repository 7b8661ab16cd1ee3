#pragma once

#include <cstdint>
#include <vector>

#include "grainstack/raster.hpp"

namespace grainstack {

struct BoundingBox {
    int min_x = 0;
    int min_y = 0;
    int max_x = -1;  // inclusive
    int max_y = -1;

    int width() const { return max_x - min_x + 1; }
    int height() const { return max_y - min_y + 1; }
    bool contains(int x, int y) const { return x >= min_x && x <= max_x && y >= min_y && y <= max_y; }
    BoundingBox united(const BoundingBox& o) const {
        return {std::min(min_x, o.min_x), std::min(min_y, o.min_y), std::max(max_x, o.max_x),
                std::max(max_y, o.max_y)};
    }
    bool operator==(const BoundingBox&) const = default;
};

// One grain footprint in one slice. Centroid is the mean pixel coordinate.
struct GrainRegion {
    std::uint32_t id = 0;
    std::size_t area = 0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    BoundingBox bbox;
    int slice_index = 0;
};

// Regions for every nonzero id, ordered by id. Pixels sharing an id are
// treated as one region whether or not they are connected.
std::vector<GrainRegion> extract_regions(const LabelGrid& labels, int slice_index = 0);

}  // namespace grainstack
