#include "grainstack/regions.hpp"

#include <limits>

namespace grainstack {

std::vector<GrainRegion> extract_regions(const LabelGrid& labels, int slice_index) {
    struct Acc {
        std::size_t area = 0;
        double sx = 0, sy = 0;
        BoundingBox box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
    };
    std::vector<Acc> acc(65536);
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) {
            const auto id = labels(x, y);
            if (id == 0) continue;
            Acc& a = acc[id];
            ++a.area;
            a.sx += x;
            a.sy += y;
            a.box.min_x = std::min(a.box.min_x, x);
            a.box.min_y = std::min(a.box.min_y, y);
            a.box.max_x = std::max(a.box.max_x, x);
            a.box.max_y = std::max(a.box.max_y, y);
        }

    std::vector<GrainRegion> out;
    for (std::uint32_t id = 1; id < acc.size(); ++id) {
        const Acc& a = acc[id];
        if (a.area == 0) continue;
        GrainRegion r;
        r.id = id;
        r.area = a.area;
        r.centroid_x = a.sx / double(a.area);
        r.centroid_y = a.sy / double(a.area);
        r.bbox = a.box;
        r.slice_index = slice_index;
        out.push_back(r);
    }
    return out;
}

}  // namespace grainstack
