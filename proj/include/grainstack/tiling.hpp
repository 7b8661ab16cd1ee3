#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "grainstack/errors.hpp"
#include "grainstack/raster.hpp"

namespace grainstack {

struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
    bool operator==(const Rect&) const = default;
};

struct Tile {
    int origin_x = 0;  // window corner in source coordinates; may be negative
    int origin_y = 0;
    Rect core;         // source pixels this tile contributes when stitching
    bool operator==(const Tile&) const = default;
};

struct TilePlan {
    int source_width = 0;
    int source_height = 0;
    int tile_size = 0;
    int overlap = 0;
    std::vector<Tile> tiles;  // row-major over the core grid

    int core_size() const { return tile_size - 2 * overlap; }
    bool operator==(const TilePlan&) const = default;
};

// Cores of (tile - 2 * overlap) pixels laid edge to edge from the origin; the
// last row/column of cores is clipped to the source. Each window extends its
// core by `overlap` on every side, reading mirrored pixels beyond the border.
// Throws ParameterError unless tile_size > 2 * overlap, overlap >= 0 and each
// source side is at least the core size.
TilePlan plan_tiles(int source_width, int source_height, int tile_size, int overlap);

nlohmann::json to_json(const TilePlan& plan);
// Rebuilds the plan from its parameters and rejects documents whose tile list
// disagrees (FormatError).
TilePlan tile_plan_from_json(const nlohmann::json& doc);

// Symmetric reflection of a coordinate into [0, n): -1 -> 0, n -> n - 1.
inline int mirror_index(int p, int n) {
    const int period = 2 * n;
    int m = p % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

template <class T, class Tag>
std::vector<Raster<T, Tag>> split(const Raster<T, Tag>& grid, const TilePlan& plan) {
    if (grid.width() != plan.source_width || grid.height() != plan.source_height)
        throw ConsistencyError("grid is " + std::to_string(grid.width()) + "x" + std::to_string(grid.height()) +
                               ", plan expects " + std::to_string(plan.source_width) + "x" +
                               std::to_string(plan.source_height));
    std::vector<Raster<T, Tag>> out;
    out.reserve(plan.tiles.size());
    const int c = grid.channels();
    for (const auto& t : plan.tiles) {
        Raster<T, Tag> tile(plan.tile_size, plan.tile_size, c);
        for (int y = 0; y < plan.tile_size; ++y) {
            const int sy = mirror_index(t.origin_y + y, grid.height());
            for (int x = 0; x < plan.tile_size; ++x) {
                const int sx = mirror_index(t.origin_x + x, grid.width());
                for (int k = 0; k < c; ++k) tile(x, y, k) = grid(sx, sy, k);
            }
        }
        out.push_back(std::move(tile));
    }
    return out;
}

template <class T, class Tag>
Raster<T, Tag> stitch(const std::vector<Raster<T, Tag>>& tiles, const TilePlan& plan) {
    if (tiles.size() != plan.tiles.size())
        throw ConsistencyError("plan has " + std::to_string(plan.tiles.size()) + " tiles, got " +
                               std::to_string(tiles.size()));
    if (tiles.empty()) return {};
    const int c = tiles.front().channels();
    for (std::size_t i = 0; i < tiles.size(); ++i)
        if (tiles[i].width() != plan.tile_size || tiles[i].height() != plan.tile_size || tiles[i].channels() != c)
            throw ConsistencyError("tile " + std::to_string(i) + " does not match the plan's shape");
    Raster<T, Tag> out(plan.source_width, plan.source_height, c);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const auto& t = plan.tiles[i];
        for (int y = 0; y < t.core.height; ++y)
            for (int x = 0; x < t.core.width; ++x) {
                const int gx = t.core.x + x, gy = t.core.y + y;
                for (int k = 0; k < c; ++k) out(gx, gy, k) = tiles[i](gx - t.origin_x, gy - t.origin_y, k);
            }
    }
    return out;
}

}  // namespace grainstack
