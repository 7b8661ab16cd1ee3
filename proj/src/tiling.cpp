#include "grainstack/tiling.hpp"

namespace grainstack {

TilePlan plan_tiles(int source_width, int source_height, int tile_size, int overlap) {
    if (overlap < 0) throw ParameterError("overlap must be >= 0");
    if (tile_size <= 2 * overlap)
        throw ParameterError("tile size " + std::to_string(tile_size) + " must exceed twice the overlap " +
                             std::to_string(overlap));
    const int core = tile_size - 2 * overlap;
    if (source_width < core || source_height < core)
        throw ParameterError("source " + std::to_string(source_width) + "x" + std::to_string(source_height) +
                             " is smaller than the tile core " + std::to_string(core));
    TilePlan plan{source_width, source_height, tile_size, overlap, {}};
    const int cols = (source_width + core - 1) / core;
    const int rows = (source_height + core - 1) / core;
    for (int j = 0; j < rows; ++j)
        for (int i = 0; i < cols; ++i) {
            const int cx = i * core, cy = j * core;
            plan.tiles.push_back({cx - overlap, cy - overlap,
                                  {cx, cy, std::min(core, source_width - cx), std::min(core, source_height - cy)}});
        }
    return plan;
}

nlohmann::json to_json(const TilePlan& plan) {
    nlohmann::json tiles = nlohmann::json::array();
    for (const auto& t : plan.tiles)
        tiles.push_back({{"origin_x", t.origin_x},
                         {"origin_y", t.origin_y},
                         {"core", {{"x", t.core.x}, {"y", t.core.y}, {"width", t.core.width}, {"height", t.core.height}}}});
    return {{"source_width", plan.source_width},
            {"source_height", plan.source_height},
            {"tile_size", plan.tile_size},
            {"overlap", plan.overlap},
            {"core_size", plan.core_size()},
            {"tiles", std::move(tiles)}};
}

TilePlan tile_plan_from_json(const nlohmann::json& doc) {
    TilePlan plan;
    try {
        plan = plan_tiles(doc.at("source_width").get<int>(), doc.at("source_height").get<int>(),
                          doc.at("tile_size").get<int>(), doc.at("overlap").get<int>());
        const auto& tiles = doc.at("tiles");
        bool same = tiles.size() == plan.tiles.size();
        for (std::size_t i = 0; same && i < tiles.size(); ++i) {
            const auto& t = tiles[i];
            const auto& c = t.at("core");
            const Tile parsed{t.at("origin_x").get<int>(),
                              t.at("origin_y").get<int>(),
                              {c.at("x").get<int>(), c.at("y").get<int>(), c.at("width").get<int>(),
                               c.at("height").get<int>()}};
            same = parsed == plan.tiles[i];
        }
        if (!same) throw FormatError("tile list disagrees with the plan parameters");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed tile plan: ") + e.what());
    }
    return plan;
}

}  // namespace grainstack
