// Stand-in for a trained pair scorer: answers each crop with the IoU of its
// two channels. FAKE_SCORER_MODE selects a misbehaviour for error-path tests.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "grainstack/raster_io.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: fake_scorer <batch-dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    const char* env = std::getenv("FAKE_SCORER_MODE");
    const std::string mode = env ? env : "";
    if (mode == "fail") return 7;

    std::ifstream meta_in(dir / "pairs.json");
    const auto meta = nlohmann::json::parse(meta_in);
    const int crop = meta.at("crop_size").get<int>();
    const auto crops = grainstack::read_gsr(dir / "pairs.gsr");
    const std::size_t rows = meta.at("pairs").size();
    if (crops.width() != crop || crops.height() != int(rows) * crop || crops.channels() != 2) return 5;

    nlohmann::json out = nlohmann::json::array();
    for (std::size_t r = 0; r < rows; ++r) {
        double inter = 0, uni = 0;
        for (int y = 0; y < crop; ++y)
            for (int x = 0; x < crop; ++x) {
                const bool a = crops(x, int(r) * crop + y, 0) > 0.5f;
                const bool b = crops(x, int(r) * crop + y, 1) > 0.5f;
                inter += a && b;
                uni += a || b;
            }
        out.push_back({{"row", meta["pairs"][r].at("row")}, {"similarity", uni > 0 ? inter / uni : 0.0}});
    }
    if (mode == "out_of_range" && !out.empty()) out[0]["similarity"] = 1.5;
    if (mode == "missing" && !out.empty()) out.erase(out.size() - 1);
    if (mode == "duplicate" && out.size() > 1) out[1]["row"] = out[0]["row"];
    if (mode == "reversed") out = nlohmann::json(std::vector<nlohmann::json>(out.rbegin(), out.rend()));

    std::ofstream file(dir / "scores.json");
    if (mode == "garbage")
        file << "{ this is not json";
    else if (mode != "silent")
        file << out.dump();
    return 0;
}
