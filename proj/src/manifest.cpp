#include "grainstack/manifest.hpp"

#include <fstream>

#include <json.hpp>

namespace grainstack {

namespace fs = std::filesystem;
using nlohmann::json;

StackManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ResolutionError("no such manifest: " + path.string());

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }

    StackManifest m;
    const fs::path base = fs::absolute(path).parent_path();
    try {
        m.kind = parse_kind(doc.at("kind").get<std::string>());
        m.pixel_size_xy = doc.value("pixel_size_xy", 1.0);
        m.z_spacing = doc.value("z_spacing", 1.0);
        m.axis_order = doc.value("axis_order", std::string("zyx"));
        for (const auto& s : doc.at("slices")) {
            fs::path p = s.get<std::string>();
            m.slices.push_back(p.is_absolute() ? p : (base / p).lexically_normal());
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }

    if (m.slices.empty()) throw ValidationError(path.string() + ": manifest lists no slices");
    for (const auto& s : m.slices)
        if (!fs::exists(s)) throw ResolutionError(path.string() + ": missing slice " + s.string());

    const RasterHeader first = read_header(m.slices.front());
    for (std::size_t i = 1; i < m.slices.size(); ++i) {
        const RasterHeader h = read_header(m.slices[i]);
        if (h.width != first.width || h.height != first.height)
            throw ConsistencyError(path.string() + ": slice " + m.slices[i].string() + " is " +
                                   std::to_string(h.width) + "x" + std::to_string(h.height) +
                                   ", expected " + std::to_string(first.width) + "x" +
                                   std::to_string(first.height));
    }
    return m;
}

void save_manifest(const StackManifest& manifest, const fs::path& path) {
    const fs::path base = fs::absolute(path).parent_path();
    json slices = json::array();
    for (const auto& s : manifest.slices) {
        const fs::path abs = fs::absolute(s).lexically_normal();
        const fs::path rel = abs.lexically_relative(base);
        const bool inside = !rel.empty() && *rel.begin() != "..";
        slices.push_back(inside ? rel.generic_string() : abs.generic_string());
    }
    json doc = {{"kind", std::string(kind_name(manifest.kind))},
                {"axis_order", manifest.axis_order},
                {"pixel_size_xy", manifest.pixel_size_xy},
                {"z_spacing", manifest.z_spacing},
                {"slices", slices}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << doc.dump(2) << '\n';
}

RasterHeader manifest_geometry(const StackManifest& manifest) {
    if (manifest.slices.empty()) throw ValidationError("manifest lists no slices");
    return read_header(manifest.slices.front());
}

}  // namespace grainstack
