#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "grainstack/raster.hpp"

namespace grainstack {

enum class RasterKind { label, boundary, gray, probability, weight };

std::string_view kind_name(RasterKind kind);
RasterKind parse_kind(std::string_view name);

// Conventional file extension for a kind (".png" or ".gsr").
std::string_view kind_extension(RasterKind kind);

using AnyRaster = std::variant<LabelGrid, BoundaryGrid, GrayImage, ProbabilityGrid, FloatRaster>;

struct RasterHeader {
    int width = 0;
    int height = 0;
    int channels = 1;
    int bit_depth = 8;  // 8 or 16 for PNG, 32 for ".gsr"
};

// Reads only the header of a PNG or ".gsr" file.
RasterHeader read_header(const std::filesystem::path& path);

// PNG readers. Boundary files use dark ink (< 128) for boundary pixels.
// Label files are 16-bit grayscale; 8-bit files are accepted and widened.
LabelGrid read_label_png(const std::filesystem::path& path);
BoundaryGrid read_boundary_png(const std::filesystem::path& path);
GrayImage read_gray_png(const std::filesystem::path& path);

void write_png(const LabelGrid& grid, const std::filesystem::path& path);
void write_png(const BoundaryGrid& grid, const std::filesystem::path& path);
void write_png(const GrayImage& grid, const std::filesystem::path& path);

// ".gsr": "GSR1", u32 width, u32 height, u32 channels (little endian), then
// width*height*channels little-endian float32 values, channel-interleaved.
FloatRaster read_gsr(const std::filesystem::path& path);
void write_gsr(const FloatRaster& raster, const std::filesystem::path& path);

ProbabilityGrid read_probability(const std::filesystem::path& path);
void write_gsr(const ProbabilityGrid& grid, const std::filesystem::path& path);

// Dispatches on kind. "weight" yields a FloatRaster.
AnyRaster read_raster(const std::filesystem::path& path, RasterKind kind);
void write_raster(const AnyRaster& raster, const std::filesystem::path& path);

// ".glv": "GLV1", u32 width, u32 height, u32 depth, then u32 labels.
LabelVolume read_volume(const std::filesystem::path& path);
void write_volume(const LabelVolume& volume, const std::filesystem::path& path);

}  // namespace grainstack
