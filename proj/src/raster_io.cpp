#include "grainstack/raster_io.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

namespace grainstack {

namespace fs = std::filesystem;

std::string_view kind_name(RasterKind kind) {
    switch (kind) {
        case RasterKind::label: return "label";
        case RasterKind::boundary: return "boundary";
        case RasterKind::gray: return "gray";
        case RasterKind::probability: return "probability";
        case RasterKind::weight: return "weight";
    }
    return "unknown";
}

RasterKind parse_kind(std::string_view name) {
    if (name == "label") return RasterKind::label;
    if (name == "boundary") return RasterKind::boundary;
    if (name == "gray") return RasterKind::gray;
    if (name == "probability") return RasterKind::probability;
    if (name == "weight") return RasterKind::weight;
    throw FormatError("unknown raster kind '" + std::string(name) + "'");
}

std::string_view kind_extension(RasterKind kind) {
    switch (kind) {
        case RasterKind::probability:
        case RasterKind::weight: return ".gsr";
        default: return ".png";
    }
}

void validate_boundary(const BoundaryGrid& grid) {
    for (auto v : grid.data())
        if (v > 1) throw ValidationError("boundary grid values must be 0 or 1");
}

void validate_probability(const ProbabilityGrid& grid) {
    if (grid.channels() != 2)
        throw ValidationError("probability grid must have 2 channels, got " +
                              std::to_string(grid.channels()));
    for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
        const double p0 = grid[2 * i];
        const double p1 = grid[2 * i + 1];
        if (!(p0 >= 0.0 && p0 <= 1.0 && p1 >= 0.0 && p1 <= 1.0))
            throw ValidationError("probability outside [0,1] at pixel " + std::to_string(i));
        if (std::abs(p0 + p1 - 1.0) > 1e-6)
            throw ValidationError("probabilities do not sum to 1 at pixel " + std::to_string(i));
    }
}

std::vector<std::uint16_t> label_ids(const LabelGrid& grid) {
    std::vector<bool> seen(65536, false);
    for (auto v : grid.data()) seen[v] = true;
    std::vector<std::uint16_t> ids;
    for (std::size_t id = 1; id < seen.size(); ++id)
        if (seen[id]) ids.push_back(static_cast<std::uint16_t>(id));
    return ids;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        if (mode[0] == 'r' && !fs::exists(path))
            throw ResolutionError("no such file: " + path.string());
        throw IoError("cannot open " + path.string());
    }
    return f;
}

// ---- PNG -------------------------------------------------------------------
//
// libpng reports errors with longjmp. The decode/encode frames below hold no
// objects with destructors; all buffers live in the caller-owned PngData.

struct PngData {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
    std::vector<unsigned char> pixels;
    std::vector<png_bytep> rows;
    std::array<char, 256> error{};
};

void on_png_error(png_structp png, png_const_charp msg) {
    auto* data = static_cast<PngData*>(png_get_error_ptr(png));
    std::snprintf(data->error.data(), data->error.size(), "%s", msg);
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void prepare_rows(PngData& d, std::size_t row_bytes) {
    d.pixels.assign(row_bytes * d.height, 0);
    d.rows.resize(d.height);
    for (png_uint_32 y = 0; y < d.height; ++y) d.rows[y] = d.pixels.data() + row_bytes * y;
}

bool decode_png(std::FILE* fp, PngData& d, bool header_only) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &d, on_png_error, on_png_warning);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    d.width = png_get_image_width(png, info);
    d.height = png_get_image_height(png, info);
    d.bit_depth = png_get_bit_depth(png, info);
    d.color_type = png_get_color_type(png, info);
    if (header_only) {
        png_destroy_read_struct(&png, &info, nullptr);
        return true;
    }
    if (d.color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (d.color_type == PNG_COLOR_TYPE_GRAY && d.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (d.color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (d.color_type == PNG_COLOR_TYPE_PALETTE || (d.color_type & PNG_COLOR_MASK_COLOR))
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);
    d.bit_depth = png_get_bit_depth(png, info);
    prepare_rows(d, png_get_rowbytes(png, info));
    png_read_image(png, d.rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

bool encode_png(std::FILE* fp, PngData& d) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &d, on_png_error, on_png_warning);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, d.width, d.height, d.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, d.rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

void check_png_signature(std::FILE* fp, const fs::path& path) {
    unsigned char sig[8] = {};
    if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw FormatError(path.string() + ": not a PNG file");
    std::rewind(fp);
}

PngData load_png(const fs::path& path) {
    auto fp = open_file(path, "rb");
    check_png_signature(fp.get(), path);
    PngData d;
    if (!decode_png(fp.get(), d, false))
        throw FormatError(path.string() + ": " + std::string(d.error.data()));
    if (d.bit_depth != 8 && d.bit_depth != 16)
        throw FormatError(path.string() + ": unsupported bit depth " + std::to_string(d.bit_depth));
    return d;
}

void store_png(PngData& d, const fs::path& path) {
    auto fp = open_file(path, "wb");
    if (!encode_png(fp.get(), d))
        throw IoError(path.string() + ": " + std::string(d.error.data()));
    if (std::fflush(fp.get()) != 0) throw IoError("write failed: " + path.string());
}

// Big-endian sample reader covering 8 and 16-bit rows.
std::uint16_t sample(const PngData& d, png_uint_32 x, png_uint_32 y) {
    const unsigned char* row = d.rows[y];
    if (d.bit_depth == 16) return static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
    return row[x];
}

template <class Raster8>
Raster8 read_8bit(const fs::path& path) {
    PngData d = load_png(path);
    if (d.bit_depth != 8) throw FormatError(path.string() + ": expected an 8-bit grayscale PNG");
    Raster8 out(int(d.width), int(d.height));
    std::copy(d.pixels.begin(), d.pixels.end(), out.data().begin());
    return out;
}

template <class Raster8>
void write_8bit(const Raster8& grid, const fs::path& path, bool boundary_polarity) {
    PngData d;
    d.width = png_uint_32(grid.width());
    d.height = png_uint_32(grid.height());
    d.bit_depth = 8;
    prepare_rows(d, grid.width());
    for (std::size_t i = 0; i < grid.pixel_count(); ++i)
        d.pixels[i] = boundary_polarity ? (grid[i] ? 0 : 255) : grid[i];
    store_png(d, path);
}

// ---- little-endian helpers ---------------------------------------------------

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::vector<unsigned char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!fs::exists(path)) throw ResolutionError("no such file: " + path.string());
        throw IoError("cannot open " + path.string());
    }
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void spill(const std::vector<unsigned char>& bytes, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

struct DenseHeader {
    std::uint32_t a, b, c;
};

DenseHeader parse_dense_header(const std::vector<unsigned char>& bytes, const char* magic,
                               const fs::path& path) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), magic, 4) != 0)
        throw FormatError(path.string() + ": missing " + std::string(magic, 4) + " header");
    return {get_u32(&bytes[4]), get_u32(&bytes[8]), get_u32(&bytes[12])};
}

}  // namespace

RasterHeader read_header(const fs::path& path) {
    auto fp = open_file(path, "rb");
    unsigned char head[16] = {};
    const std::size_t got = std::fread(head, 1, sizeof head, fp.get());
    if (got >= 4 && std::memcmp(head, "GSR1", 4) == 0) {
        if (got < 16) throw FormatError(path.string() + ": truncated header");
        return {int(get_u32(head + 4)), int(get_u32(head + 8)), int(get_u32(head + 12)), 32};
    }
    std::rewind(fp.get());
    check_png_signature(fp.get(), path);
    PngData d;
    if (!decode_png(fp.get(), d, true))
        throw FormatError(path.string() + ": " + std::string(d.error.data()));
    return {int(d.width), int(d.height), 1, d.bit_depth};
}

LabelGrid read_label_png(const fs::path& path) {
    PngData d = load_png(path);
    LabelGrid out(int(d.width), int(d.height));
    bool any_grain = false;
    for (png_uint_32 y = 0; y < d.height; ++y)
        for (png_uint_32 x = 0; x < d.width; ++x) {
            const auto v = sample(d, x, y);
            out(int(x), int(y)) = v;
            any_grain |= v != 0;
        }
    if (!any_grain && out.pixel_count() > 0)
        throw ValidationError(path.string() + ": label raster holds no grain ids (all zero)");
    return out;
}

BoundaryGrid read_boundary_png(const fs::path& path) {
    PngData d = load_png(path);
    const std::uint16_t dark = d.bit_depth == 16 ? 32768 : 128;
    BoundaryGrid out(int(d.width), int(d.height));
    for (png_uint_32 y = 0; y < d.height; ++y)
        for (png_uint_32 x = 0; x < d.width; ++x) out(int(x), int(y)) = sample(d, x, y) < dark ? 1 : 0;
    return out;
}

GrayImage read_gray_png(const fs::path& path) { return read_8bit<GrayImage>(path); }

void write_png(const LabelGrid& grid, const fs::path& path) {
    PngData d;
    d.width = png_uint_32(grid.width());
    d.height = png_uint_32(grid.height());
    d.bit_depth = 16;
    prepare_rows(d, std::size_t(grid.width()) * 2);
    for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
        d.pixels[2 * i] = static_cast<unsigned char>(grid[i] >> 8);
        d.pixels[2 * i + 1] = static_cast<unsigned char>(grid[i] & 0xFF);
    }
    store_png(d, path);
}

void write_png(const BoundaryGrid& grid, const fs::path& path) {
    validate_boundary(grid);
    write_8bit(grid, path, true);
}

void write_png(const GrayImage& grid, const fs::path& path) { write_8bit(grid, path, false); }

FloatRaster read_gsr(const fs::path& path) {
    const auto bytes = slurp(path);
    const auto h = parse_dense_header(bytes, "GSR1", path);
    const std::uint64_t count = std::uint64_t(h.a) * h.b * h.c;
    if (h.c == 0) throw FormatError(path.string() + ": zero channels");
    if (bytes.size() != 16 + 4 * count)
        throw FormatError(path.string() + ": payload size " + std::to_string(bytes.size() - 16) +
                          " does not match header (" + std::to_string(4 * count) + ")");
    std::vector<float> values(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32(&bytes[16 + 4 * i]);
        std::memcpy(&values[i], &bits, 4);
    }
    return FloatRaster(int(h.a), int(h.b), int(h.c), std::move(values));
}

void write_gsr(const FloatRaster& raster, const fs::path& path) {
    std::vector<unsigned char> bytes{'G', 'S', 'R', '1'};
    bytes.reserve(16 + 4 * raster.element_count());
    put_u32(bytes, std::uint32_t(raster.width()));
    put_u32(bytes, std::uint32_t(raster.height()));
    put_u32(bytes, std::uint32_t(raster.channels()));
    for (float v : raster.data()) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, &v, 4);
        put_u32(bytes, bits);
    }
    spill(bytes, path);
}

ProbabilityGrid read_probability(const fs::path& path) {
    FloatRaster raw = read_gsr(path);
    ProbabilityGrid grid(raw.width(), raw.height(), raw.channels(),
                         std::vector<float>(raw.values()));
    validate_probability(grid);
    return grid;
}

void write_gsr(const ProbabilityGrid& grid, const fs::path& path) {
    write_gsr(FloatRaster(grid.width(), grid.height(), grid.channels(), std::vector<float>(grid.values())),
              path);
}

AnyRaster read_raster(const fs::path& path, RasterKind kind) {
    switch (kind) {
        case RasterKind::label: return read_label_png(path);
        case RasterKind::boundary: return read_boundary_png(path);
        case RasterKind::gray: return read_gray_png(path);
        case RasterKind::probability: return read_probability(path);
        case RasterKind::weight: return read_gsr(path);
    }
    throw FormatError("unknown raster kind");
}

void write_raster(const AnyRaster& raster, const fs::path& path) {
    std::visit(
        [&](const auto& r) {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, ProbabilityGrid> || std::is_same_v<R, FloatRaster>)
                write_gsr(r, path);
            else
                write_png(r, path);
        },
        raster);
}

LabelVolume read_volume(const fs::path& path) {
    const auto bytes = slurp(path);
    const auto h = parse_dense_header(bytes, "GLV1", path);
    const std::uint64_t count = std::uint64_t(h.a) * h.b * h.c;
    if (bytes.size() != 16 + 4 * count) throw FormatError(path.string() + ": truncated volume");
    LabelVolume volume(int(h.a), int(h.b), int(h.c));
    for (std::uint64_t i = 0; i < count; ++i) volume[i] = get_u32(&bytes[16 + 4 * i]);
    return volume;
}

void write_volume(const LabelVolume& volume, const fs::path& path) {
    std::vector<unsigned char> bytes{'G', 'L', 'V', '1'};
    bytes.reserve(16 + 4 * volume.size());
    put_u32(bytes, std::uint32_t(volume.width()));
    put_u32(bytes, std::uint32_t(volume.height()));
    put_u32(bytes, std::uint32_t(volume.depth()));
    for (auto v : volume.data()) put_u32(bytes, v);
    spill(bytes, path);
}

}  // namespace grainstack
