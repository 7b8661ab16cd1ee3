#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grainstack/errors.hpp"

namespace grainstack {

// Row-major, origin top-left, x to the right, y downward. Multi-channel
// rasters are channel-interleaved: element (x, y, c) lives at
// ((y * width + x) * channels + c).
template <class T, class Tag = void>
class Raster {
public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, int channels = 1, T fill = T{})
        : width_(width), height_(height), channels_(channels) {
        check_shape();
        data_.assign(element_count(), fill);
    }

    Raster(int width, int height, int channels, std::vector<T> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        check_shape();
        if (data_.size() != element_count())
            throw ConsistencyError("raster data length " + std::to_string(data_.size()) +
                                   " does not match " + std::to_string(width_) + "x" +
                                   std::to_string(height_) + "x" + std::to_string(channels_));
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixel_count() const { return std::size_t(width_) * std::size_t(height_); }
    std::size_t element_count() const { return pixel_count() * std::size_t(channels_); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::size_t index(int x, int y, int c = 0) const {
        return (std::size_t(y) * std::size_t(width_) + std::size_t(x)) * std::size_t(channels_) +
               std::size_t(c);
    }

    T& operator()(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    const T& operator()(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    const std::vector<T>& values() const { return data_; }

    template <class OtherTag>
    bool same_shape(const Raster<T, OtherTag>& other) const {
        return width_ == other.width() && height_ == other.height() &&
               channels_ == other.channels();
    }

    bool operator==(const Raster&) const = default;

private:
    void check_shape() const {
        if (width_ < 0 || height_ < 0 || channels_ < 1)
            throw ValidationError("invalid raster shape");
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<T> data_;
};

struct BoundaryTag {};
struct GrayTag {};
struct ProbabilityTag {};
struct DistanceTag {};

// Per-slice grain ids; 0 marks boundary / unassigned.
using LabelGrid = Raster<std::uint16_t>;
// 1 = boundary, 0 = grain interior.
using BoundaryGrid = Raster<std::uint8_t, BoundaryTag>;
// 8-bit grayscale render (boundary dark on light).
using GrayImage = Raster<std::uint8_t, GrayTag>;
// Two interleaved class maps: channel 0 background p_0, channel 1 boundary p_1.
using ProbabilityGrid = Raster<float, ProbabilityTag>;
// Plain float payload of a ".gsr" file.
using FloatRaster = Raster<float>;
// Euclidean distance to the nearest boundary pixel, in pixels.
using DistanceField = Raster<double, DistanceTag>;

// Dense 3D volume indexed (x, y, z), z-major slices of row-major planes.
template <class T>
class Volume {
public:
    Volume() = default;
    Volume(int width, int height, int depth, T fill = T{})
        : width_(width), height_(height), depth_(depth) {
        if (width < 0 || height < 0 || depth < 0) throw ValidationError("invalid volume shape");
        data_.assign(std::size_t(width) * std::size_t(height) * std::size_t(depth), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int depth() const { return depth_; }
    std::size_t slice_size() const { return std::size_t(width_) * std::size_t(height_); }
    std::size_t size() const { return data_.size(); }

    std::size_t index(int x, int y, int z) const {
        return std::size_t(z) * slice_size() + std::size_t(y) * std::size_t(width_) + std::size_t(x);
    }
    T& operator()(int x, int y, int z) { return data_[index(x, y, z)]; }
    const T& operator()(int x, int y, int z) const { return data_[index(x, y, z)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }

    std::span<const T> slice(int z) const {
        return std::span<const T>(data_).subspan(std::size_t(z) * slice_size(), slice_size());
    }
    std::span<T> slice(int z) {
        return std::span<T>(data_).subspan(std::size_t(z) * slice_size(), slice_size());
    }

    bool operator==(const Volume&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int depth_ = 0;
    std::vector<T> data_;
};

// Grain ids after 3D reconstruction can exceed 16 bits.
using LabelVolume = Volume<std::uint32_t>;

// Throws ValidationError unless every value is 0 or 1.
void validate_boundary(const BoundaryGrid& grid);

// Throws ValidationError unless the raster has 2 channels with each pixel's
// probabilities in [0, 1] summing to 1 within 1e-6.
void validate_probability(const ProbabilityGrid& grid);

// Sorted distinct nonzero ids present in the grid.
std::vector<std::uint16_t> label_ids(const LabelGrid& grid);

template <class T>
LabelGrid slice_as_labels(const Volume<T>& volume, int z) {
    auto src = volume.slice(z);
    std::vector<std::uint16_t> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i] > 0xFFFF) throw ValidationError("label does not fit in 16 bits");
        out[i] = static_cast<std::uint16_t>(src[i]);
    }
    return LabelGrid(volume.width(), volume.height(), 1, std::move(out));
}

}  // namespace grainstack
