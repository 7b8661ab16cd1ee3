#pragma once

#include <cstdint>

#include <json.hpp>

#include "grainstack/raster.hpp"

namespace grainstack {

// Codes written to the flaw annotation map.
enum class FlawType : std::uint8_t { none = 0, blur = 1, noise = 2, scratch = 3 };

struct FlawConfig {
    int blur_segments_per_slice = 0;
    int blur_length = 0;        // boundary pixels per arc
    double blur_fade = 1.0;     // 1 erases the arc, values in (0, 1) only fade it
    int blur_persistence = 1;   // consecutive slices sharing arc anchor points
    double noise_density = 0.0; // fraction of pixels hit by salt/pepper or speckle
    int scratch_count = 0;
    int scratch_intensity = 0;  // gray levels subtracted along a scratch
    std::uint64_t seed = 0;

    // Throws ParameterError on negative counts, noise_density outside [0, 1],
    // blur_fade outside [0, 1] or blur_persistence < 1.
    void validate() const;
    bool any() const;
};

nlohmann::json to_json(const FlawConfig& config);

struct FlawedSlice {
    GrayImage gray;
    GrayImage annotation;  // FlawType per pixel; later flaws overwrite earlier ones
};

// Degrades a rendered slice. Applied in order: blurred/missing boundary arcs
// (faded toward the local interior gray), straight dark scratches, then noise.
// Arc anchors are drawn per block of `blur_persistence` slices, so the same
// boundary yields the same arcs across that block. Inputs are not modified.
FlawedSlice inject_flaws(const GrayImage& gray, const BoundaryGrid& boundary, const FlawConfig& config,
                         int slice_index);

}  // namespace grainstack
