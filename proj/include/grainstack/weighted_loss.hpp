#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string_view>

#include "grainstack/raster.hpp"

namespace grainstack {

enum class ClassBalance { frequency, none };

std::string_view class_balance_name(ClassBalance policy);
ClassBalance parse_class_balance(std::string_view name);

struct WeightParams {
    double w0 = 10.0;
    double gamma = 2.58;
    double dilate_radius = 2.0;
    ClassBalance class_balance = ClassBalance::frequency;

    // Throws ParameterError unless w0 >= 0, gamma > 0, dilate_radius >= 0.
    void validate() const;
    bool operator==(const WeightParams&) const = default;
};

struct GrainScale {
    double max_dis = 0.0;  // largest distance-to-boundary inside the grain
    double sigma = 0.0;    // max_dis / gamma
    bool operator==(const GrainScale&) const = default;
};

// Adaptive boundary weights for one boundary mask.
//
// For every pixel x of grain i (a 4-connected interior component) with
// distance d(x) to the nearest boundary pixel:
//   w_bck(x) = w_c(x) + w0 * exp(-(max_dis_i - d(x))^2 / (2 sigma_i^2))
//   w_obj(x) = w_c(x) + w0 * exp(-d(x)^2 / (2 sigma_i^2))
//   sigma_i  = max_dis_i / gamma
// Boundary pixels (d = 0) borrow the scale of their nearest grain, ties going
// to the smaller grain id. m_d is the mask dilated by params.dilate_radius.
struct WeightField {
    int width = 0;
    int height = 0;
    Raster<double> w_bck;
    Raster<double> w_obj;
    Raster<double> w_c;
    BoundaryGrid m_d;
    WeightParams params;
    std::map<std::uint32_t, GrainScale> per_grain;  // keyed by connected_components id
    LabelGrid grains;                                // grain id per pixel, boundary -> owning grain
};

// Per-pixel class-balance weights. "frequency": N / (2 * count(class(x))),
// "none": 1 everywhere. Throws ValidationError if the mask lacks either class
// under the frequency policy.
Raster<double> class_balance_weights(const BoundaryGrid& mask, ClassBalance policy);

// Throws ValidationError for an empty mask (no boundary pixel) or a mask
// without any interior pixel.
WeightField compute_weight_field(const BoundaryGrid& mask, const WeightParams& params = {});

struct LossResult {
    double loss = 0.0;             // E = -sum_x term(x)
    Raster<double> terms;          // term(x) = w * log p (nonpositive)
    BoundaryGrid object_branch;    // 1 where the w_obj * log p_1 branch fired
    std::size_t clamped = 0;       // selected probabilities raised to the 1e-12 floor
};

inline constexpr double kProbabilityFloor = 1e-12;

// Selective weighted cross-entropy: per pixel the background branch
// w_bck * log p_0 fires when w_bck >= w_obj * m_d, otherwise w_obj * log p_1.
// Summation is row-major so the result is reproducible bit for bit.
LossResult evaluate_loss(const ProbabilityGrid& pred, const WeightField& field);

// Weight-field files: a 3-channel ".gsr" (w_bck, w_obj, m_d) and a JSON
// sidecar {"w0", "gamma", "dilate_radius", "class_balance", "per_grain"}.
void save_weight_field(const WeightField& field, const std::filesystem::path& gsr_path,
                       const std::filesystem::path& sidecar_path);

// Reads the files back. Weights come back at float precision; w_c and grain
// ids are not stored and are left empty.
WeightField load_weight_field(const std::filesystem::path& gsr_path,
                              const std::filesystem::path& sidecar_path);

}  // namespace grainstack
