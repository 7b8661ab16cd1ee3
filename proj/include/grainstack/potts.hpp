#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "grainstack/raster.hpp"

namespace grainstack {

enum class Neighborhood3D { six = 6, twenty_six = 26 };

struct PottsConfig {
    int width = 64;
    int height = 64;
    int depth = 64;
    int q = 64;
    double temperature = 0.0;  // kT, dimensionless
    int steps = 100;           // Monte Carlo sweeps
    std::uint64_t seed = 1;
    Neighborhood3D neighborhood = Neighborhood3D::twenty_six;

    // Throws ParameterError on q < 2 (or > 65535), steps < 0, temperature < 0
    // or a non-positive dimension.
    void validate() const;

    // 400 slices of 400 x 400, isotropic, sectioned along z.
    static PottsConfig paper_preset();
};

nlohmann::json to_json(const PottsConfig& config);

using SpinVolume = Volume<std::uint16_t>;

struct PottsTrace {
    std::vector<std::int64_t> energy;    // [0] initial state, [s] after sweep s
    std::vector<std::size_t> distinct;   // distinct spin values present
};

struct PottsOptions {
    int threads = 1;
    bool record_trace = true;
    // Called with the initial state (sweep 0) and after every sweep.
    std::function<void(int sweep, const SpinVolume&)> observer;
};

struct PottsResult {
    SpinVolume spins;
    PottsTrace trace;
    std::uint64_t accepted_flips = 0;
};

// Metropolis Potts grain growth with free (non-periodic) faces.
//
// Start: every voxel draws a uniform spin in [1, q]. Sweep: the eight parity
// sublattices (x%2, y%2, z%2) are visited in a seeded random order; inside a
// sublattice no two voxels are neighbors, so their updates commute and may run
// on any number of threads. Each voxel proposes the spin of a uniformly chosen
// neighbor and accepts with probability min(1, exp(-dE/kT)); at kT = 0 it
// accepts iff dE <= 0. E counts unlike neighbor pairs. Every random draw is
// keyed by (seed, sweep, voxel), so output depends on the seed only.
PottsResult potts_grow(const PottsConfig& config, const PottsOptions& options = {});

// Number of unlike neighbor pairs.
std::int64_t boundary_energy(const SpinVolume& spins, Neighborhood3D neighborhood);

std::size_t distinct_spins(const SpinVolume& spins);

// Face-connected (6-neighbor) same-spin components, ids 1.. in scan order.
LabelVolume label_grains_3d(const SpinVolume& spins);

struct RenderedSlice {
    LabelGrid labels;       // the z-section of the spin field
    BoundaryGrid boundary;  // single-pixel closed boundaries between spins
};

RenderedSlice render_slice(const SpinVolume& spins, int z);
std::vector<RenderedSlice> render_slices(const SpinVolume& spins, int threads = 1);

// Synthetic micrograph: interior gray 200 with a per-grain offset in
// [-10, 10] keyed by label id, boundary gray 40.
GrayImage render_gray(const LabelGrid& labels, const BoundaryGrid& boundary, std::uint64_t seed);

}  // namespace grainstack
