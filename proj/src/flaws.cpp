#include "grainstack/flaws.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "grainstack/rng.hpp"

namespace grainstack {

namespace {

constexpr std::uint64_t kBlurStream = 0x3001;
constexpr std::uint64_t kScratchStream = 0x3002;
constexpr std::uint64_t kNoiseStream = 0x3003;

std::uint8_t clamp_gray(double v) { return std::uint8_t(std::clamp(std::lround(v), 0l, 255l)); }

// Mean of the non-boundary pixels around (x, y) in the original render.
double local_interior_gray(const GrayImage& gray, const BoundaryGrid& boundary, int x, int y) {
    double sum = 0.0;
    int n = 0;
    for (int r = 1; r <= 3 && n == 0; ++r)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (!gray.contains(nx, ny) || boundary(nx, ny)) continue;
                sum += gray(nx, ny);
                ++n;
            }
    return n ? sum / n : 200.0;
}

void apply_blur(FlawedSlice& out, const GrayImage& gray, const BoundaryGrid& boundary, const FlawConfig& c,
                int slice_index) {
    if (c.blur_segments_per_slice == 0 || c.blur_length == 0) return;
    std::vector<std::pair<int, int>> ink;
    for (int y = 0; y < boundary.height(); ++y)
        for (int x = 0; x < boundary.width(); ++x)
            if (boundary(x, y)) ink.emplace_back(x, y);
    if (ink.empty()) return;

    const std::uint64_t block = std::uint64_t(slice_index / c.blur_persistence);
    SplitRng rng(c.seed, kBlurStream + (block << 16));
    std::vector<int> visited(boundary.pixel_count(), -1);
    std::vector<std::pair<int, int>> queue;
    for (int seg = 0; seg < c.blur_segments_per_slice; ++seg) {
        // Anchor: a random point snapped to the nearest boundary pixel.
        const int ax = int(rng.below(std::uint64_t(boundary.width())));
        const int ay = int(rng.below(std::uint64_t(boundary.height())));
        auto best = ink.front();
        long best_d = -1;
        for (auto [x, y] : ink) {
            const long d = long(x - ax) * (x - ax) + long(y - ay) * (y - ay);
            if (best_d < 0 || d < best_d) {
                best_d = d;
                best = {x, y};
            }
        }
        // Arc: the first blur_length boundary pixels reached from the anchor.
        queue.assign(1, best);
        visited[boundary.index(best.first, best.second)] = seg;
        std::size_t taken = 0;
        for (std::size_t head = 0; head < queue.size() && taken < std::size_t(c.blur_length); ++head, ++taken) {
            const auto [x, y] = queue[head];
            const double target = local_interior_gray(gray, boundary, x, y);
            out.gray(x, y) = clamp_gray(gray(x, y) + c.blur_fade * (target - gray(x, y)));
            out.annotation(x, y) = std::uint8_t(FlawType::blur);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (!boundary.contains(nx, ny) || !boundary(nx, ny)) continue;
                    int& v = visited[boundary.index(nx, ny)];
                    if (v == seg) continue;
                    v = seg;
                    queue.emplace_back(nx, ny);
                }
        }
    }
}

void apply_scratches(FlawedSlice& out, const FlawConfig& c, int slice_index) {
    const int w = out.gray.width(), h = out.gray.height();
    if (w == 0 || h == 0) return;
    const double short_side = std::min(w, h);
    for (int k = 0; k < c.scratch_count; ++k) {
        SplitRng rng(c.seed, kScratchStream + (std::uint64_t(slice_index) << 16) + std::uint64_t(k));
        const double cx = rng.uniform() * w;
        const double cy = rng.uniform() * h;
        const double angle = rng.uniform() * std::numbers::pi;
        const double len = std::max(2.0, short_side * (0.25 + 0.25 * rng.uniform()));
        int x0 = int(std::lround(cx - 0.5 * len * std::cos(angle)));
        int y0 = int(std::lround(cy - 0.5 * len * std::sin(angle)));
        const int x1 = int(std::lround(cx + 0.5 * len * std::cos(angle)));
        const int y1 = int(std::lround(cy + 0.5 * len * std::sin(angle)));
        // Bresenham.
        const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            if (out.gray.contains(x0, y0)) {
                out.gray(x0, y0) = clamp_gray(double(out.gray(x0, y0)) - c.scratch_intensity);
                out.annotation(x0, y0) = std::uint8_t(FlawType::scratch);
            }
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }
}

void apply_noise(FlawedSlice& out, const FlawConfig& c, int slice_index) {
    if (c.noise_density <= 0.0) return;
    SplitRng rng(c.seed, kNoiseStream + (std::uint64_t(slice_index) << 16));
    for (std::size_t i = 0; i < out.gray.pixel_count(); ++i) {
        if (!(rng.uniform() < c.noise_density)) continue;
        if (rng.next() & 1) {
            out.gray[i] = (rng.next() & 1) ? 255 : 0;  // salt or pepper
        } else {
            out.gray[i] = clamp_gray(out.gray[i] + 20.0 * rng.normal());  // speckle
        }
        out.annotation[i] = std::uint8_t(FlawType::noise);
    }
}

}  // namespace

void FlawConfig::validate() const {
    if (blur_segments_per_slice < 0 || blur_length < 0 || scratch_count < 0 || scratch_intensity < 0)
        throw ParameterError("flaw counts must be >= 0");
    if (!(noise_density >= 0.0 && noise_density <= 1.0)) throw ParameterError("noise density must be in [0, 1]");
    if (!(blur_fade >= 0.0 && blur_fade <= 1.0)) throw ParameterError("blur fade must be in [0, 1]");
    if (blur_persistence < 1) throw ParameterError("blur persistence must be >= 1");
}

bool FlawConfig::any() const {
    return (blur_segments_per_slice > 0 && blur_length > 0) || noise_density > 0.0 || scratch_count > 0;
}

nlohmann::json to_json(const FlawConfig& c) {
    return {{"blur_segments_per_slice", c.blur_segments_per_slice},
            {"blur_length", c.blur_length},
            {"blur_fade", c.blur_fade},
            {"blur_persistence", c.blur_persistence},
            {"noise_density", c.noise_density},
            {"scratch_count", c.scratch_count},
            {"scratch_intensity", c.scratch_intensity},
            {"seed", c.seed}};
}

FlawedSlice inject_flaws(const GrayImage& gray, const BoundaryGrid& boundary, const FlawConfig& config,
                         int slice_index) {
    config.validate();
    if (gray.width() != boundary.width() || gray.height() != boundary.height())
        throw ConsistencyError("gray render and boundary grid differ in shape");
    FlawedSlice out{gray, GrayImage(gray.width(), gray.height())};
    apply_blur(out, gray, boundary, config, slice_index);
    apply_scratches(out, config, slice_index);
    apply_noise(out, config, slice_index);
    return out;
}

}  // namespace grainstack
