#include "grainstack/potts.hpp"

#include <array>
#include <cmath>
#include <numeric>

#include "grainstack/morphology.hpp"
#include "grainstack/parallel.hpp"
#include "grainstack/rng.hpp"

namespace grainstack {

namespace {

constexpr std::uint64_t kInitStream = 0x1001;
constexpr std::uint64_t kOrderStream = 0x1002;
constexpr std::uint64_t kSweepStreamBase = 0x100000;
constexpr std::uint64_t kGrayStream = 0x2001;

struct Offset {
    int dx, dy, dz;
};

std::vector<Offset> neighbor_offsets(Neighborhood3D nb) {
    std::vector<Offset> out;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                if (nb == Neighborhood3D::six && std::abs(dx) + std::abs(dy) + std::abs(dz) != 1) continue;
                out.push_back({dx, dy, dz});
            }
    return out;
}

// The half of the offsets that come after (0,0,0) in scan order; each unlike
// pair is then counted once.
std::vector<Offset> forward_offsets(Neighborhood3D nb) {
    std::vector<Offset> out;
    for (const auto& o : neighbor_offsets(nb))
        if (o.dz > 0 || (o.dz == 0 && (o.dy > 0 || (o.dy == 0 && o.dx > 0)))) out.push_back(o);
    return out;
}

class Sweeper {
public:
    Sweeper(const PottsConfig& config, SpinVolume& spins)
        : config_(config), spins_(spins), offsets_(neighbor_offsets(config.neighborhood)) {
        const std::ptrdiff_t w = config.width;
        const std::ptrdiff_t plane = std::ptrdiff_t(config.width) * config.height;
        for (const auto& o : offsets_) linear_.push_back(o.dz * plane + o.dy * w + o.dx);
    }

    // Updates every voxel of parity class `color` in plane z. Returns the
    // number of accepted spin changes.
    std::uint64_t update_plane(int color, int z, std::uint64_t sweep) {
        const int px = color & 1, py = (color >> 1) & 1;
        const std::uint64_t stream = kSweepStreamBase + sweep;
        std::uint64_t accepted = 0;
        std::array<std::size_t, 26> nbr{};
        for (int y = py; y < config_.height; y += 2)
            for (int x = px; x < config_.width; x += 2) {
                const std::size_t idx = spins_.index(x, y, z);
                const int count = gather(x, y, z, idx, nbr);
                if (count == 0) continue;
                const std::uint64_t r = keyed_draw(config_.seed, stream, idx);
                const std::uint16_t old_spin = spins_[idx];
                const std::uint16_t new_spin = spins_[nbr[bounded(r, std::uint32_t(count))]];
                if (new_spin == old_spin) continue;
                int same_old = 0, same_new = 0;
                for (int k = 0; k < count; ++k) {
                    const auto s = spins_[nbr[k]];
                    same_old += s == old_spin;
                    same_new += s == new_spin;
                }
                const int delta = same_old - same_new;
                bool accept = delta <= 0;
                if (!accept && config_.temperature > 0.0) {
                    const double u = double(r & 0xFFFFFFFFull) * 0x1.0p-32;
                    accept = u < std::exp(-double(delta) / config_.temperature);
                }
                if (accept) {
                    spins_[idx] = new_spin;
                    ++accepted;
                }
            }
        return accepted;
    }

private:
    int gather(int x, int y, int z, std::size_t idx, std::array<std::size_t, 26>& nbr) const {
        const bool interior = x > 0 && y > 0 && z > 0 && x + 1 < config_.width && y + 1 < config_.height &&
                              z + 1 < config_.depth;
        int count = 0;
        if (interior) {
            for (auto off : linear_) nbr[count++] = std::size_t(std::ptrdiff_t(idx) + off);
            return count;
        }
        for (std::size_t k = 0; k < offsets_.size(); ++k) {
            const int nx = x + offsets_[k].dx, ny = y + offsets_[k].dy, nz = z + offsets_[k].dz;
            if (nx < 0 || ny < 0 || nz < 0 || nx >= config_.width || ny >= config_.height || nz >= config_.depth)
                continue;
            nbr[count++] = std::size_t(std::ptrdiff_t(idx) + linear_[k]);
        }
        return count;
    }

    const PottsConfig& config_;
    SpinVolume& spins_;
    std::vector<Offset> offsets_;
    std::vector<std::ptrdiff_t> linear_;
};

}  // namespace

void PottsConfig::validate() const {
    if (width < 1 || height < 1 || depth < 1) throw ParameterError("Potts dimensions must be >= 1");
    if (q < 2) throw ParameterError("Potts q must be >= 2, got " + std::to_string(q));
    if (q > 65535) throw ParameterError("Potts q must fit in 16 bits");
    if (steps < 0) throw ParameterError("Potts steps must be >= 0");
    if (!(temperature >= 0.0)) throw ParameterError("Potts temperature must be >= 0");
}

PottsConfig PottsConfig::paper_preset() {
    PottsConfig c;
    c.width = 400;
    c.height = 400;
    c.depth = 400;
    c.q = 64;
    c.temperature = 0.0;
    c.steps = 100;
    c.neighborhood = Neighborhood3D::twenty_six;
    return c;
}

nlohmann::json to_json(const PottsConfig& c) {
    return {{"width", c.width},
            {"height", c.height},
            {"depth", c.depth},
            {"q", c.q},
            {"temperature", c.temperature},
            {"steps", c.steps},
            {"seed", c.seed},
            {"neighborhood", int(c.neighborhood)}};
}

std::int64_t boundary_energy(const SpinVolume& spins, Neighborhood3D neighborhood) {
    const auto fwd = forward_offsets(neighborhood);
    std::int64_t e = 0;
    for (int z = 0; z < spins.depth(); ++z)
        for (int y = 0; y < spins.height(); ++y)
            for (int x = 0; x < spins.width(); ++x) {
                const auto s = spins(x, y, z);
                for (const auto& o : fwd) {
                    const int nx = x + o.dx, ny = y + o.dy, nz = z + o.dz;
                    if (nx < 0 || ny < 0 || nx >= spins.width() || ny >= spins.height() || nz >= spins.depth())
                        continue;
                    e += spins(nx, ny, nz) != s;
                }
            }
    return e;
}

std::size_t distinct_spins(const SpinVolume& spins) {
    std::vector<bool> seen(65536, false);
    std::size_t n = 0;
    for (auto s : spins.data())
        if (!seen[s]) {
            seen[s] = true;
            ++n;
        }
    return n;
}

PottsResult potts_grow(const PottsConfig& config, const PottsOptions& options) {
    config.validate();
    PottsResult result;
    result.spins = SpinVolume(config.width, config.height, config.depth);
    SpinVolume& spins = result.spins;
    for (std::size_t i = 0; i < spins.size(); ++i)
        spins[i] = std::uint16_t(1 + bounded(keyed_draw(config.seed, kInitStream, i), std::uint32_t(config.q)));

    auto record = [&](int sweep) {
        if (options.record_trace) {
            result.trace.energy.push_back(boundary_energy(spins, config.neighborhood));
            result.trace.distinct.push_back(distinct_spins(spins));
        }
        if (options.observer) options.observer(sweep, spins);
    };
    record(0);

    Sweeper sweeper(config, spins);
    const int threads = std::max(1, options.threads);
    for (int sweep = 0; sweep < config.steps; ++sweep) {
        std::array<int, 8> order{};
        std::iota(order.begin(), order.end(), 0);
        SplitRng shuffle(config.seed, kOrderStream + (std::uint64_t(sweep) << 8));
        for (int i = 7; i > 0; --i) std::swap(order[i], order[shuffle.below(std::uint64_t(i) + 1)]);

        for (int color : order) {
            const int pz = (color >> 2) & 1;
            const std::size_t planes = std::size_t((config.depth - pz + 1) / 2);
            std::vector<std::uint64_t> accepted(planes, 0);
            parallel_for(0, planes, threads, [&](std::size_t k) {
                accepted[k] = sweeper.update_plane(color, pz + 2 * int(k), std::uint64_t(sweep));
            });
            for (auto a : accepted) result.accepted_flips += a;
        }
        record(sweep + 1);
    }
    return result;
}

LabelVolume label_grains_3d(const SpinVolume& spins) {
    LabelVolume out(spins.width(), spins.height(), spins.depth());
    static constexpr std::array<Offset, 6> faces = {
        Offset{1, 0, 0}, Offset{-1, 0, 0}, Offset{0, 1, 0}, Offset{0, -1, 0}, Offset{0, 0, 1}, Offset{0, 0, -1}};
    std::uint32_t next = 0;
    std::vector<std::array<int, 3>> stack;
    for (int z = 0; z < spins.depth(); ++z)
        for (int y = 0; y < spins.height(); ++y)
            for (int x = 0; x < spins.width(); ++x) {
                if (out(x, y, z) != 0) continue;
                const auto s = spins(x, y, z);
                out(x, y, z) = ++next;
                stack.assign(1, {x, y, z});
                while (!stack.empty()) {
                    const auto [cx, cy, cz] = stack.back();
                    stack.pop_back();
                    for (const auto& f : faces) {
                        const int nx = cx + f.dx, ny = cy + f.dy, nz = cz + f.dz;
                        if (nx < 0 || ny < 0 || nz < 0 || nx >= spins.width() || ny >= spins.height() ||
                            nz >= spins.depth())
                            continue;
                        if (out(nx, ny, nz) != 0 || spins(nx, ny, nz) != s) continue;
                        out(nx, ny, nz) = next;
                        stack.push_back({nx, ny, nz});
                    }
                }
            }
    return out;
}

RenderedSlice render_slice(const SpinVolume& spins, int z) {
    RenderedSlice r;
    r.labels = slice_as_labels(spins, z);
    r.boundary = skeletonize(labels_to_boundary(r.labels));
    return r;
}

std::vector<RenderedSlice> render_slices(const SpinVolume& spins, int threads) {
    std::vector<RenderedSlice> out(std::size_t(spins.depth()));
    parallel_for(0, out.size(), threads, [&](std::size_t z) { out[z] = render_slice(spins, int(z)); });
    return out;
}

GrayImage render_gray(const LabelGrid& labels, const BoundaryGrid& boundary, std::uint64_t seed) {
    if (labels.width() != boundary.width() || labels.height() != boundary.height())
        throw ConsistencyError("label and boundary grids differ in shape");
    GrayImage out(labels.width(), labels.height());
    std::vector<int> jitter(65536, 0);
    for (std::size_t id = 0; id < jitter.size(); ++id)
        jitter[id] = int(bounded(keyed_draw(seed, kGrayStream, id), 21)) - 10;
    for (std::size_t i = 0; i < out.pixel_count(); ++i)
        out[i] = boundary[i] ? 40 : std::uint8_t(200 + jitter[labels[i]]);
    return out;
}

}  // namespace grainstack
