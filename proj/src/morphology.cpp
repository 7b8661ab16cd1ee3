#include "grainstack/morphology.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace grainstack {

Connectivity parse_connectivity(int n) {
    if (n == 4) return Connectivity::four;
    if (n == 8) return Connectivity::eight;
    throw ParameterError("connectivity must be 4 or 8, got " + std::to_string(n));
}

namespace {

constexpr std::array<int, 8> kDx8 = {-1, 0, 1, 1, 1, 0, -1, -1};
constexpr std::array<int, 8> kDy8 = {-1, -1, -1, 0, 1, 1, 1, 0};
constexpr std::array<int, 4> kDx4 = {0, 1, 0, -1};
constexpr std::array<int, 4> kDy4 = {-1, 0, 1, 0};
// North, south, east, west.
constexpr std::array<int, 4> kBorderDx = {0, 0, 1, -1};
constexpr std::array<int, 4> kBorderDy = {-1, 1, 0, 0};

template <class Same>
LabelGrid flood_label(int width, int height, Connectivity connectivity, Same&& same,
                      const std::vector<bool>& eligible) {
    LabelGrid out(width, height);
    std::vector<int> queue;
    queue.reserve(std::size_t(width) * std::size_t(height));
    std::uint32_t next = 0;
    const int n = connectivity == Connectivity::four ? 4 : 8;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const std::size_t i = std::size_t(y) * width + x;
            if (!eligible[i] || out[i] != 0) continue;
            if (++next > 0xFFFF) throw ValidationError("more than 65535 components in one slice");
            out[i] = static_cast<std::uint16_t>(next);
            queue.clear();
            queue.push_back(int(i));
            for (std::size_t head = 0; head < queue.size(); ++head) {
                const int cx = queue[head] % width;
                const int cy = queue[head] / width;
                for (int k = 0; k < n; ++k) {
                    const int nx = cx + (n == 4 ? kDx4[k] : kDx8[k]);
                    const int ny = cy + (n == 4 ? kDy4[k] : kDy8[k]);
                    if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                    const std::size_t j = std::size_t(ny) * width + nx;
                    if (!eligible[j] || out[j] != 0 || !same(std::size_t(queue[head]), j)) continue;
                    out[j] = static_cast<std::uint16_t>(next);
                    queue.push_back(int(j));
                }
            }
        }
    return out;
}

// Simple-point table indexed by the 8-neighborhood occupancy bits (bit k set
// when neighbor k = (kDx8[k], kDy8[k]) is foreground).
std::array<bool, 256> build_simple_table() {
    std::array<bool, 256> table{};
    for (int mask = 0; mask < 256; ++mask) {
        auto fg = [&](int k) { return (mask >> k) & 1; };
        // 8-connected foreground components among the neighbors.
        std::array<int, 8> comp{};
        comp.fill(-1);
        int fg_count = 0;
        for (int s = 0; s < 8; ++s) {
            if (!fg(s) || comp[s] >= 0) continue;
            std::vector<int> stack{s};
            comp[s] = fg_count;
            while (!stack.empty()) {
                const int a = stack.back();
                stack.pop_back();
                for (int b = 0; b < 8; ++b) {
                    if (!fg(b) || comp[b] >= 0) continue;
                    if (std::abs(kDx8[a] - kDx8[b]) <= 1 && std::abs(kDy8[a] - kDy8[b]) <= 1) {
                        comp[b] = fg_count;
                        stack.push_back(b);
                    }
                }
            }
            ++fg_count;
        }
        // 4-connected background components touching a 4-neighbor of p.
        comp.fill(-1);
        int bg_count = 0;
        for (int s = 1; s < 8; s += 2) {  // odd k are the 4-neighbors
            if (fg(s) || comp[s] >= 0) continue;
            std::vector<int> stack{s};
            comp[s] = bg_count;
            while (!stack.empty()) {
                const int a = stack.back();
                stack.pop_back();
                for (int b = 0; b < 8; ++b) {
                    if (fg(b) || comp[b] >= 0) continue;
                    if (std::abs(kDx8[a] - kDx8[b]) + std::abs(kDy8[a] - kDy8[b]) == 1) {
                        comp[b] = bg_count;
                        stack.push_back(b);
                    }
                }
            }
            ++bg_count;
        }
        table[mask] = fg_count == 1 && bg_count == 1;
    }
    return table;
}

const std::array<bool, 256>& simple_table() {
    static const std::array<bool, 256> table = build_simple_table();
    return table;
}

// Pixels outside the image count as foreground, so no background path can
// open through the border and thinning never detaches a curve from the edge.
int neighborhood_bits(const BoundaryGrid& g, int x, int y) {
    int bits = 0;
    for (int k = 0; k < 8; ++k) {
        const int nx = x + kDx8[k];
        const int ny = y + kDy8[k];
        if (!g.contains(nx, ny) || g(nx, ny)) bits |= 1 << k;
    }
    return bits;
}

bool deletable(const BoundaryGrid& g, int x, int y) {
    const int bits = neighborhood_bits(g, x, y);
    return std::popcount(unsigned(bits)) >= 2 && simple_table()[bits];
}

// One-dimensional lower envelope of parabolas over the finite entries of f.
void envelope_1d(const double* f, int n, std::size_t stride, double* out, std::vector<int>& v,
                 std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    v.resize(std::size_t(n));
    z.resize(std::size_t(n) + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        const double fq = f[std::size_t(q) * stride];
        if (fq == inf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        auto intersect = [&](int p) {
            const double fp = f[std::size_t(p) * stride];
            return ((fq + double(q) * q) - (fp + double(p) * p)) / (2.0 * (q - p));
        };
        double s = intersect(v[std::size_t(k)]);
        while (s <= z[std::size_t(k)]) {  // z[0] = -inf stops the walk
            --k;
            s = intersect(v[std::size_t(k)]);
        }
        ++k;
        v[std::size_t(k)] = q;
        z[std::size_t(k)] = s;
        z[std::size_t(k) + 1] = inf;
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) out[std::size_t(q) * stride] = inf;
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[std::size_t(j) + 1] < q) ++j;
        const int p = v[std::size_t(j)];
        const double dq = double(q - p);
        out[std::size_t(q) * stride] = dq * dq + f[std::size_t(p) * stride];
    }
}

bool is_block(const BoundaryGrid& g, int x, int y) {
    return g.contains(x, y) && g.contains(x + 1, y + 1) && g(x, y) && g(x + 1, y) && g(x, y + 1) && g(x + 1, y + 1);
}

// Blocks that share a pixel with the 4x4 window around the block at (x0, y0).
int blocks_near(const BoundaryGrid& g, int x0, int y0) {
    int n = 0;
    for (int y = y0 - 2; y <= y0 + 2; ++y)
        for (int x = x0 - 2; x <= x0 + 2; ++x) n += is_block(g, x, y);
    return n;
}

// True when every interior region of `before` maps one-to-one onto a region
// of `after` over the pixels that are interior in both.
bool same_regions(const LabelGrid& before, const LabelGrid& after) {
    std::uint16_t nb = 0, na = 0;
    for (std::size_t i = 0; i < before.pixel_count(); ++i) {
        nb = std::max(nb, before[i]);
        na = std::max(na, after[i]);
    }
    if (na != nb) return false;
    std::vector<std::uint16_t> fwd(std::size_t(nb) + 1, 0), bwd(std::size_t(na) + 1, 0);
    for (std::size_t i = 0; i < before.pixel_count(); ++i) {
        const auto b = before[i], a = after[i];
        if (!a || !b) continue;
        if (!fwd[b]) fwd[b] = a;
        if (!bwd[a]) bwd[a] = b;
        if (fwd[b] != a || bwd[a] != b) return false;
    }
    return true;
}

// Replaces the 2x2 block at (x, y) by a one-pixel-wide crossing: deletes one
// or two block pixels and adds as many pixels from the ring around the block,
// keeping the first variant that removes this block, lowers the number of
// blocks nearby and leaves every interior region intact. Returns false if no variant qualifies.
bool rewrite_crossing(BoundaryGrid& g, int x, int y) {
    using Pixel = std::pair<int, int>;
    const std::array<Pixel, 4> block = {Pixel{x, y}, Pixel{x + 1, y + 1}, Pixel{x + 1, y}, Pixel{x, y + 1}};
    std::vector<Pixel> ring;
    for (int ry = y - 1; ry <= y + 2; ++ry)
        for (int rx = x - 1; rx <= x + 2; ++rx) {
            const bool inner = rx >= x && rx <= x + 1 && ry >= y && ry <= y + 1;
            if (!inner && g.contains(rx, ry) && !g(rx, ry)) ring.emplace_back(rx, ry);
        }
    const LabelGrid before = connected_components(g);
    const int near = blocks_near(g, x, y);
    auto attempt = [&](std::initializer_list<Pixel> del, std::initializer_list<Pixel> add) {
        for (auto [px, py] : del) g(px, py) = 0;
        for (auto [px, py] : add) g(px, py) = 1;
        if (!is_block(g, x, y) && blocks_near(g, x, y) < near && same_regions(before, connected_components(g))) return true;
        for (auto [px, py] : add) g(px, py) = 0;
        for (auto [px, py] : del) g(px, py) = 1;
        return false;
    };
    for (const auto& d : block)
        for (const auto& a : ring)
            if (attempt({d}, {a})) return true;
    for (int diag = 0; diag < 2; ++diag)
        for (std::size_t i = 0; i < ring.size(); ++i)
            for (std::size_t j = i + 1; j < ring.size(); ++j)
                if (attempt({block[std::size_t(2 * diag)], block[std::size_t(2 * diag + 1)]}, {ring[i], ring[j]}))
                    return true;
    return false;
}

}  // namespace

LabelGrid connected_components(const BoundaryGrid& boundary, Connectivity connectivity) {
    std::vector<bool> eligible(boundary.pixel_count());
    for (std::size_t i = 0; i < eligible.size(); ++i) eligible[i] = boundary[i] == 0;
    return flood_label(boundary.width(), boundary.height(), connectivity,
                       [](std::size_t, std::size_t) { return true; }, eligible);
}

LabelGrid label_regions(const LabelGrid& labels, Connectivity connectivity) {
    std::vector<bool> eligible(labels.pixel_count());
    for (std::size_t i = 0; i < eligible.size(); ++i) eligible[i] = labels[i] != 0;
    return flood_label(labels.width(), labels.height(), connectivity,
                       [&](std::size_t a, std::size_t b) { return labels[a] == labels[b]; }, eligible);
}

BoundaryGrid labels_to_boundary(const LabelGrid& labels, Connectivity neighborhood) {
    BoundaryGrid out(labels.width(), labels.height());
    const bool eight = neighborhood == Connectivity::eight;
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) {
            const auto id = labels(x, y);
            bool edge = id == 0;
            for (int k = 0; k < 8 && !edge; ++k) {
                if (!eight && (k % 2 == 0)) continue;  // even k are diagonals
                const int nx = x + kDx8[k];
                const int ny = y + kDy8[k];
                if (labels.contains(nx, ny) && labels(nx, ny) != id) edge = true;
            }
            out(x, y) = edge ? 1 : 0;
        }
    return out;
}

Raster<double> squared_distance_transform(const BoundaryGrid& boundary) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const int w = boundary.width();
    const int h = boundary.height();
    Raster<double> f(w, h);
    for (std::size_t i = 0; i < f.pixel_count(); ++i) f[i] = boundary[i] ? 0.0 : inf;

    Raster<double> cols(w, h);
    std::vector<int> v;
    std::vector<double> z;
    for (int x = 0; x < w; ++x)
        envelope_1d(f.data().data() + x, h, std::size_t(w), cols.data().data() + x, v, z);
    Raster<double> out(w, h);
    for (int y = 0; y < h; ++y)
        envelope_1d(cols.data().data() + std::size_t(y) * w, w, 1,
                    out.data().data() + std::size_t(y) * w, v, z);
    return out;
}

DistanceField distance_transform(const BoundaryGrid& boundary) {
    bool any = false;
    for (auto v : boundary.data()) any |= v != 0;
    if (!any) throw ValidationError("distance transform needs at least one boundary pixel");
    const Raster<double> sq = squared_distance_transform(boundary);
    DistanceField out(boundary.width(), boundary.height());
    for (std::size_t i = 0; i < out.pixel_count(); ++i) out[i] = std::sqrt(sq[i]);
    return out;
}

BoundaryGrid dilate(const BoundaryGrid& boundary, double radius) {
    if (!(radius >= 0.0)) throw ParameterError("dilation radius must be >= 0");
    const int r = int(std::floor(radius));
    const double r2 = radius * radius;
    std::vector<std::pair<int, int>> disc;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (double(dx * dx + dy * dy) <= r2) disc.emplace_back(dx, dy);

    BoundaryGrid out(boundary.width(), boundary.height());
    for (int y = 0; y < boundary.height(); ++y)
        for (int x = 0; x < boundary.width(); ++x) {
            if (!boundary(x, y)) continue;
            for (auto [dx, dy] : disc)
                if (out.contains(x + dx, y + dy)) out(x + dx, y + dy) = 1;
        }
    return out;
}

bool is_simple_point(const BoundaryGrid& grid, int x, int y) {
    return simple_table()[neighborhood_bits(grid, x, y)];
}

std::size_t count_square_blocks(const BoundaryGrid& g) {
    std::size_t n = 0;
    for (int y = 0; y + 1 < g.height(); ++y)
        for (int x = 0; x + 1 < g.width(); ++x)
            n += g(x, y) && g(x + 1, y) && g(x, y + 1) && g(x + 1, y + 1);
    return n;
}

BoundaryGrid skeletonize(const BoundaryGrid& boundary) {
    validate_boundary(boundary);
    BoundaryGrid g = boundary;
    std::vector<std::pair<int, int>> candidates;

    // Directional sub-iterations (north, south, east, west border points).
    // Candidates come from the state at the start of the sub-iteration and are
    // re-checked against the current state before each deletion.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int dir = 0; dir < 4; ++dir) {
            const int dx = kBorderDx[dir];
            const int dy = kBorderDy[dir];
            candidates.clear();
            for (int y = 0; y < g.height(); ++y)
                for (int x = 0; x < g.width(); ++x) {
                    if (!g(x, y)) continue;
                    const bool border = !g.contains(x + dx, y + dy) || !g(x + dx, y + dy);
                    if (border && deletable(g, x, y)) candidates.emplace_back(x, y);
                }
            for (auto [x, y] : candidates)
                if (deletable(g, x, y)) {
                    g(x, y) = 0;
                    changed = true;
                }
        }
    }

    // Break remaining 2x2 blocks where one of the four pixels is simple.
    bool broke = true;
    while (broke) {
        broke = false;
        for (int y = 0; y + 1 < g.height(); ++y)
            for (int x = 0; x + 1 < g.width(); ++x) {
                if (!(g(x, y) && g(x + 1, y) && g(x, y + 1) && g(x + 1, y + 1))) continue;
                const std::array<std::pair<int, int>, 4> quad = {
                    std::pair{x, y}, std::pair{x + 1, y}, std::pair{x, y + 1}, std::pair{x + 1, y + 1}};
                for (auto [qx, qy] : quad)
                    if (is_simple_point(g, qx, qy)) {
                        g(qx, qy) = 0;
                        broke = true;
                        break;
                    }
            }
    }

    // What is left are crossings of four grains on an even grid, where no
    // pixel of the block is simple. Redraw them locally.
    for (bool redrawn = true; redrawn;) {
        redrawn = false;
        for (int y = 0; y + 1 < g.height(); ++y)
            for (int x = 0; x + 1 < g.width(); ++x)
                if (is_block(g, x, y)) redrawn |= rewrite_crossing(g, x, y);
    }
    return g;
}

}  // namespace grainstack
