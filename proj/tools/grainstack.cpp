#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grainstack/errors.hpp"
#include "grainstack/flaws.hpp"
#include "grainstack/manifest.hpp"
#include "grainstack/metrics.hpp"
#include "grainstack/morphology.hpp"
#include "grainstack/parallel.hpp"
#include "grainstack/potts.hpp"
#include "grainstack/raster_io.hpp"
#include "grainstack/tiling.hpp"
#include "grainstack/tracking.hpp"
#include "grainstack/weighted_loss.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace grainstack;

namespace {

int verbosity = 0;

void note(const std::string& msg) {
    if (verbosity > 0) std::cerr << msg << '\n';
}

std::string slice_name(std::size_t z, std::string_view ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "slice_%04zu", z);
    return std::string(buf) + std::string(ext);
}

void write_json(const json& doc, const fs::path& path) {
    std::ofstream out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

json read_json(const fs::path& path) {
    if (!fs::exists(path)) throw ResolutionError("no such file: " + path.string());
    std::ifstream in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// Interior regions of one slice, whatever the manifest stores.
LabelGrid regions_of(const fs::path& path, RasterKind kind, bool thin, Connectivity conn) {
    switch (kind) {
    case RasterKind::label: {
        auto labels = read_label_png(path);
        if (!thin) return label_regions(labels, conn);
        return connected_components(skeletonize(labels_to_boundary(labels)), conn);
    }
    case RasterKind::boundary: {
        auto b = read_boundary_png(path);
        return connected_components(thin ? skeletonize(b) : b, conn);
    }
    case RasterKind::probability: {
        const auto p = read_probability(path);
        BoundaryGrid b(p.width(), p.height());
        for (int y = 0; y < p.height(); ++y)
            for (int x = 0; x < p.width(); ++x) b(x, y) = p(x, y, 1) >= 0.5f ? 1 : 0;
        return connected_components(thin ? skeletonize(b) : b, conn);
    }
    default:
        throw ValidationError(std::string("cannot derive regions from a ") + std::string(kind_name(kind)) +
                              " stack");
    }
}

std::vector<LabelGrid> load_regions(const StackManifest& m, bool thin, Connectivity conn, int threads) {
    std::vector<LabelGrid> out(m.slices.size());
    parallel_for(0, out.size(), threads, [&](std::size_t z) { out[z] = regions_of(m.slices[z], m.kind, thin, conn); });
    return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    PottsConfig potts;
    FlawConfig flaws;
    std::string preset;
    int size = 64;
    int slices = 64;
    int neighborhood = 26;
    bool trace = true;
    fs::path out;
    // Explicit --q / --temperature / --steps win over a preset.
    std::optional<int> q, steps;
    std::optional<double> temperature;
};

void run_simulate(SimulateArgs a, int threads) {
    if (a.preset == "paper-sim") {
        const auto seed = a.potts.seed;
        a.potts = PottsConfig::paper_preset();
        a.potts.seed = seed;
        if (a.q) a.potts.q = *a.q;
        if (a.steps) a.potts.steps = *a.steps;
        if (a.temperature) a.potts.temperature = *a.temperature;
    } else if (!a.preset.empty()) {
        throw ParameterError("unknown preset '" + a.preset + "'");
    } else {
        a.potts.width = a.potts.height = a.size;
        a.potts.depth = a.slices;
        if (a.q) a.potts.q = *a.q;
        if (a.steps) a.potts.steps = *a.steps;
        if (a.temperature) a.potts.temperature = *a.temperature;
        if (a.neighborhood != 6 && a.neighborhood != 26) throw ParameterError("neighborhood must be 6 or 26");
        a.potts.neighborhood = Neighborhood3D(a.neighborhood);
    }
    a.potts.validate();
    a.flaws.seed = a.potts.seed;
    a.flaws.validate();

    fs::create_directories(a.out);
    for (const char* sub : {"labels", "boundaries", "gray"}) fs::create_directories(a.out / sub);
    if (a.flaws.any()) fs::create_directories(a.out / "flaws");

    PottsOptions opts;
    opts.threads = threads;
    opts.record_trace = a.trace;
    if (verbosity > 0)
        opts.observer = [&](int sweep, const SpinVolume&) {
            if (sweep % 10 == 0) note("sweep " + std::to_string(sweep) + "/" + std::to_string(a.potts.steps));
        };
    const auto result = potts_grow(a.potts, opts);

    const std::size_t depth = std::size_t(a.potts.depth);
    StackManifest labels{RasterKind::label, "zyx", 1.0, 1.0, {}};
    StackManifest bounds{RasterKind::boundary, "zyx", 1.0, 1.0, {}};
    StackManifest gray{RasterKind::gray, "zyx", 1.0, 1.0, {}};
    for (std::size_t z = 0; z < depth; ++z) {
        labels.slices.push_back(fs::absolute(a.out / "labels" / slice_name(z, ".png")));
        bounds.slices.push_back(fs::absolute(a.out / "boundaries" / slice_name(z, ".png")));
        gray.slices.push_back(fs::absolute(a.out / "gray" / slice_name(z, ".png")));
    }
    parallel_for(0, depth, threads, [&](std::size_t z) {
        const auto r = render_slice(result.spins, int(z));
        write_png(r.labels, labels.slices[z]);
        write_png(r.boundary, bounds.slices[z]);
        const auto img = render_gray(r.labels, r.boundary, a.potts.seed);
        if (a.flaws.any()) {
            const auto flawed = inject_flaws(img, r.boundary, a.flaws, int(z));
            write_png(flawed.gray, gray.slices[z]);
            write_png(flawed.annotation, a.out / "flaws" / slice_name(z, ".png"));
        } else {
            write_png(img, gray.slices[z]);
        }
    });
    save_manifest(labels, a.out / "labels.json");
    save_manifest(bounds, a.out / "boundaries.json");
    save_manifest(gray, a.out / "gray.json");
    write_volume(label_grains_3d(result.spins), a.out / "grains.glv");

    if (a.trace) {
        std::ofstream csv(a.out / "trace.csv");
        csv << "sweep,energy,distinct\n";
        for (std::size_t s = 0; s < result.trace.energy.size(); ++s)
            csv << s << ',' << result.trace.energy[s] << ',' << result.trace.distinct[s] << '\n';
    }
    write_json({{"command", "simulate"},
                {"preset", a.preset},
                {"potts", to_json(a.potts)},
                {"flaws", to_json(a.flaws)},
                {"trace", a.trace},
                {"threads", threads}},
               a.out / "config.json");
    std::cout << "simulated " << depth << " slices of " << a.potts.width << "x" << a.potts.height << " into "
              << a.out.string() << '\n';
}

// ---------------------------------------------------------------- weights

struct WeightsArgs {
    fs::path masks;
    fs::path out;
    WeightParams params;
    std::string class_balance = "frequency";
};

void run_weights(WeightsArgs a, int threads) {
    a.params.class_balance = parse_class_balance(a.class_balance);
    a.params.validate();
    const auto m = load_manifest(a.masks);
    if (m.kind != RasterKind::boundary && m.kind != RasterKind::label)
        throw ValidationError("weights need a boundary or label manifest");
    fs::create_directories(a.out / "weights");
    StackManifest wm{RasterKind::weight, m.axis_order, m.pixel_size_xy, m.z_spacing, {}};
    for (std::size_t z = 0; z < m.slices.size(); ++z)
        wm.slices.push_back(fs::absolute(a.out / "weights" / slice_name(z, ".gsr")));
    parallel_for(0, m.slices.size(), threads, [&](std::size_t z) {
        const BoundaryGrid mask = m.kind == RasterKind::boundary
                                      ? read_boundary_png(m.slices[z])
                                      : skeletonize(labels_to_boundary(read_label_png(m.slices[z])));
        const auto field = compute_weight_field(mask, a.params);
        save_weight_field(field, wm.slices[z], a.out / "weights" / slice_name(z, ".json"));
    });
    save_manifest(wm, a.out / "weights.json");
    write_json({{"command", "weights"},
                {"masks", a.masks.string()},
                {"w0", a.params.w0},
                {"gamma", a.params.gamma},
                {"dilate_radius", a.params.dilate_radius},
                {"class_balance", class_balance_name(a.params.class_balance)},
                {"threads", threads}},
               a.out / "config.json");
    std::cout << "wrote " << m.slices.size() << " weight fields to " << (a.out / "weights").string() << '\n';
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    fs::path pred;
    fs::path gt;
    fs::path out;
    fs::path csv;
    bool skeletonize = false;
    int connectivity = 4;
};

void run_eval(const EvalArgs& a, int threads) {
    const auto conn = parse_connectivity(a.connectivity);
    const auto pm = load_manifest(a.pred);
    const auto gm = load_manifest(a.gt);
    if (pm.slices.size() != gm.slices.size())
        throw ConsistencyError("prediction has " + std::to_string(pm.slices.size()) + " slices, ground truth " +
                               std::to_string(gm.slices.size()));
    const auto pred = load_regions(pm, a.skeletonize, conn, threads);
    const auto gt = load_regions(gm, false, conn, threads);
    const auto thresholds = default_iou_thresholds();
    std::vector<MetricReport> reports(pred.size());
    parallel_for(0, pred.size(), threads,
                 [&](std::size_t z) { reports[z] = evaluate_slice(pred[z], gt[z], thresholds); });
    const auto mean = average_reports(reports);

    json doc = to_json(mean);
    doc["slices"] = reports.size();
    doc["per_slice"] = json::array();
    for (std::size_t z = 0; z < reports.size(); ++z) {
        auto s = to_json(reports[z]);
        s["slice"] = z;
        doc["per_slice"].push_back(std::move(s));
    }
    fs::create_directories(a.out);
    write_json(doc, a.out / "report.json");
    if (!a.csv.empty()) {
        std::ofstream csv(a.csv);
        csv << "slice,vi,vi_merge,vi_split,ari,map\n";
        csv.precision(17);
        for (std::size_t z = 0; z < reports.size(); ++z)
            csv << z << ',' << reports[z].vi << ',' << reports[z].vi_merge << ',' << reports[z].vi_split << ','
                << reports[z].ari << ',' << reports[z].map.value_or(0.0) << '\n';
        if (!csv) throw IoError("cannot write " + a.csv.string());
    }
    write_json({{"command", "eval"},
                {"pred", a.pred.string()},
                {"gt", a.gt.string()},
                {"skeletonize", a.skeletonize},
                {"connectivity", a.connectivity},
                {"csv", a.csv.string()},
                {"threads", threads}},
               a.out / "config.json");
    std::printf("vi %.6f (merge %.6f, split %.6f)  ari %.6f  map %.6f\n", mean.vi, mean.vi_merge, mean.vi_split,
                mean.ari, mean.map.value_or(0.0));
}

// ---------------------------------------------------------------- track

struct TrackArgs {
    fs::path stack;
    fs::path out;
    fs::path gt;
    std::string backend = "max_overlap";
    std::string tie_break = "larger_overlap";
    std::string overlap_norm = "iou";
    TrackerConfig config;
    int connectivity = 4;
};

void run_track(TrackArgs a, int threads) {
    a.config.backend = parse_backend(a.backend);
    a.config.tie_break = parse_tie_break(a.tie_break);
    a.config.overlap_norm = parse_overlap_norm(a.overlap_norm);
    a.config.validate();
    const auto m = load_manifest(a.stack);
    const auto stack = load_regions(m, false, parse_connectivity(a.connectivity), threads);

    const auto t0 = std::chrono::steady_clock::now();
    const auto out = track_stack(stack, a.config);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(a.out);
    json doc = to_json(out.result);
    doc["stack"] = fs::absolute(a.stack).string();
    doc["config"] = to_json(a.config);
    write_json(doc, a.out / "track_result.json");
    write_volume(out.volume, a.out / "volume.glv");
    json timing = {{"duration_seconds", seconds}, {"slices", stack.size()}};
    if (!a.gt.empty()) {
        const auto gt = read_volume(a.gt);
        if (gt.width() != out.volume.width() || gt.height() != out.volume.height() ||
            gt.depth() != out.volume.depth())
            throw ConsistencyError("ground-truth volume differs in shape from the tracked stack");
        // Boundary voxels of the stack are excluded from the comparison.
        LabelVolume masked = gt;
        for (std::size_t i = 0; i < masked.size(); ++i)
            if (out.volume[i] == 0) masked[i] = 0;
        write_json(to_json(evaluate_tracking(out.volume, masked)), a.out / "report.json");
    }
    write_json(timing, a.out / "timing.json");
    write_json({{"command", "track"},
                {"stack", a.stack.string()},
                {"gt", a.gt.string()},
                {"tracker", to_json(a.config)},
                {"connectivity", a.connectivity},
                {"threads", threads}},
               a.out / "config.json");
    std::printf("tracked %zu slices: %u labels, %zu appearances after slice 0, %.3f s\n", stack.size(),
                out.result.label_count,
                std::size_t(std::count_if(out.result.new_labels.begin(), out.result.new_labels.end(),
                                          [](const TrackEvent& e) { return e.slice > 0; })),
                seconds);
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    fs::path track;
    fs::path stack;
    fs::path out;
    int connectivity = 4;
};

void run_reconstruct(const ReconstructArgs& a, int threads) {
    const auto doc = read_json(a.track);
    const auto result = track_result_from_json(doc);
    fs::path stack_path = a.stack;
    if (stack_path.empty()) {
        if (!doc.contains("stack")) throw ValidationError("track result names no stack; pass --stack");
        stack_path = doc["stack"].get<std::string>();
    }
    const auto m = load_manifest(stack_path);
    const auto stack = load_regions(m, false, parse_connectivity(a.connectivity), threads);
    const auto volume = assemble_volume(stack, result);

    fs::create_directories(a.out);
    write_volume(volume, a.out / "volume.glv");

    std::map<std::uint32_t, std::uint64_t> voxels;
    std::uint64_t boundary = 0;
    for (auto v : volume.data()) {
        if (v == 0) ++boundary;
        else ++voxels[v];
    }
    if (result.label_count <= 0xFFFF) {
        fs::create_directories(a.out / "slices");
        for (int z = 0; z < volume.depth(); ++z)
            write_png(slice_as_labels(volume, z), a.out / "slices" / slice_name(std::size_t(z), ".png"));
    } else {
        note("more than 65535 labels; 16-bit slice PNGs skipped, volume.glv holds all ids");
    }

    // Power-of-two bins: [1, 2), [2, 4), ...
    std::map<int, std::pair<std::uint64_t, std::uint64_t>> bins;  // bin -> (grains, voxels)
    json per_grain = json::array();
    for (const auto& [label, n] : voxels) {
        per_grain.push_back({{"label", label}, {"voxels", n}});
        const int bin = std::bit_width(n) - 1;
        bins[bin].first += 1;
        bins[bin].second += n;
    }
    json histogram = json::array();
    for (const auto& [bin, gv] : bins)
        histogram.push_back({{"min_voxels", std::uint64_t(1) << bin},
                             {"max_voxels", (std::uint64_t(1) << (bin + 1)) - 1},
                             {"grains", gv.first},
                             {"voxels", gv.second}});
    write_json({{"grain_count", voxels.size()},
                {"label_count", result.label_count},
                {"slices", volume.depth()},
                {"width", volume.width()},
                {"height", volume.height()},
                {"total_voxels", volume.size()},
                {"boundary_voxels", boundary},
                {"grain_voxels", volume.size() - boundary},
                {"histogram", std::move(histogram)},
                {"per_grain", std::move(per_grain)}},
               a.out / "stats.json");
    write_json({{"command", "reconstruct"},
                {"track", a.track.string()},
                {"stack", stack_path.string()},
                {"connectivity", a.connectivity},
                {"threads", threads}},
               a.out / "config.json");
    std::printf("reconstructed %d slices, %zu grains\n", volume.depth(), voxels.size());
}

// ---------------------------------------------------------------- skeletonize

void run_skeletonize(const fs::path& in, const fs::path& out, int threads) {
    const auto m = load_manifest(in);
    if (m.kind != RasterKind::boundary && m.kind != RasterKind::probability)
        throw ValidationError("skeletonize needs a boundary or probability manifest");
    fs::create_directories(out);
    StackManifest sm{RasterKind::boundary, m.axis_order, m.pixel_size_xy, m.z_spacing, {}};
    for (std::size_t z = 0; z < m.slices.size(); ++z) sm.slices.push_back(fs::absolute(out / slice_name(z, ".png")));
    parallel_for(0, m.slices.size(), threads, [&](std::size_t z) {
        BoundaryGrid b;
        if (m.kind == RasterKind::boundary) {
            b = read_boundary_png(m.slices[z]);
        } else {
            const auto p = read_probability(m.slices[z]);
            b = BoundaryGrid(p.width(), p.height());
            for (int y = 0; y < p.height(); ++y)
                for (int x = 0; x < p.width(); ++x) b(x, y) = p(x, y, 1) >= 0.5f ? 1 : 0;
        }
        write_png(skeletonize(b), sm.slices[z]);
    });
    save_manifest(sm, out / "manifest.json");
    write_json({{"command", "skeletonize"}, {"in", in.string()}, {"threads", threads}}, out / "config.json");
    std::cout << "skeletonized " << m.slices.size() << " slices\n";
}

// ---------------------------------------------------------------- tiles

struct TilesArgs {
    fs::path in;
    fs::path out;
    fs::path plan;
    fs::path tiles;
    std::string kind = "label";
    int tile = 256;
    int overlap = 32;
};

void run_tiles_split(const TilesArgs& a) {
    const auto kind = parse_kind(a.kind);
    const auto raster = read_raster(a.in, kind);
    const auto ext = kind_extension(kind);
    fs::create_directories(a.out);
    std::visit(
        [&](const auto& grid) {
            const auto plan = plan_tiles(grid.width(), grid.height(), a.tile, a.overlap);
            const auto tiles = split(grid, plan);
            for (std::size_t i = 0; i < tiles.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "tile_%04zu", i);
                write_raster(AnyRaster(tiles[i]), a.out / (std::string(name) + std::string(ext)));
            }
            json doc = to_json(plan);
            doc["kind"] = a.kind;
            write_json(doc, a.out / "plan.json");
            std::cout << "split into " << tiles.size() << " tiles\n";
        },
        raster);
}

void run_tiles_stitch(const TilesArgs& a) {
    const auto doc = read_json(a.plan);
    const auto plan = tile_plan_from_json(doc);
    const auto kind = parse_kind(doc.contains("kind") ? doc["kind"].get<std::string>() : a.kind);
    const auto ext = kind_extension(kind);
    const fs::path dir = a.tiles.empty() ? a.plan.parent_path() : a.tiles;
    std::vector<AnyRaster> tiles;
    for (std::size_t i = 0; i < plan.tiles.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "tile_%04zu", i);
        tiles.push_back(read_raster(dir / (std::string(name) + std::string(ext)), kind));
    }
    std::visit(
        [&](const auto& first) {
            using Grid = std::decay_t<decltype(first)>;
            std::vector<Grid> typed;
            for (auto& t : tiles) typed.push_back(std::get<Grid>(std::move(t)));
            write_raster(AnyRaster(stitch(typed, plan)), a.out);
        },
        tiles.at(0));
    std::cout << "stitched " << plan.tiles.size() << " tiles into " << a.out.string() << '\n';
}

int exit_code(const Error& e) {
    if (dynamic_cast<const ParameterError*>(&e)) return 2;
    if (dynamic_cast<const BackendError*>(&e)) return 4;
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grainstack: grain boundary datasets, weight maps, metrics and 3D tracking"};
    app.require_subcommand(1);
    int thread_flag = 0;
    app.add_option("--threads", thread_flag, "worker threads (default: GRAINSTACK_THREADS or all cores)");
    app.add_flag("-v,--verbose", verbosity, "progress on stderr");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Potts grain growth dataset with optional flaws");
    simulate->add_option("--out", sim.out, "output directory")->required();
    simulate->add_option("--preset", sim.preset, "paper-sim: 400 slices of 400x400");
    simulate->add_option("--size", sim.size, "slice width and height");
    simulate->add_option("--slices", sim.slices, "number of slices");
    simulate->add_option("--q", sim.q, "number of spin states (default 64)");
    simulate->add_option("--temperature", sim.temperature, "kT (default 0)");
    simulate->add_option("--steps", sim.steps, "Monte Carlo sweeps (default 100)");
    simulate->add_option("--seed", sim.potts.seed, "random seed");
    simulate->add_option("--neighborhood", sim.neighborhood, "6 or 26");
    simulate->add_option("--blur-segments", sim.flaws.blur_segments_per_slice, "blurred boundary arcs per slice");
    simulate->add_option("--blur-length", sim.flaws.blur_length, "boundary pixels per arc");
    simulate->add_option("--blur-fade", sim.flaws.blur_fade, "1 erases an arc, less only fades it");
    simulate->add_option("--blur-persistence", sim.flaws.blur_persistence, "slices sharing arc anchors");
    simulate->add_option("--noise", sim.flaws.noise_density, "fraction of noisy pixels");
    simulate->add_option("--scratches", sim.flaws.scratch_count, "scratches per slice");
    simulate->add_option("--scratch-intensity", sim.flaws.scratch_intensity, "gray levels removed by a scratch");
    simulate->add_flag("!--no-trace", sim.trace, "skip the energy trace");

    WeightsArgs wts;
    auto* weights = app.add_subcommand("weights", "adaptive boundary weight maps");
    weights->add_option("--masks", wts.masks, "boundary or label manifest")->required();
    weights->add_option("--out", wts.out, "output directory")->required();
    weights->add_option("--w0", wts.params.w0, "weight amplitude");
    weights->add_option("--gamma", wts.params.gamma, "max_dis / sigma");
    weights->add_option("--dilate", wts.params.dilate_radius, "radius of the tolerance band m_d");
    weights->add_option("--class-balance", wts.class_balance, "frequency or none");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "VI / ARI / mAP against ground truth");
    eval->add_option("--pred", ev.pred, "prediction manifest")->required();
    eval->add_option("--gt", ev.gt, "ground-truth manifest")->required();
    eval->add_option("--out", ev.out, "output directory")->required();
    eval->add_option("--csv", ev.csv, "per-slice CSV");
    eval->add_flag("--skeletonize", ev.skeletonize, "thin predicted boundaries first");
    eval->add_option("--connectivity", ev.connectivity, "4 or 8 (interior regions)");

    TrackArgs tr;
    auto* track = app.add_subcommand("track", "slice-by-slice grain tracking");
    track->add_option("--stack", tr.stack, "boundary or label manifest")->required();
    track->add_option("--out", tr.out, "output directory")->required();
    track->add_option("--gt", tr.gt, "ground-truth volume (.glv) to score against");
    track->add_option("--backend", tr.backend, "max_overlap, min_centroid or external");
    track->add_option("--threshold", tr.config.threshold, "minimum similarity to inherit a label");
    track->add_option("--crop-size", tr.config.crop_size, "pair crop side for the external scorer");
    track->add_option("--tie-break", tr.tie_break, "larger_overlap or smaller_id");
    track->add_option("--overlap-norm", tr.overlap_norm, "iou or min");
    track->add_option("--scorer", tr.config.scorer, "external scorer executable");
    track->add_option("--connectivity", tr.connectivity, "4 or 8 (interior regions)");

    ReconstructArgs rc;
    auto* reconstruct = app.add_subcommand("reconstruct", "3D label volume and grain statistics");
    reconstruct->add_option("--track", rc.track, "track_result.json")->required();
    reconstruct->add_option("--stack", rc.stack, "stack manifest (default: the one recorded at tracking)");
    reconstruct->add_option("--out", rc.out, "output directory")->required();
    reconstruct->add_option("--connectivity", rc.connectivity, "4 or 8 (interior regions)");

    fs::path sk_in, sk_out;
    auto* skel = app.add_subcommand("skeletonize", "thin boundaries to one pixel");
    skel->add_option("--in", sk_in, "boundary or probability manifest")->required();
    skel->add_option("--out", sk_out, "output directory")->required();

    TilesArgs ti;
    auto* tiles = app.add_subcommand("tiles", "overlap-tile split and stitch");
    tiles->require_subcommand(1);
    auto* tsplit = tiles->add_subcommand("split", "cut one raster into tiles");
    tsplit->add_option("--in", ti.in, "raster file")->required();
    tsplit->add_option("--kind", ti.kind, "label, boundary, gray, probability or weight");
    tsplit->add_option("--tile", ti.tile, "tile side");
    tsplit->add_option("--overlap", ti.overlap, "margin discarded when stitching");
    tsplit->add_option("--out", ti.out, "output directory")->required();
    auto* tstitch = tiles->add_subcommand("stitch", "reassemble tiles");
    tstitch->add_option("--plan", ti.plan, "plan.json")->required();
    tstitch->add_option("--tiles", ti.tiles, "tile directory (default: next to the plan)");
    tstitch->add_option("--out", ti.out, "output raster file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const int threads = resolve_threads(thread_flag);
        if (*simulate) run_simulate(sim, threads);
        else if (*weights) run_weights(wts, threads);
        else if (*eval) run_eval(ev, threads);
        else if (*track) run_track(tr, threads);
        else if (*reconstruct) run_reconstruct(rc, threads);
        else if (*skel) run_skeletonize(sk_in, sk_out, threads);
        else if (*tsplit) run_tiles_split(ti);
        else if (*tstitch) run_tiles_stitch(ti);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
