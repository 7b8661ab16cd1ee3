#include "grainstack/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>

#include "grainstack/errors.hpp"

namespace grainstack {

std::string_view backend_name(BackendKind kind) {
    switch (kind) {
    case BackendKind::max_overlap: return "max_overlap";
    case BackendKind::min_centroid: return "min_centroid";
    case BackendKind::external: return "external";
    }
    return "?";
}

BackendKind parse_backend(std::string_view name) {
    if (name == "max_overlap") return BackendKind::max_overlap;
    if (name == "min_centroid") return BackendKind::min_centroid;
    if (name == "external") return BackendKind::external;
    throw ParameterError("unknown tracking backend '" + std::string(name) + "'");
}

std::string_view tie_break_name(TieBreak rule) {
    return rule == TieBreak::larger_overlap ? "larger_overlap" : "smaller_id";
}

TieBreak parse_tie_break(std::string_view name) {
    if (name == "larger_overlap") return TieBreak::larger_overlap;
    if (name == "smaller_id") return TieBreak::smaller_id;
    throw ParameterError("unknown tie-break rule '" + std::string(name) + "'");
}

std::string_view overlap_norm_name(OverlapNorm norm) { return norm == OverlapNorm::iou ? "iou" : "min"; }

OverlapNorm parse_overlap_norm(std::string_view name) {
    if (name == "iou") return OverlapNorm::iou;
    if (name == "min") return OverlapNorm::min_area;
    throw ParameterError("unknown overlap normalization '" + std::string(name) + "'");
}

void TrackerConfig::validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ParameterError("tracking threshold must be in [0, 1]");
    if (crop_size < 16) throw ParameterError("crop size must be >= 16, got " + std::to_string(crop_size));
    if (backend == BackendKind::external && scorer.empty())
        throw ParameterError("external backend needs a scorer executable");
}

nlohmann::json to_json(const TrackerConfig& c) {
    return {{"backend", backend_name(c.backend)},
            {"threshold", c.threshold},
            {"crop_size", c.crop_size},
            {"tie_break", tie_break_name(c.tie_break)},
            {"overlap_norm", overlap_norm_name(c.overlap_norm)},
            {"scorer", c.scorer.string()}};
}

std::vector<CandidatePair> enumerate_candidates(const LabelGrid& last, const LabelGrid& current, int slice_index) {
    if (!last.same_shape(current)) throw ConsistencyError("adjacent slices differ in shape");
    const auto last_regions = extract_regions(last, slice_index - 1);
    const auto this_regions = extract_regions(current, slice_index);
    std::unordered_map<std::uint32_t, const GrainRegion*> last_by_id, this_by_id;
    for (const auto& r : last_regions) last_by_id[r.id] = &r;
    for (const auto& r : this_regions) this_by_id[r.id] = &r;

    const auto table = contingency(current, last, true);
    std::vector<CandidatePair> out;
    out.reserve(table.cells.size());
    for (const auto& cell : table.cells) {
        CandidatePair p;
        p.this_region = *this_by_id.at(cell.pred);
        p.last_region = *last_by_id.at(cell.gt);
        p.overlap_area = std::size_t(cell.count);
        p.centroid_distance = std::hypot(p.this_region.centroid_x - p.last_region.centroid_x,
                                         p.this_region.centroid_y - p.last_region.centroid_y);
        out.push_back(p);
    }
    return out;
}

double max_overlap_similarity(const CandidatePair& pair, OverlapNorm norm) {
    const double a = double(pair.this_region.area), b = double(pair.last_region.area);
    const double v = double(pair.overlap_area);
    const double denom = norm == OverlapNorm::iou ? a + b - v : std::min(a, b);
    if (denom <= 0.0) return 0.0;
    return std::min(1.0, v / denom);
}

double min_centroid_similarity(const CandidatePair& pair) {
    const auto box = pair.this_region.bbox.united(pair.last_region.bbox);
    const double diag = std::hypot(double(box.width()), double(box.height()));
    return std::exp(-pair.centroid_distance / diag);
}

FloatRaster make_pair_crop(const CandidatePair& pair, const LabelGrid& last, const LabelGrid& current,
                           int crop_size) {
    if (crop_size < 1) throw ParameterError("crop size must be positive");
    const auto box = pair.this_region.bbox.united(pair.last_region.bbox);
    const double bw = box.width(), bh = box.height();
    std::vector<int> src_x(static_cast<std::size_t>(crop_size)), src_y(static_cast<std::size_t>(crop_size));
    for (int i = 0; i < crop_size; ++i) {
        src_x[std::size_t(i)] = box.min_x + int(std::floor((i + 0.5) * bw / crop_size));
        src_y[std::size_t(i)] = box.min_y + int(std::floor((i + 0.5) * bh / crop_size));
    }
    FloatRaster crop(crop_size, crop_size, 2);
    for (int y = 0; y < crop_size; ++y)
        for (int x = 0; x < crop_size; ++x) {
            const int sx = src_x[std::size_t(x)], sy = src_y[std::size_t(y)];
            crop(x, y, 0) = last(sx, sy) == pair.last_region.id ? 1.0f : 0.0f;
            crop(x, y, 1) = current(sx, sy) == pair.this_region.id ? 1.0f : 0.0f;
        }
    return crop;
}

std::vector<double> MaxOverlapBackend::score(std::span<const CandidatePair> pairs, const LabelGrid&,
                                             const LabelGrid&) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(max_overlap_similarity(p, norm_));
    return out;
}

std::vector<double> MinCentroidBackend::score(std::span<const CandidatePair> pairs, const LabelGrid&,
                                              const LabelGrid&) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(min_centroid_similarity(p));
    return out;
}

std::unique_ptr<SimilarityBackend> make_backend(const TrackerConfig& config) {
    switch (config.backend) {
    case BackendKind::max_overlap: return std::make_unique<MaxOverlapBackend>(config.overlap_norm);
    case BackendKind::min_centroid: return std::make_unique<MinCentroidBackend>();
    case BackendKind::external:
        return std::make_unique<ExternalScorerBackend>(config.scorer, config.crop_size);
    }
    throw ParameterError("unknown tracking backend");
}

TrackOutput track_stack(std::span<const LabelGrid> stack, const TrackerConfig& config, SimilarityBackend& backend) {
    config.validate();
    if (stack.empty()) throw ValidationError("cannot track an empty stack");
    for (std::size_t z = 1; z < stack.size(); ++z)
        if (!stack[z].same_shape(stack[0]))
            throw ConsistencyError("slice " + std::to_string(z) + " differs in shape from slice 0");

    TrackResult r;
    r.assignments.resize(stack.size());
    for (const auto& region : extract_regions(stack[0], 0)) {
        r.assignments[0][region.id] = ++r.label_count;
        r.new_labels.push_back({r.label_count, 0});
    }

    for (std::size_t z = 1; z < stack.size(); ++z) {
        const int zi = int(z);
        const auto pairs = enumerate_candidates(stack[z - 1], stack[z], zi);
        const auto scores = backend.score(pairs, stack[z - 1], stack[z]);
        if (scores.size() != pairs.size())
            throw BackendError("backend returned " + std::to_string(scores.size()) + " scores for " +
                               std::to_string(pairs.size()) + " pairs at slice " + std::to_string(z));
        for (double s : scores)
            if (!(s >= 0.0 && s <= 1.0))
                throw BackendError("similarity outside [0, 1] at slice " + std::to_string(z));

        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (scores[i] >= config.threshold) order.push_back(i);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            if (config.tie_break == TieBreak::larger_overlap && pairs[a].overlap_area != pairs[b].overlap_area)
                return pairs[a].overlap_area > pairs[b].overlap_area;
            if (pairs[a].last_region.id != pairs[b].last_region.id)
                return pairs[a].last_region.id < pairs[b].last_region.id;
            return pairs[a].this_region.id < pairs[b].this_region.id;
        });

        const auto& previous = r.assignments[z - 1];
        auto& current = r.assignments[z];
        std::set<std::uint32_t> claimed;
        std::vector<bool> chosen(pairs.size(), false);
        for (std::size_t i : order) {
            const auto label = previous.at(pairs[i].last_region.id);
            if (current.contains(pairs[i].this_region.id) || claimed.contains(label)) continue;
            current[pairs[i].this_region.id] = label;
            claimed.insert(label);
            chosen[i] = true;
        }
        for (const auto& region : extract_regions(stack[z], zi)) {
            if (current.contains(region.id)) continue;
            current[region.id] = ++r.label_count;
            r.new_labels.push_back({r.label_count, zi});
        }
        for (const auto& [id, label] : previous)
            if (!claimed.contains(label)) r.terminated.push_back({label, zi - 1});

        for (std::size_t i = 0; i < pairs.size(); ++i)
            r.similarity_log.push_back({zi, pairs[i].this_region.id, pairs[i].last_region.id, pairs[i].overlap_area,
                                        pairs[i].centroid_distance, scores[i], bool(chosen[i])});
    }

    TrackOutput out;
    out.volume = assemble_volume(stack, r);
    out.result = std::move(r);
    return out;
}

TrackOutput track_stack(std::span<const LabelGrid> stack, const TrackerConfig& config) {
    config.validate();
    auto backend = make_backend(config);
    return track_stack(stack, config, *backend);
}

LabelVolume assemble_volume(std::span<const LabelGrid> stack, const TrackResult& result) {
    if (stack.empty()) return {};
    if (result.assignments.size() != stack.size())
        throw ConsistencyError("track result covers " + std::to_string(result.assignments.size()) +
                               " slices, stack has " + std::to_string(stack.size()));
    LabelVolume vol(stack[0].width(), stack[0].height(), int(stack.size()));
    for (std::size_t z = 0; z < stack.size(); ++z) {
        const auto& map = result.assignments[z];
        auto dst = vol.slice(int(z));
        const auto& src = stack[z];
        for (std::size_t i = 0; i < src.pixel_count(); ++i) {
            if (src[i] == 0) continue;
            const auto it = map.find(src[i]);
            if (it == map.end())
                throw ConsistencyError("region " + std::to_string(src[i]) + " of slice " + std::to_string(z) +
                                       " has no assignment");
            dst[i] = it->second;
        }
    }
    return vol;
}

MetricReport evaluate_tracking(const LabelVolume& result, const LabelVolume& gt) {
    const auto table = contingency(result, gt, true);
    const auto vi = variation_of_information(table);
    MetricReport report;
    report.vi = vi.vi;
    report.vi_merge = vi.merge;
    report.vi_split = vi.split;
    report.ari = adjusted_rand_index(table);
    return report;
}

nlohmann::json to_json(const TrackResult& r) {
    nlohmann::json assignments = nlohmann::json::array();
    for (const auto& slice : r.assignments) {
        nlohmann::json m = nlohmann::json::object();
        for (const auto& [id, label] : slice) m[std::to_string(id)] = label;
        assignments.push_back(std::move(m));
    }
    auto events = [](const std::vector<TrackEvent>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& e : v) a.push_back({{"label", e.label}, {"slice", e.slice}});
        return a;
    };
    nlohmann::json log = nlohmann::json::array();
    for (const auto& s : r.similarity_log)
        log.push_back({{"slice", s.slice},
                       {"this_id", s.this_id},
                       {"last_id", s.last_id},
                       {"overlap_area", s.overlap_area},
                       {"centroid_distance", s.centroid_distance},
                       {"similarity", s.similarity},
                       {"chosen", s.chosen}});
    return {{"slices", r.assignments.size()},
            {"label_count", r.label_count},
            {"assignments", std::move(assignments)},
            {"new_labels", events(r.new_labels)},
            {"terminated", events(r.terminated)},
            {"similarity_log", std::move(log)}};
}

TrackResult track_result_from_json(const nlohmann::json& doc) {
    try {
        TrackResult r;
        r.label_count = doc.at("label_count").get<std::uint32_t>();
        for (const auto& slice : doc.at("assignments")) {
            std::map<std::uint32_t, std::uint32_t> m;
            for (const auto& [key, value] : slice.items())
                m[std::uint32_t(std::stoul(key))] = value.get<std::uint32_t>();
            r.assignments.push_back(std::move(m));
        }
        for (const auto& e : doc.at("new_labels"))
            r.new_labels.push_back({e.at("label").get<std::uint32_t>(), e.at("slice").get<int>()});
        for (const auto& e : doc.at("terminated"))
            r.terminated.push_back({e.at("label").get<std::uint32_t>(), e.at("slice").get<int>()});
        for (const auto& s : doc.at("similarity_log"))
            r.similarity_log.push_back({s.at("slice").get<int>(), s.at("this_id").get<std::uint32_t>(),
                                        s.at("last_id").get<std::uint32_t>(), s.at("overlap_area").get<std::size_t>(),
                                        s.at("centroid_distance").get<double>(), s.at("similarity").get<double>(),
                                        s.at("chosen").get<bool>()});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed track result: ") + e.what());
    } catch (const std::logic_error& e) {
        throw FormatError(std::string("malformed track result: ") + e.what());
    }
}

}  // namespace grainstack
