#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "grainstack/metrics.hpp"
#include "grainstack/raster.hpp"
#include "grainstack/regions.hpp"

namespace grainstack {

enum class BackendKind { max_overlap, min_centroid, external };

std::string_view backend_name(BackendKind kind);
BackendKind parse_backend(std::string_view name);

// Order among pairs of equal similarity.
enum class TieBreak {
    larger_overlap,  // larger overlap area, then smaller predecessor id
    smaller_id,      // smaller predecessor id
};

std::string_view tie_break_name(TieBreak rule);
TieBreak parse_tie_break(std::string_view name);

// Denominator of the max_overlap score.
enum class OverlapNorm {
    iou,       // overlap / (area_this + area_last - overlap)
    min_area,  // overlap / min(area_this, area_last)
};

std::string_view overlap_norm_name(OverlapNorm norm);
OverlapNorm parse_overlap_norm(std::string_view name);

struct TrackerConfig {
    BackendKind backend = BackendKind::max_overlap;
    double threshold = 0.5;
    int crop_size = 64;
    TieBreak tie_break = TieBreak::larger_overlap;
    OverlapNorm overlap_norm = OverlapNorm::iou;
    std::filesystem::path scorer;  // executable for the external backend

    // Throws ParameterError unless threshold is in [0, 1] and crop_size >= 16.
    void validate() const;
};

nlohmann::json to_json(const TrackerConfig& config);

// A region of slice z together with one region of slice z-1 that overlaps it
// in the z projection.
struct CandidatePair {
    GrainRegion this_region;
    GrainRegion last_region;
    std::size_t overlap_area = 0;
    double centroid_distance = 0.0;
};

// One pair per (region of `current`, overlapping id of `last`), ordered by
// (this id, last id). Boundary (0) pixels never overlap anything.
std::vector<CandidatePair> enumerate_candidates(const LabelGrid& last, const LabelGrid& current,
                                                int slice_index = 1);

// Overlap area normalized into [0, 1]. A small region swallowed by a large
// one scores 1 under min_area, which lets ending grains hand their label to a
// neighbor; iou does not have that failure.
double max_overlap_similarity(const CandidatePair& pair, OverlapNorm norm = OverlapNorm::iou);

// exp(-centroid_distance / D), D = diagonal of the pair's union bounding box.
double min_centroid_similarity(const CandidatePair& pair);

// Union bounding box of the two regions, each rasterized as a binary channel
// (0 = last-slice region, 1 = this-slice region) and resampled to
// crop_size x crop_size with nearest-neighbor sampling at pixel centers.
FloatRaster make_pair_crop(const CandidatePair& pair, const LabelGrid& last, const LabelGrid& current,
                           int crop_size);

class SimilarityBackend {
public:
    virtual ~SimilarityBackend() = default;
    // One score in [0, 1] per pair, same order.
    virtual std::vector<double> score(std::span<const CandidatePair> pairs, const LabelGrid& last,
                                      const LabelGrid& current) = 0;
};

class MaxOverlapBackend final : public SimilarityBackend {
public:
    explicit MaxOverlapBackend(OverlapNorm norm = OverlapNorm::iou) : norm_(norm) {}
    std::vector<double> score(std::span<const CandidatePair> pairs, const LabelGrid&, const LabelGrid&) override;

private:
    OverlapNorm norm_;
};

class MinCentroidBackend final : public SimilarityBackend {
public:
    std::vector<double> score(std::span<const CandidatePair> pairs, const LabelGrid&, const LabelGrid&) override;
};

// Batch protocol: for each slice pair the tracker writes a directory with
//   pairs.gsr   width = crop, height = N * crop, 2 channels, values in {0, 1}
//               (N crops stacked vertically: N x crop x crop x 2 floats)
//   pairs.json  {"crop_size": c, "pairs": [{"row": i, "this_id": .., "last_id": ..}]}
// then runs `scorer <dir>` once. The scorer writes
//   scores.json [{"row": i, "similarity": s}] with s in [0, 1]
// and exits 0. Anything else is a BackendError.
class ExternalScorerBackend final : public SimilarityBackend {
public:
    ExternalScorerBackend(std::filesystem::path scorer, int crop_size, std::filesystem::path work_dir = {},
                          bool keep_batches = false);
    ~ExternalScorerBackend() override;
    ExternalScorerBackend(const ExternalScorerBackend&) = delete;
    ExternalScorerBackend& operator=(const ExternalScorerBackend&) = delete;

    std::vector<double> score(std::span<const CandidatePair> pairs, const LabelGrid& last,
                              const LabelGrid& current) override;

    std::size_t batches_sent() const { return batches_; }

private:
    std::filesystem::path scorer_;
    int crop_size_;
    std::filesystem::path work_dir_;
    bool owns_work_dir_ = false;
    bool keep_batches_;
    std::size_t batches_ = 0;
};

void write_pair_batch(const std::filesystem::path& dir, std::span<const CandidatePair> pairs,
                      const LabelGrid& last, const LabelGrid& current, int crop_size);
std::vector<double> read_scores(const std::filesystem::path& dir, std::size_t expected_rows);

// Runs `program arg` and returns its exit status (-1 if it died on a signal).
int run_process(const std::filesystem::path& program, const std::string& arg);

std::unique_ptr<SimilarityBackend> make_backend(const TrackerConfig& config);

struct TrackEvent {
    std::uint32_t label = 0;
    int slice = 0;
    bool operator==(const TrackEvent&) const = default;
};

struct SimilarityRecord {
    int slice = 0;  // slice of this_id; last_id lives in slice - 1
    std::uint32_t this_id = 0;
    std::uint32_t last_id = 0;
    std::size_t overlap_area = 0;
    double centroid_distance = 0.0;
    double similarity = 0.0;
    bool chosen = false;
    bool operator==(const SimilarityRecord&) const = default;
};

struct TrackResult {
    // Per slice: slice-local region id -> global 3D label.
    std::vector<std::map<std::uint32_t, std::uint32_t>> assignments;
    std::vector<TrackEvent> new_labels;  // track starts, slice 0 included
    std::vector<TrackEvent> terminated;  // last slice of tracks with no successor
    std::vector<SimilarityRecord> similarity_log;
    std::uint32_t label_count = 0;

    bool operator==(const TrackResult&) const = default;
};

struct TrackOutput {
    TrackResult result;
    LabelVolume volume;  // global labels, 0 on boundary pixels
};

// Slice 0 regions get fresh labels. For each later slice, every candidate
// pair scoring >= threshold is considered in descending score order (ties per
// config.tie_break); a pair is accepted when neither its region nor its
// predecessor's label is taken yet. Unmatched regions start new tracks and
// unclaimed predecessor labels end.
TrackOutput track_stack(std::span<const LabelGrid> stack, const TrackerConfig& config,
                        SimilarityBackend& backend);
TrackOutput track_stack(std::span<const LabelGrid> stack, const TrackerConfig& config);

LabelVolume assemble_volume(std::span<const LabelGrid> stack, const TrackResult& result);

// Voxel-level VI/ARI, boundary voxels excluded; map is left empty.
MetricReport evaluate_tracking(const LabelVolume& result, const LabelVolume& gt);

nlohmann::json to_json(const TrackResult& result);
TrackResult track_result_from_json(const nlohmann::json& doc);

}  // namespace grainstack
