#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grainstack/raster.hpp"

namespace grainstack {

// Sparse co-occurrence counts between a predicted and a ground-truth
// segmentation. Entries are sorted by (pred, gt); totals by id.
struct ContingencyTable {
    struct Cell {
        std::uint32_t pred;
        std::uint32_t gt;
        std::uint64_t count;
    };
    std::vector<Cell> cells;
    std::vector<std::pair<std::uint32_t, std::uint64_t>> pred_totals;  // a_i
    std::vector<std::pair<std::uint32_t, std::uint64_t>> gt_totals;    // b_j
    std::uint64_t total = 0;                                           // n
};

// Counts co-occurrences pixel by pixel. With ignore_boundary, pixels where
// either label is 0 are skipped: boundary ink is a class, not a region.
ContingencyTable contingency(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gt,
                             bool ignore_boundary);
ContingencyTable contingency(const LabelGrid& pred, const LabelGrid& gt, bool ignore_boundary);
ContingencyTable contingency(const LabelVolume& pred, const LabelVolume& gt, bool ignore_boundary);

struct VariationOfInformation {
    double vi = 0.0;
    double split = 0.0;  // H(pred | gt), over-segmentation
    double merge = 0.0;  // H(gt | pred), under-segmentation
};

// Conditional entropies in bits. vi is exactly split + merge.
VariationOfInformation variation_of_information(const ContingencyTable& table);

// Hubert-Arabie adjusted Rand index. When both partitions make the
// denominator vanish the index is 1 for identical partitions and 0 otherwise.
double adjusted_rand_index(const ContingencyTable& table);

struct AveragePrecision {
    double map = 0.0;
    std::vector<std::pair<double, double>> per_threshold;  // (iou threshold, TP/(TP+FP+FN))
};

// 0.50, 0.55, ..., 0.95.
std::vector<double> default_iou_thresholds();

// Instances are the nonzero ids. For each threshold, pairs with IoU > t are
// matched greedily by descending IoU (ties: smaller pred id, then smaller gt
// id), each instance used at most once.
AveragePrecision mean_average_precision(const LabelGrid& pred, const LabelGrid& gt,
                                        std::span<const double> thresholds);

struct MetricReport {
    double vi = 0.0;
    double vi_merge = 0.0;
    double vi_split = 0.0;
    double ari = 0.0;
    std::optional<double> map;  // not defined for 3D volume comparisons
    std::vector<std::pair<double, double>> per_threshold_ap;
};

// VI, ARI (boundary excluded) and mAP for one slice.
MetricReport evaluate_slice(const LabelGrid& pred, const LabelGrid& gt,
                            std::span<const double> thresholds);

// Unweighted mean over slices; per-threshold AP averaged threshold by threshold.
MetricReport average_reports(std::span<const MetricReport> reports);

nlohmann::json to_json(const MetricReport& report);

}  // namespace grainstack
