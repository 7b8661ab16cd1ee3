#include "grainstack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace grainstack {

namespace {

std::vector<std::uint32_t> widen(std::span<const std::uint16_t> v) {
    return std::vector<std::uint32_t>(v.begin(), v.end());
}

template <class Map>
std::vector<std::pair<std::uint32_t, std::uint64_t>> sorted_totals(const Map& m) {
    std::vector<std::pair<std::uint32_t, std::uint64_t>> out(m.begin(), m.end());
    std::sort(out.begin(), out.end());
    return out;
}

using Wide = __int128;

Wide comb2(std::uint64_t n) { return n < 2 ? 0 : Wide(n) * Wide(n - 1) / 2; }

}  // namespace

ContingencyTable contingency(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gt,
                             bool ignore_boundary) {
    if (pred.size() != gt.size())
        throw ConsistencyError("segmentations differ in size (" + std::to_string(pred.size()) + " vs " +
                               std::to_string(gt.size()) + ")");
    std::unordered_map<std::uint64_t, std::uint64_t> cells;
    std::unordered_map<std::uint32_t, std::uint64_t> rows, cols;
    ContingencyTable t;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (ignore_boundary && (pred[i] == 0 || gt[i] == 0)) continue;
        ++cells[(std::uint64_t(pred[i]) << 32) | gt[i]];
        ++rows[pred[i]];
        ++cols[gt[i]];
        ++t.total;
    }
    t.cells.reserve(cells.size());
    for (const auto& [key, count] : cells)
        t.cells.push_back({std::uint32_t(key >> 32), std::uint32_t(key & 0xFFFFFFFFu), count});
    std::sort(t.cells.begin(), t.cells.end(), [](const auto& a, const auto& b) {
        return a.pred != b.pred ? a.pred < b.pred : a.gt < b.gt;
    });
    t.pred_totals = sorted_totals(rows);
    t.gt_totals = sorted_totals(cols);
    return t;
}

ContingencyTable contingency(const LabelGrid& pred, const LabelGrid& gt, bool ignore_boundary) {
    if (pred.width() != gt.width() || pred.height() != gt.height())
        throw ConsistencyError("label grids differ in shape");
    const auto p = widen(pred.data());
    const auto g = widen(gt.data());
    return contingency(p, g, ignore_boundary);
}

ContingencyTable contingency(const LabelVolume& pred, const LabelVolume& gt, bool ignore_boundary) {
    if (pred.width() != gt.width() || pred.height() != gt.height() || pred.depth() != gt.depth())
        throw ConsistencyError("label volumes differ in shape");
    return contingency(pred.data(), gt.data(), ignore_boundary);
}

VariationOfInformation variation_of_information(const ContingencyTable& table) {
    if (table.total == 0) throw ValidationError("contingency table is empty");
    std::unordered_map<std::uint32_t, std::uint64_t> a(table.pred_totals.begin(), table.pred_totals.end());
    std::unordered_map<std::uint32_t, std::uint64_t> b(table.gt_totals.begin(), table.gt_totals.end());
    const double n = double(table.total);
    VariationOfInformation out;
    for (const auto& c : table.cells) {
        const double p = double(c.count) / n;
        out.split -= p * std::log2(double(c.count) / double(b.at(c.gt)));
        out.merge -= p * std::log2(double(c.count) / double(a.at(c.pred)));
    }
    // -0.0 and rounding residue below zero are reported as zero.
    out.split = std::max(0.0, out.split);
    out.merge = std::max(0.0, out.merge);
    out.vi = out.split + out.merge;
    return out;
}

double adjusted_rand_index(const ContingencyTable& table) {
    if (table.total < 2) throw ValidationError("adjusted Rand index needs at least two elements");
    Wide s_ij = 0, s_a = 0, s_b = 0;
    for (const auto& c : table.cells) s_ij += comb2(c.count);
    for (const auto& [id, n] : table.pred_totals) s_a += comb2(n);
    for (const auto& [id, n] : table.gt_totals) s_b += comb2(n);
    const Wide pairs = comb2(table.total);
    // ARI = (s_ij - s_a s_b / C) / ((s_a + s_b)/2 - s_a s_b / C), scaled by 2C.
    const Wide num = 2 * pairs * s_ij - 2 * s_a * s_b;
    const Wide den = pairs * (s_a + s_b) - 2 * s_a * s_b;
    if (den == 0) {
        const bool identical = table.cells.size() == table.pred_totals.size() &&
                               table.cells.size() == table.gt_totals.size();
        return identical ? 1.0 : 0.0;
    }
    return double(static_cast<long double>(num) / static_cast<long double>(den));
}

std::vector<double> default_iou_thresholds() {
    std::vector<double> t;
    for (int k = 0; k < 10; ++k) t.push_back(0.5 + 0.05 * k);
    return t;
}

AveragePrecision mean_average_precision(const LabelGrid& pred, const LabelGrid& gt,
                                        std::span<const double> thresholds) {
    if (thresholds.empty()) throw ParameterError("no IoU thresholds given");
    const ContingencyTable table = contingency(pred, gt, false);

    std::unordered_map<std::uint32_t, std::uint64_t> pred_area, gt_area;
    for (const auto& [id, n] : table.pred_totals)
        if (id != 0) pred_area[id] = n;
    for (const auto& [id, n] : table.gt_totals)
        if (id != 0) gt_area[id] = n;
    if (gt_area.empty()) throw ValidationError("ground truth has no instances");

    struct Match {
        double iou;
        std::uint32_t pred, gt;
    };
    std::vector<Match> overlaps;
    for (const auto& c : table.cells) {
        if (c.pred == 0 || c.gt == 0) continue;
        const double uni = double(pred_area[c.pred] + gt_area[c.gt] - c.count);
        overlaps.push_back({double(c.count) / uni, c.pred, c.gt});
    }
    std::sort(overlaps.begin(), overlaps.end(), [](const Match& a, const Match& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.gt < b.gt;
    });

    AveragePrecision out;
    for (double t : thresholds) {
        std::unordered_map<std::uint32_t, bool> pred_used, gt_used;
        std::size_t tp = 0;
        for (const auto& m : overlaps) {
            if (!(m.iou > t)) break;
            if (pred_used[m.pred] || gt_used[m.gt]) continue;
            pred_used[m.pred] = gt_used[m.gt] = true;
            ++tp;
        }
        const std::size_t fp = pred_area.size() - tp;
        const std::size_t fn = gt_area.size() - tp;
        out.per_threshold.emplace_back(t, double(tp) / double(tp + fp + fn));
    }
    double sum = 0.0;
    for (const auto& [t, ap] : out.per_threshold) sum += ap;
    out.map = sum / double(out.per_threshold.size());
    return out;
}

MetricReport evaluate_slice(const LabelGrid& pred, const LabelGrid& gt, std::span<const double> thresholds) {
    const ContingencyTable table = contingency(pred, gt, true);
    const auto vi = variation_of_information(table);
    MetricReport r;
    r.vi = vi.vi;
    r.vi_merge = vi.merge;
    r.vi_split = vi.split;
    r.ari = adjusted_rand_index(table);
    const auto ap = mean_average_precision(pred, gt, thresholds);
    r.map = ap.map;
    r.per_threshold_ap = ap.per_threshold;
    return r;
}

MetricReport average_reports(std::span<const MetricReport> reports) {
    if (reports.empty()) throw ValidationError("no reports to average");
    MetricReport out;
    const double n = double(reports.size());
    bool all_map = true;
    double map_sum = 0.0;
    for (const auto& r : reports) {
        out.vi_merge += r.vi_merge;
        out.vi_split += r.vi_split;
        out.ari += r.ari;
        all_map &= r.map.has_value();
        if (r.map) map_sum += *r.map;
    }
    out.vi_merge /= n;
    out.vi_split /= n;
    out.ari /= n;
    out.vi = out.vi_merge + out.vi_split;
    if (all_map) out.map = map_sum / n;

    const auto& first = reports.front().per_threshold_ap;
    out.per_threshold_ap = first;
    for (auto& [t, ap] : out.per_threshold_ap) ap = 0.0;
    for (const auto& r : reports) {
        if (r.per_threshold_ap.size() != first.size()) throw ConsistencyError("threshold lists differ");
        for (std::size_t k = 0; k < first.size(); ++k) out.per_threshold_ap[k].second += r.per_threshold_ap[k].second;
    }
    for (auto& [t, ap] : out.per_threshold_ap) ap /= n;
    return out;
}

nlohmann::json to_json(const MetricReport& report) {
    nlohmann::json ap = nlohmann::json::array();
    for (const auto& [t, v] : report.per_threshold_ap) ap.push_back({{"iou_threshold", t}, {"ap", v}});
    return {{"vi", report.vi},
            {"vi_merge", report.vi_merge},
            {"vi_split", report.vi_split},
            {"ari", report.ari},
            {"map", report.map ? nlohmann::json(*report.map) : nlohmann::json(nullptr)},
            {"per_threshold_ap", ap}};
}

}  // namespace grainstack
