#include <doctest.h>

#include <set>

#include "grainstack/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace grainstack;
using testing::Gen;
using testing::ari_from_pairs;
using testing::conditional_entropies;
using testing::count_pairs;

namespace {

LabelGrid noisy_copy(const LabelGrid& src, Gen& g, double rate, int max_id) {
    LabelGrid out = src;
    for (auto& v : out.data())
        if (g.uniform() < rate) v = std::uint16_t(g.between(0, max_id));
    return out;
}

}  // namespace

TEST_CASE("identical partitions score perfectly") {
    Gen g(71);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = testing::voronoi_labels(32, 32, g.between(1, 12), g);
        const auto r = evaluate_slice(p, p, default_iou_thresholds());
        CHECK(r.vi == 0.0);
        CHECK(r.vi_merge == 0.0);
        CHECK(r.vi_split == 0.0);
        CHECK(r.ari == 1.0);
        CHECK(*r.map == 1.0);
    }
}

TEST_CASE("two halves merged into one region") {
    LabelGrid gt(8, 8), pred(8, 8, 1, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) gt(x, y) = x < 4 ? 1 : 2;
    const auto r = evaluate_slice(pred, gt, default_iou_thresholds());
    CHECK(r.vi_merge == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.vi_split == 0.0);
    CHECK(r.ari == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.vi == r.vi_merge + r.vi_split);

    const auto flipped = evaluate_slice(gt, pred, default_iou_thresholds());
    CHECK(flipped.vi_split == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(flipped.vi_merge == 0.0);
}

TEST_CASE("random pairs match the pair-counting and entropy oracles") {
    Gen g(73);
    for (int trial = 0; trial < 100; ++trial) {
        const auto gt = testing::voronoi_labels(32, 32, g.between(2, 15), g);
        const auto pred = noisy_copy(testing::voronoi_labels(32, 32, g.between(2, 15), g), g, 0.1, 20);
        const auto pw = testing::widen(pred), gw = testing::widen(gt);
        const auto table = contingency(pred, gt, true);

        const auto cells = testing::brute_pairs(pw, gw, true);
        REQUIRE(table.cells.size() == cells.size());
        for (const auto& c : table.cells) REQUIRE(cells.at({c.pred, c.gt}) == c.count);

        const auto vi = variation_of_information(table);
        const auto [split, merge] = conditional_entropies(pw, gw);
        CHECK(std::abs(vi.split - split) < 1e-9);
        CHECK(std::abs(vi.merge - merge) < 1e-9);
        CHECK(vi.vi == vi.split + vi.merge);

        CHECK(std::abs(adjusted_rand_index(table) - ari_from_pairs(count_pairs(pw, gw))) < 1e-9);
    }
}

TEST_CASE("pixels with id 0 on either side are left out") {
    LabelGrid p(4, 1, 1, std::vector<std::uint16_t>{1, 0, 2, 2});
    LabelGrid q(4, 1, 1, std::vector<std::uint16_t>{1, 1, 0, 3});
    const auto t = contingency(p, q, true);
    CHECK(t.total == 2);
    CHECK(t.cells.size() == 2);
    const auto all = contingency(p, q, false);
    CHECK(all.total == 4);
}

TEST_CASE("average precision on a hand-built case") {
    LabelGrid gt(40, 20), pred(40, 20);
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 13; ++x) gt(x, y) = 1;
        for (int x = 0; x < 11; ++x) pred(x, y) = 5;
        for (int x = 20; x < 30; ++x) gt(x, y) = 2, pred(x, y) = 7;
    }
    // IoU 110/130 for the first pair, so it only counts below 0.85.
    const auto ap = mean_average_precision(pred, gt, default_iou_thresholds());
    REQUIRE(ap.per_threshold.size() == 10);
    for (int k = 0; k < 7; ++k) CHECK(ap.per_threshold[k].second == 1.0);
    for (int k = 7; k < 10; ++k) CHECK(ap.per_threshold[k].second == doctest::Approx(1.0 / 3.0));
    CHECK(ap.map == doctest::Approx(0.8));
}

TEST_CASE("average precision matches direct matching on random pairs") {
    Gen g(79);
    const auto thresholds = default_iou_thresholds();
    for (int trial = 0; trial < 30; ++trial) {
        const auto gt = testing::voronoi_labels(24, 24, g.between(2, 10), g);
        const auto pred = noisy_copy(gt, g, 0.15, 12);
        const auto ap = mean_average_precision(pred, gt, thresholds);

        std::map<std::uint32_t, double> pa, ga;
        for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
            if (pred[i]) pa[pred[i]] += 1;
            if (gt[i]) ga[gt[i]] += 1;
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
            // Greedy by IoU with full rescans.
            std::set<std::uint32_t> up, ug;
            std::size_t tp = 0;
            while (true) {
                double best = -1;
                std::uint32_t bp = 0, bg = 0;
                for (auto [i, a] : pa)
                    for (auto [j, b] : ga) {
                        if (up.count(i) || ug.count(j)) continue;
                        double inter = 0;
                        for (std::size_t q = 0; q < gt.pixel_count(); ++q) inter += pred[q] == i && gt[q] == j;
                        const double iou = inter / (a + b - inter);
                        if (iou > thresholds[k] && iou > best) best = iou, bp = i, bg = j;
                    }
                if (best < 0) break;
                up.insert(bp);
                ug.insert(bg);
                ++tp;
            }
            const double v = double(tp) / double(pa.size() + ga.size() - tp);
            CHECK(ap.per_threshold[k].second == doctest::Approx(v).epsilon(1e-12));
            sum += v;
        }
        CHECK(ap.map == doctest::Approx(sum / thresholds.size()).epsilon(1e-12));
    }
}

TEST_CASE("degenerate inputs") {
    LabelGrid a(3, 3, 1, 1);
    const auto t = contingency(a, a, true);
    CHECK(adjusted_rand_index(t) == 1.0);
    LabelGrid z(3, 3);
    CHECK_THROWS_AS(variation_of_information(contingency(z, a, true)), ValidationError);
    CHECK_THROWS_AS(contingency(LabelGrid(2, 2), LabelGrid(3, 2), true), ConsistencyError);
    CHECK_THROWS_AS(mean_average_precision(a, z, default_iou_thresholds()), ValidationError);
}

TEST_CASE("averaging keeps vi equal to its parts") {
    Gen g(83);
    std::vector<MetricReport> rs;
    for (int i = 0; i < 5; ++i) {
        const auto gt = testing::voronoi_labels(20, 20, 6, g);
        rs.push_back(evaluate_slice(noisy_copy(gt, g, 0.2, 8), gt, default_iou_thresholds()));
    }
    const auto avg = average_reports(rs);
    CHECK(avg.vi == avg.vi_merge + avg.vi_split);
    double ari = 0;
    for (const auto& r : rs) ari += r.ari / 5.0;
    CHECK(avg.ari == doctest::Approx(ari));
    const auto doc = to_json(avg);
    CHECK(doc.at("per_threshold_ap").size() == 10);
    CHECK(doc.at("map").is_number());
}
