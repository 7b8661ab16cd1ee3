#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "grainstack/raster_io.hpp"
#include "grainstack/weighted_loss.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace grainstack;
using testing::Gen;
using testing::brute_loss;
using testing::brute_weights;

namespace {

ProbabilityGrid random_prediction(int w, int h, Gen& g) {
    ProbabilityGrid p(w, h, 2);
    for (std::size_t i = 0; i < p.pixel_count(); ++i) {
        const float v = float(g.uniform());
        p[2 * i + 1] = v;
        p[2 * i] = 1.0f - v;
    }
    return p;
}

BoundaryGrid small_mask(Gen& g) {
    return labels_to_boundary(testing::voronoi_labels(16, 16, g.between(2, 6), g), Connectivity::eight);
}

}  // namespace

TEST_CASE("weight field equals the per-grain brute force on Potts masks") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto mask = testing::potts_slice(64, 64, seed).boundary;
        const auto field = compute_weight_field(mask);
        const auto ref = brute_weights(mask, 10.0, 2.58);
        double worst = 0.0;
        for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
            worst = std::max(worst, std::abs(field.w_bck[i] - ref.w_bck[i]));
            worst = std::max(worst, std::abs(field.w_obj[i] - ref.w_obj[i]));
            worst = std::max(worst, std::abs(field.w_c[i] - ref.w_c[i]));
        }
        CAPTURE(seed);
        CHECK(worst < 1e-6);
        REQUIRE(field.per_grain.size() == ref.scale.size());
        for (const auto& [id, s] : field.per_grain) {
            CHECK(s.max_dis == doctest::Approx(ref.scale.at(id).first).epsilon(1e-12));
            CHECK(s.sigma == doctest::Approx(ref.scale.at(id).second).epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic anchors hold exactly") {
    Gen g(41);
    for (int trial = 0; trial < 10; ++trial) {
        const auto mask = testing::potts_slice(48, 48, 100 + trial).boundary;
        WeightParams params;
        params.w0 = 1.0 + 9.0 * g.uniform();
        const auto f = compute_weight_field(mask, params);
        for (std::size_t i = 0; i < mask.pixel_count(); ++i)
            if (mask[i]) REQUIRE(f.w_obj[i] == f.w_c[i] + params.w0);
        const auto dist = distance_transform(mask);
        for (const auto& [id, s] : f.per_grain) {
            CHECK(s.sigma == s.max_dis / 2.58);
            bool found = false;
            for (std::size_t i = 0; i < mask.pixel_count(); ++i)
                if (!mask[i] && f.grains[i] == id && dist[i] == s.max_dis) {
                    found = true;
                    REQUIRE(f.w_bck[i] == f.w_c[i] + params.w0);
                }
            CHECK(found);
        }
    }
}

TEST_CASE("weights fall off in the documented directions") {
    const auto mask = testing::potts_slice(48, 48, 7).boundary;
    const auto f = compute_weight_field(mask);
    const auto dist = distance_transform(mask);
    for (std::size_t i = 0; i < mask.pixel_count(); ++i)
        for (std::size_t j = 0; j < mask.pixel_count(); ++j)
            if (f.grains[i] == f.grains[j] && dist[i] < dist[j]) {
                REQUIRE(f.w_obj[i] - f.w_c[i] >= f.w_obj[j] - f.w_c[j]);
                REQUIRE(f.w_bck[i] - f.w_c[i] <= f.w_bck[j] - f.w_c[j]);
            }
}

TEST_CASE("m_d is the dilated mask at the default radius") {
    const auto mask = testing::potts_slice(32, 32, 3).boundary;
    const auto f = compute_weight_field(mask);
    CHECK(f.params.dilate_radius == 2.0);
    CHECK(f.m_d == dilate(mask, 2.0));
}

TEST_CASE("class balance policies") {
    BoundaryGrid m(4, 1, 1, std::vector<std::uint8_t>{1, 0, 0, 0});
    const auto freq = class_balance_weights(m, ClassBalance::frequency);
    CHECK(freq[0] == 2.0);
    CHECK(freq[1] == doctest::Approx(4.0 / 6.0));
    const auto none = class_balance_weights(m, ClassBalance::none);
    CHECK(none[0] == 1.0);
    CHECK_THROWS_AS(class_balance_weights(BoundaryGrid(2, 2), ClassBalance::frequency), ValidationError);
    CHECK(parse_class_balance("none") == ClassBalance::none);
    CHECK_THROWS_AS(parse_class_balance("median"), ParameterError);
}

TEST_CASE("degenerate masks and parameters are rejected") {
    CHECK_THROWS_AS(compute_weight_field(BoundaryGrid(4, 4)), ValidationError);
    CHECK_THROWS_AS(compute_weight_field(BoundaryGrid(4, 4, 1, 1)), ValidationError);
    WeightParams bad;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = {};
    bad.w0 = -1;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = {};
    bad.dilate_radius = -0.5;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("loss equals the double loop on random instances") {
    Gen g(43);
    for (int trial = 0; trial < 50; ++trial) {
        const auto mask = small_mask(g);
        const auto f = compute_weight_field(mask);
        const auto p = random_prediction(16, 16, g);
        const auto r = evaluate_loss(p, f);
        const double ref = brute_loss(p, f);
        CHECK(std::abs(r.loss - ref) <= 1e-9 * std::abs(ref));
        double sum = 0.0;
        for (std::size_t i = 0; i < p.pixel_count(); ++i) {
            sum += r.terms[i];
            REQUIRE(r.terms[i] <= 0.0);
            REQUIRE(r.object_branch[i] == (f.w_bck[i] >= f.w_obj[i] * f.m_d[i] ? 0 : 1));
        }
        CHECK(-sum == r.loss);
    }
}

TEST_CASE("loss is zero when the selected branch has probability one") {
    Gen g(47);
    for (int trial = 0; trial < 10; ++trial) {
        const auto f = compute_weight_field(small_mask(g));
        ProbabilityGrid p(16, 16, 2);
        for (std::size_t i = 0; i < p.pixel_count(); ++i) {
            const bool object = f.w_bck[i] < f.w_obj[i] * f.m_d[i];
            p[2 * i + (object ? 1 : 0)] = 1.0f;
        }
        const auto r = evaluate_loss(p, f);
        CHECK(r.loss == 0.0);
        CHECK(r.clamped == 0);
    }
}

TEST_CASE("without the dilated band the loss is background weighted cross-entropy") {
    Gen g(53);
    for (int trial = 0; trial < 20; ++trial) {
        auto f = compute_weight_field(small_mask(g));
        f.m_d = BoundaryGrid(16, 16);
        const auto p = random_prediction(16, 16, g);
        double ce = 0.0;
        for (std::size_t i = 0; i < p.pixel_count(); ++i) ce -= f.w_bck[i] * std::log(double(p[2 * i]));
        const auto r = evaluate_loss(p, f);
        CHECK(r.loss == doctest::Approx(ce).epsilon(1e-12));
        for (auto v : r.object_branch.data()) REQUIRE(v == 0);
    }
}

TEST_CASE("zero probability on the selected branch is clamped and counted") {
    Gen g(59);
    auto f = compute_weight_field(small_mask(g));
    f.m_d = BoundaryGrid(16, 16);
    ProbabilityGrid p(16, 16, 2);
    for (std::size_t i = 0; i < p.pixel_count(); ++i) p[2 * i + 1] = 1.0f;
    const auto r = evaluate_loss(p, f);
    CHECK(r.clamped == p.pixel_count());
    double ref = 0.0;
    for (std::size_t i = 0; i < p.pixel_count(); ++i) ref -= f.w_bck[i] * std::log(1e-12);
    CHECK(r.loss == doctest::Approx(ref).epsilon(1e-12));
    CHECK(std::isfinite(r.loss));
}

TEST_CASE("loss rejects mismatched or invalid predictions") {
    Gen g(61);
    const auto f = compute_weight_field(small_mask(g));
    CHECK_THROWS_AS(evaluate_loss(ProbabilityGrid(8, 8, 2), f), ConsistencyError);
    CHECK_THROWS_AS(evaluate_loss(ProbabilityGrid(16, 16, 2), f), ValidationError);
}

TEST_CASE("weight files round trip at float precision") {
    testing::TempDir tmp("weights");
    const auto f = compute_weight_field(testing::potts_slice(32, 32, 9).boundary);
    save_weight_field(f, tmp.path / "w.gsr", tmp.path / "w.json");
    const auto raw = read_gsr(tmp.path / "w.gsr");
    CHECK(raw.channels() == 3);
    std::ifstream in(tmp.path / "w.json");
    const auto doc = nlohmann::json::parse(in);
    for (const char* key : {"w0", "gamma", "dilate_radius", "class_balance", "per_grain"}) CHECK(doc.contains(key));

    const auto back = load_weight_field(tmp.path / "w.gsr", tmp.path / "w.json");
    CHECK(back.params == f.params);
    CHECK(back.per_grain == f.per_grain);
    CHECK(back.m_d == f.m_d);
    for (std::size_t i = 0; i < raw.pixel_count(); ++i) {
        REQUIRE(back.w_bck[i] == double(float(f.w_bck[i])));
        REQUIRE(back.w_obj[i] == double(float(f.w_obj[i])));
    }
    CHECK_THROWS_AS(load_weight_field(tmp.path / "w.gsr", tmp.path / "absent.json"), ResolutionError);
}
