#include <doctest.h>

#include <fstream>
#include <set>

#include <json.hpp>

#include "grainstack/raster_io.hpp"
#include "grainstack/tracking.hpp"
#include "test_support.hpp"

using namespace grainstack;
using testing::Gen;
namespace fs = std::filesystem;

namespace {

void fill(LabelGrid& g, int x0, int y0, int x1, int y1, std::uint16_t id) {
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) g(x, y) = id;
}

class ConstantBackend final : public SimilarityBackend {
public:
    explicit ConstantBackend(double v) : v_(v) {}
    std::vector<double> score(std::span<const CandidatePair> pairs, const LabelGrid&, const LabelGrid&) override {
        return std::vector<double>(pairs.size(), v_);
    }

private:
    double v_;
};

// Scores each pair by the channel IoU of its crop, as the fake scorer does.
class CropIouBackend final : public SimilarityBackend {
public:
    explicit CropIouBackend(int crop) : crop_(crop) {}
    std::vector<double> score(std::span<const CandidatePair> pairs, const LabelGrid& last,
                              const LabelGrid& current) override {
        std::vector<double> out;
        for (const auto& p : pairs) {
            const auto c = make_pair_crop(p, last, current, crop_);
            double inter = 0, uni = 0;
            for (int y = 0; y < crop_; ++y)
                for (int x = 0; x < crop_; ++x) {
                    const bool a = c(x, y, 0) > 0.5f, b = c(x, y, 1) > 0.5f;
                    inter += a && b;
                    uni += a || b;
                }
            out.push_back(uni > 0 ? inter / uni : 0.0);
        }
        return out;
    }

private:
    int crop_;
};

class BadCountBackend final : public SimilarityBackend {
public:
    std::vector<double> score(std::span<const CandidatePair>, const LabelGrid&, const LabelGrid&) override {
        return {0.5};
    }
};

std::vector<LabelGrid> potts_stack(std::uint64_t seed, int w, int h, int d, int sweeps) {
    PottsConfig c;
    c.width = w;
    c.height = h;
    c.depth = d;
    c.steps = sweeps;
    c.seed = seed;
    PottsOptions o;
    o.record_trace = false;
    const auto spins = potts_grow(c, o).spins;
    std::vector<LabelGrid> out;
    for (int z = 0; z < d; ++z) out.push_back(connected_components(render_slice(spins, z).boundary));
    return out;
}

void check_invariants(const TrackResult& r, std::span<const LabelGrid> stack) {
    REQUIRE(r.assignments.size() == stack.size());
    for (std::size_t z = 0; z < stack.size(); ++z) {
        std::set<std::uint32_t> ids, labels;
        for (auto v : stack[z].data())
            if (v) ids.insert(v);
        for (const auto& [id, label] : r.assignments[z]) {
            REQUIRE(ids.count(id));
            REQUIRE(labels.insert(label).second);  // injective within a slice
            REQUIRE((label >= 1 && label <= r.label_count));
        }
        REQUIRE(r.assignments[z].size() == ids.size());
    }
    std::set<std::uint32_t> started;
    for (const auto& e : r.new_labels) REQUIRE(started.insert(e.label).second);
    CHECK(started.size() == r.label_count);
    // A label lives on consecutive slices only.
    std::map<std::uint32_t, std::pair<int, int>> span;
    for (std::size_t z = 0; z < stack.size(); ++z)
        for (const auto& [id, label] : r.assignments[z]) {
            auto [it, fresh] = span.emplace(label, std::pair<int, int>{int(z), int(z)});
            if (!fresh) {
                REQUIRE(it->second.second == int(z) - 1);
                it->second.second = int(z);
            }
        }
    for (const auto& e : r.new_labels) REQUIRE(span.at(e.label).first == e.slice);
    for (const auto& e : r.terminated) REQUIRE(span.at(e.label).second == e.slice);
}

}  // namespace

TEST_CASE("identical slices keep every label") {
    Gen g(101);
    const auto base = testing::voronoi_labels(40, 30, 9, g);
    const std::vector<LabelGrid> stack(5, base);
    const auto out = track_stack(stack, TrackerConfig{});
    check_invariants(out.result, stack);
    CHECK(out.result.label_count == 9);
    CHECK(out.result.new_labels.size() == 9);
    CHECK(out.result.terminated.empty());
    for (std::size_t z = 1; z < stack.size(); ++z) CHECK(out.result.assignments[z] == out.result.assignments[0]);
}

TEST_CASE("a region present in a single slice starts and ends there") {
    LabelGrid a(32, 32), b(32, 32);
    fill(a, 0, 0, 16, 32, 1);
    fill(a, 16, 0, 32, 32, 2);
    b = a;
    fill(b, 4, 4, 8, 8, 3);
    const std::vector<LabelGrid> stack{a, b, a};
    const auto r = track_stack(stack, TrackerConfig{}).result;
    check_invariants(r, stack);
    CHECK(r.label_count == 3);
    CHECK(r.new_labels.back() == TrackEvent{3, 1});
    CHECK(r.terminated == std::vector<TrackEvent>{{3, 1}});
    CHECK(r.assignments[2] == r.assignments[0]);
}

TEST_CASE("a 60/40 split keeps the label on the larger part") {
    LabelGrid a(40, 20), b(40, 20);
    fill(a, 0, 0, 40, 20, 1);
    fill(b, 0, 0, 24, 20, 1);
    fill(b, 24, 0, 40, 20, 2);
    const std::vector<LabelGrid> stack{a, b};
    for (auto norm : {OverlapNorm::iou, OverlapNorm::min_area}) {
        TrackerConfig c;
        c.overlap_norm = norm;
        const auto r = track_stack(stack, c).result;
        CHECK(r.assignments[1].at(1) == 1);
        CHECK(r.assignments[1].at(2) == 2);
        CHECK(r.new_labels.back() == TrackEvent{2, 1});
    }
}

TEST_CASE("half-overlapping squares under both normalizations") {
    LabelGrid a(30, 30), b(30, 30);
    fill(a, 0, 0, 10, 10, 1);
    fill(b, 5, 0, 15, 10, 1);
    const auto pairs = enumerate_candidates(a, b, 1);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].overlap_area == 50);
    CHECK(max_overlap_similarity(pairs[0], OverlapNorm::min_area) == 0.5);
    CHECK(max_overlap_similarity(pairs[0], OverlapNorm::iou) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(pairs[0].centroid_distance == 5.0);
    // Union box 15 x 10.
    CHECK(min_centroid_similarity(pairs[0]) == doctest::Approx(std::exp(-5.0 / std::hypot(15.0, 10.0))));

    TrackerConfig c;
    c.overlap_norm = OverlapNorm::min_area;
    CHECK(track_stack(std::vector<LabelGrid>{a, b}, c).result.label_count == 1);
    c.overlap_norm = OverlapNorm::iou;
    CHECK(track_stack(std::vector<LabelGrid>{a, b}, c).result.label_count == 2);
}

TEST_CASE("candidates match a direct overlap count") {
    Gen g(103);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = testing::voronoi_labels(30, 26, g.between(2, 10), g);
        auto b = testing::voronoi_labels(30, 26, g.between(2, 10), g);
        for (auto& v : a.data()) v = g.uniform() < 0.1 ? 0 : v;
        const auto pairs = enumerate_candidates(a, b, 3);
        const auto ref = testing::brute_pairs(testing::widen(b), testing::widen(a), true);
        REQUIRE(pairs.size() == ref.size());
        std::size_t k = 0;
        for (const auto& [key, count] : ref) {
            CHECK(pairs[k].this_region.id == key.first);
            CHECK(pairs[k].last_region.id == key.second);
            CHECK(pairs[k].overlap_area == count);
            CHECK(pairs[k].this_region.slice_index == 3);
            CHECK(pairs[k].last_region.slice_index == 2);
            ++k;
        }
    }
}

TEST_CASE("equal scores: larger overlap, then smaller predecessor id") {
    // Slice 0: ids 1 (left, narrow) and 2 (right, wide). Slice 1: one region
    // covering both, so both pairs score the same under a constant backend.
    LabelGrid a(30, 10), b(30, 10, 1, 1);
    fill(a, 0, 0, 10, 10, 1);
    fill(a, 10, 0, 30, 10, 2);
    const std::vector<LabelGrid> stack{a, b};
    ConstantBackend constant(0.7);
    TrackerConfig c;
    auto r = track_stack(stack, c, constant).result;
    CHECK(r.assignments[1].at(1) == 2);
    c.tie_break = TieBreak::smaller_id;
    r = track_stack(stack, c, constant).result;
    CHECK(r.assignments[1].at(1) == 1);
    CHECK(r.terminated == std::vector<TrackEvent>{{2, 0}});
}

TEST_CASE("scores below the threshold never link") {
    Gen g(107);
    const auto base = testing::voronoi_labels(20, 20, 5, g);
    const std::vector<LabelGrid> stack(3, base);
    ConstantBackend low(0.3);
    const auto r = track_stack(stack, TrackerConfig{}, low).result;
    CHECK(r.label_count == 15);
    CHECK(r.terminated.size() == 10);
    for (const auto& s : r.similarity_log) CHECK_FALSE(s.chosen);
}

TEST_CASE("tracking invariants on Potts stacks") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto stack = potts_stack(seed, 40, 40, 10, 40);
        for (auto backend : {BackendKind::max_overlap, BackendKind::min_centroid}) {
            TrackerConfig c;
            c.backend = backend;
            const auto a = track_stack(stack, c);
            check_invariants(a.result, stack);
            const auto b = track_stack(stack, c);
            CHECK(a.result == b.result);
            CHECK(a.volume == b.volume);
            for (int z = 0; z < a.volume.depth(); ++z) {
                const auto s = a.volume.slice(z);
                for (std::size_t i = 0; i < s.size(); ++i) REQUIRE((s[i] == 0) == (stack[z][i] == 0));
            }
            std::size_t chosen = 0;
            for (const auto& rec : a.result.similarity_log) chosen += rec.chosen;
            CHECK(chosen + a.result.new_labels.size() ==
                  [&] {
                      std::size_t n = 0;
                      for (const auto& m : a.result.assignments) n += m.size();
                      return n;
                  }());
        }
    }
}

TEST_CASE("raising the threshold never reduces the number of tracks") {
    const auto stack = potts_stack(5, 40, 40, 10, 40);
    std::uint32_t previous = 0;
    for (double t = 0.0; t <= 1.0001; t += 0.1) {
        TrackerConfig c;
        c.threshold = std::min(t, 1.0);
        const auto r = track_stack(stack, c).result;
        CHECK(r.label_count >= previous);
        previous = r.label_count;
    }
}

TEST_CASE("pair crops sample the union box at pixel centres") {
    LabelGrid a(40, 40), b(40, 40);
    fill(a, 3, 5, 13, 25, 4);
    fill(b, 8, 10, 30, 20, 6);
    const auto pairs = enumerate_candidates(a, b, 1);
    REQUIRE(pairs.size() == 1);
    const int crop = 16;
    const auto c = make_pair_crop(pairs[0], a, b, crop);
    REQUIRE(c.width() == crop);
    REQUIRE(c.channels() == 2);
    // Union box x 3..29 (27 wide), y 5..24 (20 high).
    for (int y = 0; y < crop; ++y)
        for (int x = 0; x < crop; ++x) {
            const int sx = 3 + int((x + 0.5) * 27 / crop);
            const int sy = 5 + int((y + 0.5) * 20 / crop);
            REQUIRE(c(x, y, 0) == (a(sx, sy) == 4 ? 1.0f : 0.0f));
            REQUIRE(c(x, y, 1) == (b(sx, sy) == 6 ? 1.0f : 0.0f));
        }
    CHECK(testing::fnv1a(c.data().data(), c.element_count() * sizeof(float)) == 2703823140873071235ull);
}

TEST_CASE("configuration checks and names") {
    TrackerConfig c;
    c.threshold = 1.5;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.crop_size = 8;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.backend = BackendKind::external;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    for (auto k : {BackendKind::max_overlap, BackendKind::min_centroid, BackendKind::external})
        CHECK(parse_backend(backend_name(k)) == k);
    for (auto t : {TieBreak::larger_overlap, TieBreak::smaller_id}) CHECK(parse_tie_break(tie_break_name(t)) == t);
    for (auto n : {OverlapNorm::iou, OverlapNorm::min_area}) CHECK(parse_overlap_norm(overlap_norm_name(n)) == n);
    CHECK_THROWS_AS(parse_backend("siamese"), ParameterError);
    const auto doc = to_json(TrackerConfig{});
    CHECK(doc.at("backend") == "max_overlap");
    CHECK(doc.at("threshold") == 0.5);
    CHECK(doc.at("overlap_norm") == "iou");
}

TEST_CASE("bad stacks and misbehaving backends") {
    CHECK_THROWS_AS(track_stack(std::vector<LabelGrid>{}, TrackerConfig{}), ValidationError);
    LabelGrid a(4, 4, 1, 1), b(5, 4, 1, 1);
    CHECK_THROWS_AS(track_stack(std::vector<LabelGrid>{a, b}, TrackerConfig{}), ConsistencyError);
    BadCountBackend bad;
    LabelGrid c(4, 4, 1, 1);
    fill(c, 0, 0, 2, 4, 2);
    CHECK_THROWS_AS(track_stack(std::vector<LabelGrid>{a, c}, TrackerConfig{}, bad), BackendError);
    ConstantBackend above(1.2);
    CHECK_THROWS_AS(track_stack(std::vector<LabelGrid>{a, a}, TrackerConfig{}, above), BackendError);
}

TEST_CASE("track results round trip through JSON") {
    const auto stack = potts_stack(7, 32, 32, 6, 30);
    const auto r = track_stack(stack, TrackerConfig{}).result;
    const auto doc = to_json(r);
    CHECK(track_result_from_json(nlohmann::json::parse(doc.dump())) == r);
    CHECK(assemble_volume(stack, r) == track_stack(stack, TrackerConfig{}).volume);
    auto broken = doc;
    broken.erase("assignments");
    CHECK_THROWS_AS(track_result_from_json(broken), FormatError);
}

TEST_CASE("evaluate_tracking of a perfect reconstruction") {
    const auto stack = potts_stack(9, 32, 32, 6, 30);
    const auto out = track_stack(stack, TrackerConfig{});
    const auto rep = evaluate_tracking(out.volume, out.volume);
    CHECK(rep.vi == 0.0);
    CHECK(rep.ari == 1.0);
    CHECK_FALSE(rep.map.has_value());
}

TEST_CASE("external scorer: batch files follow the protocol") {
    testing::TempDir tmp("batch");
    const auto stack = potts_stack(11, 32, 32, 3, 30);
    const auto pairs = enumerate_candidates(stack[0], stack[1], 1);
    write_pair_batch(tmp.path, pairs, stack[0], stack[1], 24);
    const auto crops = read_gsr(tmp.path / "pairs.gsr");
    CHECK(crops.width() == 24);
    CHECK(crops.height() == int(pairs.size()) * 24);
    CHECK(crops.channels() == 2);
    for (float v : crops.data()) REQUIRE((v == 0.0f || v == 1.0f));
    std::ifstream in(tmp.path / "pairs.json");
    const auto doc = nlohmann::json::parse(in);
    CHECK(doc.at("crop_size") == 24);
    REQUIRE(doc.at("pairs").size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(doc["pairs"][i]["row"] == i);
        CHECK(doc["pairs"][i]["this_id"] == pairs[i].this_region.id);
        CHECK(doc["pairs"][i]["last_id"] == pairs[i].last_region.id);
        const auto crop = make_pair_crop(pairs[i], stack[0], stack[1], 24);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x)
                for (int k = 0; k < 2; ++k) REQUIRE(crops(x, int(i) * 24 + y, k) == crop(x, y, k));
    }
}

TEST_CASE("external scorer: results match the in-process equivalent") {
    ::unsetenv("FAKE_SCORER_MODE");
    const auto stack = potts_stack(13, 40, 40, 6, 40);
    TrackerConfig c;
    c.backend = BackendKind::external;
    c.scorer = FAKE_SCORER;
    c.crop_size = 32;
    ExternalScorerBackend ext(c.scorer, c.crop_size);
    const auto via_process = track_stack(stack, c, ext);
    CHECK(ext.batches_sent() == stack.size() - 1);
    CropIouBackend local(32);
    const auto in_process = track_stack(stack, c, local);
    CHECK(via_process.result == in_process.result);

    ::setenv("FAKE_SCORER_MODE", "reversed", 1);
    CHECK(track_stack(stack, c).result == in_process.result);
    ::unsetenv("FAKE_SCORER_MODE");
}

TEST_CASE("external scorer: batches kept on request") {
    testing::TempDir tmp("keep");
    ::unsetenv("FAKE_SCORER_MODE");
    const auto stack = potts_stack(15, 32, 32, 3, 30);
    ExternalScorerBackend ext(FAKE_SCORER, 16, tmp.path, true);
    TrackerConfig c;
    track_stack(stack, c, ext);
    CHECK(fs::exists(tmp.path / "batch_00000" / "pairs.gsr"));
    CHECK(fs::exists(tmp.path / "batch_00001" / "scores.json"));
}

TEST_CASE("external scorer: every failure is a BackendError") {
    const auto stack = potts_stack(17, 32, 32, 2, 30);
    TrackerConfig c;
    c.backend = BackendKind::external;
    c.scorer = FAKE_SCORER;
    for (const char* mode : {"fail", "garbage", "out_of_range", "missing", "duplicate", "silent"}) {
        CAPTURE(mode);
        ::setenv("FAKE_SCORER_MODE", mode, 1);
        CHECK_THROWS_AS(track_stack(stack, c), BackendError);
    }
    ::unsetenv("FAKE_SCORER_MODE");
    c.scorer = "/nonexistent/scorer";
    CHECK_THROWS_AS(track_stack(stack, c), BackendError);
}

TEST_CASE("read_scores validates its input") {
    testing::TempDir tmp("scores");
    auto write = [&](const std::string& text) { std::ofstream(tmp.path / "scores.json") << text; };
    write(R"([{"row": 1, "similarity": 0.25}, {"row": 0, "similarity": 1}])");
    CHECK(read_scores(tmp.path, 2) == std::vector<double>{1.0, 0.25});
    write(R"({"row": 0})");
    CHECK_THROWS_AS(read_scores(tmp.path, 1), BackendError);
    write(R"([{"row": 0.5, "similarity": 0.2}])");
    CHECK_THROWS_AS(read_scores(tmp.path, 1), BackendError);
    write(R"([{"row": 0, "similarity": "high"}])");
    CHECK_THROWS_AS(read_scores(tmp.path, 1), BackendError);
    write(R"([{"row": 3, "similarity": 0.2}])");
    CHECK_THROWS_AS(read_scores(tmp.path, 1), BackendError);
    write(R"([{"row": 0, "similarity": -0.01}])");
    CHECK_THROWS_AS(read_scores(tmp.path, 1), BackendError);
    fs::remove(tmp.path / "scores.json");
    CHECK_THROWS_AS(read_scores(tmp.path, 1), BackendError);
}

TEST_CASE("run_process reports exit status") {
    CHECK(run_process("/bin/true", "x") == 0);
    CHECK(run_process("/bin/false", "x") == 1);
}
