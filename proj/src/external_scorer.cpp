#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <system_error>

#include "grainstack/errors.hpp"
#include "grainstack/raster_io.hpp"
#include "grainstack/tracking.hpp"

extern char** environ;

namespace grainstack {

namespace fs = std::filesystem;

int run_process(const fs::path& program, const std::string& arg) {
    const std::string prog = program.string();
    std::vector<char*> argv{const_cast<char*>(prog.c_str()), const_cast<char*>(arg.c_str()), nullptr};
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, prog.c_str(), nullptr, nullptr, argv.data(), environ);
    if (rc != 0) throw BackendError("cannot start scorer '" + prog + "': " + std::strerror(rc));
    int status = 0;
    while (waitpid(pid, &status, 0) < 0)
        if (errno != EINTR) throw BackendError("lost track of scorer process: " + std::string(std::strerror(errno)));
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -1;
}

void write_pair_batch(const fs::path& dir, std::span<const CandidatePair> pairs, const LabelGrid& last,
                      const LabelGrid& current, int crop_size) {
    fs::create_directories(dir);
    const std::size_t plane = std::size_t(crop_size) * std::size_t(crop_size) * 2;
    FloatRaster stacked(crop_size, crop_size * int(pairs.size()), 2);
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto crop = make_pair_crop(pairs[i], last, current, crop_size);
        std::copy(crop.data().begin(), crop.data().end(), stacked.data().begin() + std::ptrdiff_t(i * plane));
        rows.push_back({{"row", i}, {"this_id", pairs[i].this_region.id}, {"last_id", pairs[i].last_region.id}});
    }
    write_gsr(stacked, dir / "pairs.gsr");
    std::ofstream out(dir / "pairs.json");
    out << nlohmann::json{{"crop_size", crop_size}, {"pairs", std::move(rows)}}.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + (dir / "pairs.json").string());
}

std::vector<double> read_scores(const fs::path& dir, std::size_t expected_rows) {
    const auto path = dir / "scores.json";
    std::ifstream in(path);
    if (!in) throw BackendError("scorer wrote no " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("scores.json is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_array()) throw BackendError("scores.json must be an array");

    std::vector<double> scores(expected_rows, 0.0);
    std::vector<bool> seen(expected_rows, false);
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("row") || !entry.contains("similarity") ||
            !entry["row"].is_number_integer() || !entry["similarity"].is_number())
            throw BackendError("scores.json entries need integer 'row' and numeric 'similarity'");
        const auto row = entry["row"].get<long long>();
        const double s = entry["similarity"].get<double>();
        if (row < 0 || std::size_t(row) >= expected_rows)
            throw BackendError("scores.json row " + std::to_string(row) + " out of range");
        if (seen[std::size_t(row)]) throw BackendError("scores.json repeats row " + std::to_string(row));
        if (!(s >= 0.0 && s <= 1.0))
            throw BackendError("similarity " + std::to_string(s) + " for row " + std::to_string(row) +
                               " outside [0, 1]");
        scores[std::size_t(row)] = s;
        seen[std::size_t(row)] = true;
    }
    for (std::size_t i = 0; i < expected_rows; ++i)
        if (!seen[i]) throw BackendError("scores.json lacks row " + std::to_string(i));
    return scores;
}

ExternalScorerBackend::ExternalScorerBackend(fs::path scorer, int crop_size, fs::path work_dir, bool keep_batches)
    : scorer_(std::move(scorer)), crop_size_(crop_size), work_dir_(std::move(work_dir)),
      keep_batches_(keep_batches) {
    if (crop_size_ < 16) throw ParameterError("crop size must be >= 16");
    if (!fs::exists(scorer_)) throw BackendError("scorer '" + scorer_.string() + "' does not exist");
    if (work_dir_.empty()) {
        std::string pattern = (fs::temp_directory_path() / "grainstack-XXXXXX").string();
        if (!mkdtemp(pattern.data())) throw IoError("cannot create scratch directory for scorer batches");
        work_dir_ = pattern;
        owns_work_dir_ = true;
    } else {
        fs::create_directories(work_dir_);
    }
}

ExternalScorerBackend::~ExternalScorerBackend() {
    if (owns_work_dir_ && !keep_batches_) {
        std::error_code ec;
        fs::remove_all(work_dir_, ec);
    }
}

std::vector<double> ExternalScorerBackend::score(std::span<const CandidatePair> pairs, const LabelGrid& last,
                                                 const LabelGrid& current) {
    if (pairs.empty()) return {};
    char name[32];
    std::snprintf(name, sizeof name, "batch_%05zu", batches_);
    const auto dir = work_dir_ / name;
    fs::remove_all(dir);
    write_pair_batch(dir, pairs, last, current, crop_size_);
    ++batches_;
    const int status = run_process(scorer_, dir.string());
    if (status != 0)
        throw BackendError("scorer '" + scorer_.string() + "' exited with status " + std::to_string(status) +
                           " on " + dir.string());
    auto scores = read_scores(dir, pairs.size());
    if (!keep_batches_) {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    return scores;
}

}  // namespace grainstack
