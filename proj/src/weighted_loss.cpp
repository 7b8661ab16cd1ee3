#include "grainstack/weighted_loss.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "grainstack/morphology.hpp"
#include "grainstack/raster_io.hpp"

namespace grainstack {

std::string_view class_balance_name(ClassBalance policy) {
    return policy == ClassBalance::frequency ? "frequency" : "none";
}

ClassBalance parse_class_balance(std::string_view name) {
    if (name == "frequency") return ClassBalance::frequency;
    if (name == "none") return ClassBalance::none;
    throw ParameterError("class balance must be 'frequency' or 'none', got '" + std::string(name) + "'");
}

void WeightParams::validate() const {
    if (!(w0 >= 0.0)) throw ParameterError("w0 must be >= 0");
    if (!(gamma > 0.0)) throw ParameterError("gamma must be > 0");
    if (!(dilate_radius >= 0.0)) throw ParameterError("dilate radius must be >= 0");
}

Raster<double> class_balance_weights(const BoundaryGrid& mask, ClassBalance policy) {
    validate_boundary(mask);
    Raster<double> out(mask.width(), mask.height(), 1, 1.0);
    if (policy == ClassBalance::none) return out;

    std::size_t boundary = 0;
    for (auto v : mask.data()) boundary += v;
    const std::size_t n = mask.pixel_count();
    if (boundary == 0 || boundary == n)
        throw ValidationError("frequency class balancing needs both boundary and interior pixels");
    const double w_boundary = double(n) / (2.0 * double(boundary));
    const double w_interior = double(n) / (2.0 * double(n - boundary));
    for (std::size_t i = 0; i < n; ++i) out[i] = mask[i] ? w_boundary : w_interior;
    return out;
}

namespace {

// Nearest-grain lookup for boundary pixels: all interior pixels at the exact
// minimal squared distance are inspected and the smallest grain id wins.
std::uint16_t owning_grain(const LabelGrid& grains, const Raster<double>& sq_to_interior, int x, int y) {
    const double d2 = sq_to_interior(x, y);
    const int r = int(std::ceil(std::sqrt(d2)));
    std::uint16_t best = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            if (double(dx * dx + dy * dy) != d2) continue;
            const int nx = x + dx;
            const int ny = y + dy;
            if (!grains.contains(nx, ny)) continue;
            const auto id = grains(nx, ny);
            if (id != 0 && (best == 0 || id < best)) best = id;
        }
    return best;
}

}  // namespace

WeightField compute_weight_field(const BoundaryGrid& mask, const WeightParams& params) {
    params.validate();
    validate_boundary(mask);
    std::size_t boundary_count = 0;
    for (auto v : mask.data()) boundary_count += v;
    if (boundary_count == 0) throw ValidationError("mask has no boundary pixels");
    if (boundary_count == mask.pixel_count()) throw ValidationError("mask has no interior pixels");

    const int w = mask.width();
    const int h = mask.height();
    WeightField field;
    field.width = w;
    field.height = h;
    field.params = params;
    field.w_c = class_balance_weights(mask, params.class_balance);

    const DistanceField dist = distance_transform(mask);
    LabelGrid grains = connected_components(mask, Connectivity::four);

    for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
        if (mask[i]) continue;
        GrainScale& s = field.per_grain[grains[i]];
        s.max_dis = std::max(s.max_dis, dist[i]);
    }
    for (auto& [id, s] : field.per_grain)
        s.sigma = s.max_dis > 0.0 ? s.max_dis / params.gamma : 1.0 / params.gamma;

    BoundaryGrid interior(w, h);
    for (std::size_t i = 0; i < mask.pixel_count(); ++i) interior[i] = mask[i] ? 0 : 1;
    const Raster<double> sq_to_interior = squared_distance_transform(interior);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask(x, y)) grains(x, y) = owning_grain(grains, sq_to_interior, x, y);

    field.w_bck = Raster<double>(w, h);
    field.w_obj = Raster<double>(w, h);
    for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
        const GrainScale& s = field.per_grain.at(grains[i]);
        const double d = dist[i];
        const double two_var = 2.0 * s.sigma * s.sigma;
        const double gap = s.max_dis - d;
        field.w_bck[i] = field.w_c[i] + params.w0 * std::exp(-(gap * gap) / two_var);
        field.w_obj[i] = field.w_c[i] + params.w0 * std::exp(-(d * d) / two_var);
    }
    field.m_d = dilate(mask, params.dilate_radius);
    field.grains = std::move(grains);
    return field;
}

LossResult evaluate_loss(const ProbabilityGrid& pred, const WeightField& field) {
    if (pred.width() != field.width || pred.height() != field.height)
        throw ConsistencyError("prediction is " + std::to_string(pred.width()) + "x" +
                               std::to_string(pred.height()) + " but weight field is " +
                               std::to_string(field.width) + "x" + std::to_string(field.height));
    validate_probability(pred);

    LossResult out;
    out.terms = Raster<double>(field.width, field.height);
    out.object_branch = BoundaryGrid(field.width, field.height);
    double sum = 0.0;
    const std::size_t n = pred.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const double obj_gate = field.w_obj[i] * double(field.m_d[i]);
        const bool background = field.w_bck[i] >= obj_gate;
        double p = background ? double(pred[2 * i]) : double(pred[2 * i + 1]);
        if (p < kProbabilityFloor) {
            p = kProbabilityFloor;
            ++out.clamped;
        }
        const double term = (background ? field.w_bck[i] : field.w_obj[i]) * std::log(p);
        out.terms[i] = term;
        out.object_branch[i] = background ? 0 : 1;
        sum += term;
    }
    out.loss = -sum;
    return out;
}

void save_weight_field(const WeightField& field, const std::filesystem::path& gsr_path,
                       const std::filesystem::path& sidecar_path) {
    FloatRaster raster(field.width, field.height, 3);
    for (std::size_t i = 0; i < raster.pixel_count(); ++i) {
        raster[3 * i] = float(field.w_bck[i]);
        raster[3 * i + 1] = float(field.w_obj[i]);
        raster[3 * i + 2] = float(field.m_d[i]);
    }
    write_gsr(raster, gsr_path);

    nlohmann::json per_grain = nlohmann::json::object();
    for (const auto& [id, s] : field.per_grain) per_grain[std::to_string(id)] = {s.max_dis, s.sigma};
    nlohmann::json doc = {{"w0", field.params.w0},
                          {"gamma", field.params.gamma},
                          {"dilate_radius", field.params.dilate_radius},
                          {"class_balance", std::string(class_balance_name(field.params.class_balance))},
                          {"width", field.width},
                          {"height", field.height},
                          {"per_grain", per_grain}};
    std::ofstream out(sidecar_path);
    if (!out) throw IoError("cannot write " + sidecar_path.string());
    out << doc.dump(2) << '\n';
}

WeightField load_weight_field(const std::filesystem::path& gsr_path,
                              const std::filesystem::path& sidecar_path) {
    const FloatRaster raster = read_gsr(gsr_path);
    if (raster.channels() != 3) throw FormatError(gsr_path.string() + ": weight field needs 3 channels");

    std::ifstream in(sidecar_path);
    if (!in) throw ResolutionError("missing weight sidecar " + sidecar_path.string());
    WeightField field;
    try {
        const auto doc = nlohmann::json::parse(in);
        field.params.w0 = doc.at("w0").get<double>();
        field.params.gamma = doc.at("gamma").get<double>();
        field.params.dilate_radius = doc.at("dilate_radius").get<double>();
        field.params.class_balance = parse_class_balance(doc.at("class_balance").get<std::string>());
        for (const auto& [key, value] : doc.at("per_grain").items())
            field.per_grain[std::uint32_t(std::stoul(key))] = {value.at(0).get<double>(),
                                                               value.at(1).get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(sidecar_path.string() + ": " + e.what());
    }

    field.width = raster.width();
    field.height = raster.height();
    field.w_bck = Raster<double>(field.width, field.height);
    field.w_obj = Raster<double>(field.width, field.height);
    field.m_d = BoundaryGrid(field.width, field.height);
    for (std::size_t i = 0; i < raster.pixel_count(); ++i) {
        field.w_bck[i] = raster[3 * i];
        field.w_obj[i] = raster[3 * i + 1];
        field.m_d[i] = raster[3 * i + 2] != 0.0f ? 1 : 0;
    }
    return field;
}

}  // namespace grainstack
