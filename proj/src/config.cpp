#include "pfloc/config.hpp"

#include "json_util.hpp"
#include "pfloc/errors.hpp"
#include "pfloc/io.hpp"

#include <fmt/format.h>

namespace pfloc {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using detail::as_index;
using detail::as_number;
using detail::reject_unknown;

const json* find(const json& obj, std::string_view key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require_object(const json& v, const std::string& where) {
    if (!v.is_object()) throw ParseError(where + ": expected an object");
    return v;
}

void read_number(const json& obj, std::string_view key, double& dst, const std::string& where) {
    if (const json* v = find(obj, key)) dst = as_number(*v, fmt::format("{}.{}", where, key));
}

template <class T>
void read_count(const json& obj, std::string_view key, T& dst, const std::string& where) {
    if (const json* v = find(obj, key)) dst = static_cast<T>(as_index(*v, fmt::format("{}.{}", where, key)));
}

void read_path(const json& obj, std::string_view key, std::filesystem::path& dst, const std::string& where) {
    if (const json* v = find(obj, key)) {
        if (!v->is_string()) throw ParseError(fmt::format("{}.{}: expected a string", where, key));
        dst = v->get<std::string>();
    }
}

Roi parse_roi(const json& v, const std::string& where) {
    require_object(v, where);
    reject_unknown(v, {"range_min", "range_max", "depth_min", "depth_max"}, where);
    return {detail::require_number(v, "range_min", where), detail::require_number(v, "range_max", where),
            detail::require_number(v, "depth_min", where), detail::require_number(v, "depth_max", where)};
}

void parse_model(const json& v, ModelParams& m, const std::string& where) {
    require_object(v, where);
    reject_unknown(v, {"sigma_deg", "detect_prob", "mu_fa"}, where);
    if (const json* s = find(v, "sigma_deg")) {
        if (!s->is_array()) throw ParseError(where + ".sigma_deg: expected an array");
        m.sigma_deg.clear();
        for (const auto& x : *s) m.sigma_deg.push_back(as_number(x, where + ".sigma_deg"));
    }
    read_number(v, "detect_prob", m.detect_prob, where);
    read_number(v, "mu_fa", m.mu_fa, where);
}

ordered_json roi_json(const Roi& r) {
    return {{"range_min", r.range_min}, {"range_max", r.range_max}, {"depth_min", r.depth_min},
            {"depth_max", r.depth_max}};
}

ordered_json model_json(const ModelParams& m) {
    return {{"sigma_deg", m.sigma_deg}, {"detect_prob", m.detect_prob}, {"mu_fa", m.mu_fa}};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::filesystem::path RunConfig::output_path(const std::filesystem::path& name) const {
    return name.is_absolute() ? name : output_dir / name;
}

void RunConfig::validate() const {
    validate_roi(grid_spec.roi);
    if (grid_spec.n_range < 2 || grid_spec.n_depth < 2) throw UsageError("grid needs at least 2 points per axis");
    scenario.validate();
    tracker.validate();
    if (threads == 0) throw UsageError("threads must be at least 1");
}

RunConfig default_run_config(std::size_t k) {
    RunConfig cfg;
    cfg.tracker.paths = paths_for_count(k);
    cfg.tracker.model = ModelParams::defaults_for(k);
    return cfg;
}

RunConfig parse_run_config(std::string_view text, std::string_view source, const std::filesystem::path& base_dir) {
    const json doc = detail::parse_json(text, source);
    const std::string top(source);
    require_object(doc, top);
    reject_unknown(doc,
                   {"environment", "output_dir", "files", "grid", "scenario", "paths", "model", "motion", "prior",
                    "particles", "resample_fraction", "jitter", "seed", "threads"},
                   top);

    std::size_t k = 4;
    if (const json* v = find(doc, "paths")) {
        k = as_index(*v, top + ".paths");
        if (k != 2 && k != 4) throw ParseError(fmt::format("{}.paths: must be 2 or 4, got {}", top, k));
    }
    RunConfig cfg = default_run_config(k);

    read_path(doc, "environment", cfg.environment, top);
    if (!cfg.environment.empty() && cfg.environment.is_relative() && !base_dir.empty())
        cfg.environment = base_dir / cfg.environment;
    read_path(doc, "output_dir", cfg.output_dir, top);

    if (const json* f = find(doc, "files")) {
        std::string where = top + ".files";
        require_object(*f, where);
        reject_unknown(*f, {"grid", "observations", "truth", "estimates", "report"}, where);
        read_path(*f, "grid", cfg.grid, where);
        read_path(*f, "observations", cfg.observations, where);
        read_path(*f, "truth", cfg.truth, where);
        read_path(*f, "estimates", cfg.estimates, where);
        read_path(*f, "report", cfg.report, where);
    }

    bool prior_roi_set = false;
    if (const json* g = find(doc, "grid")) {
        std::string where = top + ".grid";
        require_object(*g, where);
        reject_unknown(*g, {"roi", "n_range", "n_depth", "fan_size", "fan_limit_deg"}, where);
        if (const json* r = find(*g, "roi")) cfg.grid_spec.roi = parse_roi(*r, where + ".roi");
        read_count(*g, "n_range", cfg.grid_spec.n_range, where);
        read_count(*g, "n_depth", cfg.grid_spec.n_depth, where);
        read_count(*g, "fan_size", cfg.grid_spec.eigenray.fan_size, where);
        read_number(*g, "fan_limit_deg", cfg.grid_spec.eigenray.fan_limit_deg, where);
    }

    if (const json* s = find(doc, "scenario")) {
        std::string where = top + ".scenario";
        require_object(*s, where);
        reject_unknown(*s,
                       {"initial_range_m", "initial_depth_m", "speed_mps", "duration_s", "step_s", "dropouts",
                        "truth_motion", "model"},
                       where);
        auto& sc = cfg.scenario;
        read_number(*s, "initial_range_m", sc.initial.range, where);
        read_number(*s, "initial_depth_m", sc.initial.depth, where);
        read_number(*s, "speed_mps", sc.initial.range_speed, where);
        read_number(*s, "duration_s", sc.duration_s, where);
        read_number(*s, "step_s", sc.step_s, where);
        if (const json* d = find(*s, "dropouts")) {
            if (!d->is_array()) throw ParseError(where + ".dropouts: expected an array of [start_s, end_s]");
            sc.dropouts.clear();
            for (const auto& w : *d) {
                if (!w.is_array() || w.size() != 2)
                    throw ParseError(where + ".dropouts: each entry must be [start_s, end_s]");
                sc.dropouts.push_back({as_number(w[0], where + ".dropouts"), as_number(w[1], where + ".dropouts")});
            }
        }
        if (const json* m = find(*s, "truth_motion")) {
            std::string name = m->is_string() ? m->get<std::string>() : std::string{};
            if (name == "deterministic")
                sc.motion = TruthMotion::Deterministic;
            else if (name == "stochastic")
                sc.motion = TruthMotion::Stochastic;
            else
                throw ParseError(where + ".truth_motion: must be \"deterministic\" or \"stochastic\"");
        }
        if (const json* m = find(*s, "model")) parse_model(*m, sc.model, where + ".model");
    }

    auto& tr = cfg.tracker;
    if (const json* m = find(doc, "model")) parse_model(*m, tr.model, top + ".model");
    if (const json* m = find(doc, "motion")) {
        std::string where = top + ".motion";
        require_object(*m, where);
        reject_unknown(*m, {"accel_var", "depth_var", "step_s"}, where);
        read_number(*m, "accel_var", tr.motion.accel_var, where);
        read_number(*m, "depth_var", tr.motion.depth_var, where);
        read_number(*m, "step_s", tr.motion.step_s, where);
    }
    if (const json* p = find(doc, "prior")) {
        std::string where = top + ".prior";
        require_object(*p, where);
        reject_unknown(*p, {"roi", "speed_std"}, where);
        if (const json* r = find(*p, "roi")) {
            tr.prior.roi = parse_roi(*r, where + ".roi");
            prior_roi_set = true;
        }
        read_number(*p, "speed_std", tr.prior.speed_std, where);
    }
    if (!prior_roi_set) tr.prior.roi = cfg.grid_spec.roi;
    read_count(doc, "particles", tr.particles, top);
    read_number(doc, "resample_fraction", tr.resample_fraction, top);
    if (const json* j = find(doc, "jitter")) {
        std::string where = top + ".jitter";
        require_object(*j, where);
        reject_unknown(*j, {"range_m", "depth_m", "speed_mps"}, where);
        read_number(*j, "range_m", tr.jitter.range_m, where);
        read_number(*j, "depth_m", tr.jitter.depth_m, where);
        read_number(*j, "speed_mps", tr.jitter.speed_mps, where);
    }
    read_count(doc, "seed", cfg.seed, top);
    read_count(doc, "threads", cfg.threads, top);

    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ParseError(fmt::format("{}: {}", top, e.what()));
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_text_file(path), path.string(), path.parent_path());
}

std::string run_config_to_json(const RunConfig& cfg) {
    const auto& sc = cfg.scenario;
    const auto& tr = cfg.tracker;
    ordered_json dropouts = ordered_json::array();
    for (const auto& w : sc.dropouts) dropouts.push_back({w.start_s, w.end_s});

    ordered_json doc;
    doc["environment"] = cfg.environment.string();
    doc["output_dir"] = cfg.output_dir.string();
    doc["files"] = {{"grid", cfg.grid.string()},
                    {"observations", cfg.observations.string()},
                    {"truth", cfg.truth.string()},
                    {"estimates", cfg.estimates.string()},
                    {"report", cfg.report.string()}};
    doc["grid"] = {{"roi", roi_json(cfg.grid_spec.roi)},
                   {"n_range", cfg.grid_spec.n_range},
                   {"n_depth", cfg.grid_spec.n_depth},
                   {"fan_size", cfg.grid_spec.eigenray.fan_size},
                   {"fan_limit_deg", cfg.grid_spec.eigenray.fan_limit_deg}};
    doc["scenario"] = {{"initial_range_m", sc.initial.range},
                       {"initial_depth_m", sc.initial.depth},
                       {"speed_mps", sc.initial.range_speed},
                       {"duration_s", sc.duration_s},
                       {"step_s", sc.step_s},
                       {"dropouts", dropouts},
                       {"truth_motion", sc.motion == TruthMotion::Stochastic ? "stochastic" : "deterministic"},
                       {"model", model_json(sc.model)}};
    doc["paths"] = tr.paths.size();
    doc["model"] = model_json(tr.model);
    doc["motion"] = {{"accel_var", tr.motion.accel_var},
                     {"depth_var", tr.motion.depth_var},
                     {"step_s", tr.motion.step_s}};
    doc["prior"] = {{"roi", roi_json(tr.prior.roi)}, {"speed_std", tr.prior.speed_std}};
    doc["particles"] = tr.particles;
    doc["resample_fraction"] = tr.resample_fraction;
    doc["jitter"] = {{"range_m", tr.jitter.range_m}, {"depth_m", tr.jitter.depth_m},
                     {"speed_mps", tr.jitter.speed_mps}};
    doc["seed"] = cfg.seed;
    doc["threads"] = cfg.threads;
    return doc.dump(2) + "\n";
}

}  // namespace pfloc
