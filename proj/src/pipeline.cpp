#include "pfloc/pipeline.hpp"

#include "pfloc/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>

namespace pfloc {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void ensure_parent(const std::filesystem::path& file) {
    auto dir = file.parent_path();
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

}  // namespace

GridStats run_build_grid(const RunConfig& cfg) {
    if (cfg.environment.empty()) throw UsageError("no environment file given");
    auto t0 = std::chrono::steady_clock::now();
    Waveguide wg = load_environment(cfg.environment);
    validate_roi(cfg.grid_spec.roi, &wg);
    GridBuildOptions opts{cfg.grid_spec.eigenray, cfg.threads};
    DoaGrid grid = build_doa_grid(wg, cfg.grid_spec.roi, cfg.grid_spec.n_range, cfg.grid_spec.n_depth, kAllPaths, opts);

    GridStats stats;
    stats.n_range = grid.n_range();
    stats.n_depth = grid.n_depth();
    stats.kinds.assign(grid.kinds().begin(), grid.kinds().end());
    for (std::size_t k = 0; k < grid.path_count(); ++k) stats.impossible_fraction.push_back(grid.impossible_fraction(k));
    stats.file = cfg.output_path(cfg.grid);
    ensure_parent(stats.file);
    save_grid(grid, stats.file);
    stats.seconds = seconds_since(t0);
    return stats;
}

SimulationSummary run_simulate(const RunConfig& cfg) {
    ScenarioConfig sc = cfg.scenario;
    sc.seed = derive_seed(cfg.seed, SeedStream::Truth);
    GroundTruthTrack truth = generate_truth(sc);

    std::vector<TimedObservation> obs;
    if (!truth.samples.empty()) {
        DoaGrid grid = load_grid(cfg.output_path(cfg.grid));
        obs = generate_observations(truth, grid, sc.paths, sc.model, derive_seed(cfg.seed, SeedStream::Observations));
    }

    SimulationSummary s;
    s.epochs = obs.size();
    for (const auto& o : obs) s.detections += o.z.size();
    s.warning = truth.warning;
    s.truth_file = cfg.output_path(cfg.truth);
    s.observations_file = cfg.output_path(cfg.observations);
    ensure_parent(s.truth_file);
    ensure_parent(s.observations_file);
    save_truth(s.truth_file, truth);
    save_observations(s.observations_file, obs);
    return s;
}

TrackSummary run_track(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    DoaGrid grid = load_grid(cfg.output_path(cfg.grid));
    auto obs = load_observations(cfg.output_path(cfg.observations));
    TrackerConfig tc = cfg.tracker;
    tc.seed = derive_seed(cfg.seed, SeedStream::Tracker);
    tc.threads = cfg.threads;
    auto est = run_tracker(grid, obs, tc);

    TrackSummary s;
    s.epochs = est.size();
    if (!est.empty()) {
        s.final_estimate = est.back().state;
        s.min_ess = std::min_element(est.begin(), est.end(), [](const auto& a, const auto& b) {
                        return a.ess < b.ess;
                    })->ess;
    }
    s.file = cfg.output_path(cfg.estimates);
    ensure_parent(s.file);
    save_estimates(s.file, est);
    s.seconds = seconds_since(t0);
    return s;
}

std::vector<EvaluationReport> run_evaluate(std::span<const EvaluateInput> runs, const std::filesystem::path& truth,
                                           const std::filesystem::path& report) {
    if (runs.empty()) throw UsageError("evaluate needs at least one estimates file");
    GroundTruthTrack track = load_truth(truth);
    std::vector<EvaluationReport> out;
    for (const auto& r : runs) {
        std::string label = r.label.empty() ? r.estimates.stem().string() : r.label;
        out.push_back(evaluate(load_estimates(r.estimates), track, std::move(label)));
    }
    ensure_parent(report);
    write_text_file(report, report_to_json(out));
    return out;
}

}  // namespace pfloc
