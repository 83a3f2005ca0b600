#pragma once

#include "pfloc/config.hpp"
#include "pfloc/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pfloc {

struct GridStats {
    std::size_t n_range = 0;
    std::size_t n_depth = 0;
    std::vector<PathKind> kinds;
    std::vector<double> impossible_fraction;  // per path
    double seconds = 0.0;
    std::filesystem::path file;
};

struct SimulationSummary {
    std::size_t epochs = 0;
    std::size_t detections = 0;  // total DOAs written, clutter included
    std::string warning;         // truth truncation, if any
    std::filesystem::path truth_file;
    std::filesystem::path observations_file;
};

struct TrackSummary {
    std::size_t epochs = 0;
    SourceState final_estimate{};
    double min_ess = 0.0;
    double seconds = 0.0;
    std::filesystem::path file;
};

/// Traces the eigenray grid for cfg.environment and writes it to the grid file.
GridStats run_build_grid(const RunConfig& cfg);

/// Writes the truth track and its observations. Needs the grid file unless
/// the scenario has no epochs.
SimulationSummary run_simulate(const RunConfig& cfg);

/// Tracks the observation file against the grid file and writes the estimates.
TrackSummary run_track(const RunConfig& cfg);

struct EvaluateInput {
    std::string label;
    std::filesystem::path estimates;
};

/// Compares each estimates file with the truth and writes a joint JSON report.
std::vector<EvaluationReport> run_evaluate(std::span<const EvaluateInput> runs, const std::filesystem::path& truth,
                                           const std::filesystem::path& report);

}  // namespace pfloc
