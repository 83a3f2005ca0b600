#pragma once

#include "pfloc/environment.hpp"
#include "pfloc/filter.hpp"
#include "pfloc/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pfloc {

// Environment file (JSON):
//   {"ssp": [[depth_m, speed_mps], ...], "bottom_depth": m, "receiver_depth": m}
// "ssp" entries may also be objects {"depth": m, "speed": mps}; receiver_depth
// is optional. Unknown keys are rejected.
[[nodiscard]] Waveguide parse_environment(std::string_view text, std::string_view source = "environment");
[[nodiscard]] Waveguide load_environment(const std::filesystem::path& path);
[[nodiscard]] std::string environment_to_json(const Waveguide& wg);

// Observations: one JSON object per line, {"t_index": n, "time_s": t, "doas": [deg, ...]}.
void write_observations(std::ostream& out, std::span<const TimedObservation> epochs);
[[nodiscard]] std::vector<TimedObservation> read_observations(std::istream& in, std::string_view source = "observations");
void save_observations(const std::filesystem::path& path, std::span<const TimedObservation> epochs);
[[nodiscard]] std::vector<TimedObservation> load_observations(const std::filesystem::path& path);

// Truth CSV: time_s,range_m,depth_m,speed_mps. Epoch indices are not stored;
// reading numbers rows from zero.
void write_truth(std::ostream& out, const GroundTruthTrack& truth);
[[nodiscard]] GroundTruthTrack read_truth(std::istream& in, std::string_view source = "truth");
void save_truth(const std::filesystem::path& path, const GroundTruthTrack& truth);
[[nodiscard]] GroundTruthTrack load_truth(const std::filesystem::path& path);

// Estimates CSV: time_s,range_m,depth_m,speed_mps,ess. Posterior variances are not stored.
void write_estimates(std::ostream& out, std::span<const TrackEstimate> estimates);
[[nodiscard]] std::vector<TrackEstimate> read_estimates(std::istream& in, std::string_view source = "estimates");
void save_estimates(const std::filesystem::path& path, std::span<const TrackEstimate> estimates);
[[nodiscard]] std::vector<TrackEstimate> load_estimates(const std::filesystem::path& path);

struct EpochError {
    double time_s;
    double range_error;  // estimate minus truth, m
    double depth_error;
};

struct EvaluationReport {
    std::string label;
    double rmse_range = 0.0;
    double rmse_depth = 0.0;
    std::vector<EpochError> epochs;
};

/// Pairs every estimate with the truth sample at the same time (1e-6 s
/// tolerance). Throws DomainError when an estimate has no truth partner.
[[nodiscard]] EvaluationReport evaluate(std::span<const TrackEstimate> estimates, const GroundTruthTrack& truth,
                                        std::string label = {});

/// {"runs": [{"label", "epochs", "rmse_range_m", "rmse_depth_m", "errors": [...]}, ...]}
[[nodiscard]] std::string report_to_json(std::span<const EvaluationReport> reports);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace pfloc
