#pragma once

#include "pfloc/assoc.hpp"
#include "pfloc/doa_grid.hpp"
#include "pfloc/filter.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pfloc {

/// Half-open interval [start_s, end_s) during which no epochs are emitted.
struct DropoutWindow {
    double start_s;
    double end_s;
    friend bool operator==(const DropoutWindow&, const DropoutWindow&) = default;
};

enum class TruthMotion { Deterministic, Stochastic };

struct ScenarioConfig {
    SourceState initial{2000.0, 60.0, -1.5};
    double duration_s = 1200.0;
    double step_s = 2.048;
    std::vector<DropoutWindow> dropouts{{420.0, 494.0}, {660.0, 734.0}};
    TruthMotion motion = TruthMotion::Deterministic;
    MotionParams motion_noise{};  // used in stochastic mode
    Roi roi = kDefaultRoi;
    std::vector<PathKind> paths = {kAllPaths.begin(), kAllPaths.end()};
    ModelParams model = ModelParams::defaults_for(4);
    std::uint64_t seed = 1;

    void validate() const;
};

struct TruthSample {
    std::size_t t_index;
    double time_s;
    SourceState state;
};

struct GroundTruthTrack {
    std::vector<TruthSample> samples;
    /// Set when the track left the roi and was cut short.
    std::string warning;
};

/// Epoch indices n with n * step_s < duration_s outside every dropout window.
[[nodiscard]] std::vector<std::size_t> epoch_indices(const ScenarioConfig& cfg);

/// Source track at the kept epochs. Stochastic mode steps through every
/// nominal epoch (dropped ones included) with driving noise from cfg.seed.
[[nodiscard]] GroundTruthTrack generate_truth(const ScenarioConfig& cfg);

/// Per epoch: an independent Bernoulli(d) detection of each possible path with
/// Gaussian DOA noise, Poisson(mu_fa) clutter uniform on [-90, 90), clipping to
/// the support, then a descending sort. Each epoch draws from its own stream
/// derived from (seed, t_index).
[[nodiscard]] std::vector<TimedObservation> generate_observations(const GroundTruthTrack& truth, const DoaGrid& grid,
                                                                  std::span<const PathKind> paths,
                                                                  const ModelParams& params, std::uint64_t seed);

}  // namespace pfloc
