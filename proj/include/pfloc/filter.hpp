#pragma once

#include "pfloc/assoc.hpp"
#include "pfloc/doa_grid.hpp"
#include "pfloc/environment.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pfloc {

using Rng = std::mt19937_64;

struct SourceState {
    double range;        // m
    double depth;        // m
    double range_speed;  // m/s

    [[nodiscard]] Position position() const { return {range, depth}; }
    friend bool operator==(const SourceState&, const SourceState&) = default;
};

/// Nearly constant velocity in range, nearly constant depth.
struct MotionParams {
    double accel_var = 0.05;  // m^2/s^4, range driving noise
    double depth_var = 0.1;   // m^2/s^2, depth driving noise
    double step_s = 2.048;    // nominal epoch spacing

    void validate() const;
};

struct PriorParams {
    Roi roi = kDefaultRoi;
    double speed_std = 5.0;  // m/s

    void validate() const;
};

/// J weighted samples; weights sum to one after every update.
struct ParticleSet {
    std::vector<SourceState> states;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return states.size(); }
};

/// Uniform positions over the roi, zero-mean Gaussian range speed, equal weights.
[[nodiscard]] ParticleSet init_particles(const PriorParams& prior, std::size_t count, Rng& rng);
[[nodiscard]] ParticleSet init_particles(const PriorParams& prior, std::size_t count, std::uint64_t seed);

/// x' = F(T) x + G(T) u with u = (range acceleration, depth speed).
[[nodiscard]] SourceState predict(const SourceState& state, double dt, double u_range, double u_depth);

/// Applies `predict` to every particle with driving noise drawn from `motion`.
void predict_particles(ParticleSet& particles, double dt, const MotionParams& motion, Rng& rng);

/// Evaluates the association-marginalized log likelihood of a set of source
/// positions. Grid layers are looked up once from the model's path list.
class ParticleWeigher {
public:
    ParticleWeigher(const DoaGrid& grid, std::span<const PathKind> paths, const ModelParams& params);

    /// -inf outside the grid roi.
    [[nodiscard]] double log_likelihood(Position p, const ObservationSet& z);

    [[nodiscard]] const ModelParams& params() const { return params_; }

private:
    const DoaGrid* grid_;
    ModelParams params_;
    std::vector<std::size_t> layers_;
    std::vector<double> angles_;
    PathPrediction pred_;
    LikelihoodWorkspace workspace_;
};

struct UpdateOptions {
    unsigned threads = 1;
};

/// Multiplies every weight by the marginal likelihood of `z` at the particle
/// and renormalizes. Throws DegeneracyError when every weight vanishes.
void update(ParticleSet& particles, const ObservationSet& z, const DoaGrid& grid, std::span<const PathKind> paths,
            const ModelParams& params, const UpdateOptions& options = {});

[[nodiscard]] double effective_sample_size(const ParticleSet& particles);

/// Systematic resampling offspring counts for normalized `weights` and offset u0 in [0, 1).
[[nodiscard]] std::vector<std::size_t> systematic_counts(std::span<const double> weights, double u0);

/// J offspring by systematic resampling, weights reset to 1/J.
[[nodiscard]] ParticleSet resample(const ParticleSet& particles, Rng& rng);

/// Weighted particle mean.
[[nodiscard]] SourceState mmse_estimate(const ParticleSet& particles);

struct TimedObservation {
    std::size_t t_index = 0;
    double time_s = 0.0;
    ObservationSet z;
};

/// Standard deviations of optional Gaussian jitter after resampling; all zero disables it.
struct JitterParams {
    double range_m = 0.0;
    double depth_m = 0.0;
    double speed_mps = 0.0;

    [[nodiscard]] bool enabled() const { return range_m > 0.0 || depth_m > 0.0 || speed_mps > 0.0; }
};

struct TrackerConfig {
    std::vector<PathKind> paths = {kAllPaths.begin(), kAllPaths.end()};
    ModelParams model = ModelParams::defaults_for(4);
    MotionParams motion{};
    PriorParams prior{};
    std::size_t particles = 10000;
    std::uint64_t seed = 1;
    double resample_fraction = 0.5;  // resample when ESS < fraction * J
    JitterParams jitter{};
    unsigned threads = 1;

    void validate() const;
};

struct TrackEstimate {
    double time_s;
    SourceState state;
    double ess;        // after the update, before any resampling
    double range_var;  // posterior variances, m^2
    double depth_var;
};

/// Sequential estimation over time-ordered observations. The prior is placed
/// one nominal step before the first epoch; each later step predicts over the
/// actual time gap, so dropouts lengthen it.
[[nodiscard]] std::vector<TrackEstimate> run_tracker(const DoaGrid& grid, std::span<const TimedObservation> epochs,
                                                     const TrackerConfig& config);

}  // namespace pfloc
