#include "pfloc/simulator.hpp"

#include "pfloc/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace pfloc {

void ScenarioConfig::validate() const {
    if (!(std::isfinite(step_s) && step_s > 0.0)) throw DomainError("scenario step_s must be positive");
    if (!(std::isfinite(duration_s) && duration_s >= 0.0)) throw DomainError("scenario duration must be nonnegative");
    for (const auto& w : dropouts) {
        if (!(w.start_s >= 0.0 && w.start_s < w.end_s && w.end_s <= duration_s))
            throw DomainError(fmt::format("dropout [{}, {}) must be a nonempty window inside [0, {}]", w.start_s,
                                          w.end_s, duration_s));
    }
    if (!(roi.range_min < roi.range_max && roi.depth_min < roi.depth_max))
        throw DomainError("scenario roi must be nonempty");
    if (!roi.contains(initial.position()))
        throw DomainError(fmt::format("initial position ({}, {}) is outside the roi", initial.range, initial.depth));
    if (!std::isfinite(initial.range_speed)) throw DomainError("initial speed must be finite");
    if (motion == TruthMotion::Stochastic) motion_noise.validate();
    model.validate();
    if (model.path_count() != paths.size())
        throw DomainError(fmt::format("model has {} noise levels for {} paths", model.path_count(), paths.size()));
}

std::vector<std::size_t> epoch_indices(const ScenarioConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> out;
    for (std::size_t n = 0;; ++n) {
        double t = static_cast<double>(n) * cfg.step_s;
        if (!(t < cfg.duration_s)) break;
        bool dropped = std::any_of(cfg.dropouts.begin(), cfg.dropouts.end(),
                                   [t](const DropoutWindow& w) { return t >= w.start_s && t < w.end_s; });
        if (!dropped) out.push_back(n);
    }
    return out;
}

GroundTruthTrack generate_truth(const ScenarioConfig& cfg) {
    const auto kept = epoch_indices(cfg);
    GroundTruthTrack track;
    track.samples.reserve(kept.size());
    if (kept.empty()) return track;

    Rng rng(cfg.seed);
    std::normal_distribution<double> u1(0.0, std::sqrt(cfg.motion_noise.accel_var));
    std::normal_distribution<double> u2(0.0, std::sqrt(cfg.motion_noise.depth_var));

    SourceState s = cfg.initial;
    std::size_t n = 0;
    for (std::size_t target : kept) {
        double t = static_cast<double>(target) * cfg.step_s;
        if (cfg.motion == TruthMotion::Deterministic) {
            s = {cfg.initial.range + cfg.initial.range_speed * t, cfg.initial.depth, cfg.initial.range_speed};
        } else {
            for (; n < target; ++n) {
                double a = cfg.motion_noise.accel_var > 0.0 ? u1(rng) : 0.0;
                double b = cfg.motion_noise.depth_var > 0.0 ? u2(rng) : 0.0;
                s = predict(s, cfg.step_s, a, b);
            }
        }
        if (!cfg.roi.contains(s.position())) {
            track.warning = fmt::format("source left the roi at t = {:.3f} s (range {:.2f} m, depth {:.2f} m); "
                                        "track truncated to {} epochs",
                                        t, s.range, s.depth, track.samples.size());
            break;
        }
        track.samples.push_back({target, t, s});
    }
    return track;
}

std::vector<TimedObservation> generate_observations(const GroundTruthTrack& truth, const DoaGrid& grid,
                                                    std::span<const PathKind> paths, const ModelParams& params,
                                                    std::uint64_t seed) {
    params.validate();
    if (params.path_count() != paths.size())
        throw DomainError(fmt::format("model has {} noise levels for {} paths", params.path_count(), paths.size()));
    std::vector<std::size_t> layers;
    for (PathKind kind : paths) {
        auto layer = grid.layer_of(kind);
        if (!layer) throw DomainError(fmt::format("grid has no layer for path {}", to_string(kind)));
        layers.push_back(*layer);
    }

    const double top = std::nextafter(kDoaMax, kDoaMin);
    std::vector<double> angles(paths.size());
    std::vector<TimedObservation> out;
    out.reserve(truth.samples.size());
    for (const auto& sample : truth.samples) {
        if (!grid.interpolate_layers(sample.state.position(), layers, angles))
            throw DomainError(fmt::format("truth at t = {} s lies outside the grid roi", sample.time_s));
        std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(sample.t_index), static_cast<std::uint32_t>(sample.t_index >> 32)};
        Rng rng(sseq);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> clutter(kDoaMin, kDoaMax);

        std::vector<double> z;
        for (std::size_t k = 0; k < paths.size(); ++k) {
            double u = uni(rng);
            if (is_impossible(angles[k]) || !(u < params.detect_prob)) continue;
            z.push_back(std::clamp(angles[k] + params.sigma_deg[k] * gauss(rng), kDoaMin, top));
        }
        if (params.mu_fa > 0.0) {
            std::poisson_distribution<int> count(params.mu_fa);
            int c = count(rng);
            for (int i = 0; i < c; ++i) z.push_back(std::min(clutter(rng), top));
        }
        out.push_back({sample.t_index, sample.time_s, ObservationSet::from_unsorted(std::move(z))});
    }
    return out;
}

}  // namespace pfloc
