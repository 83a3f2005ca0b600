#include "pfloc/filter.hpp"

#include "pfloc/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace pfloc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::size_t> grid_layers(const DoaGrid& grid, std::span<const PathKind> paths) {
    std::vector<std::size_t> layers;
    layers.reserve(paths.size());
    for (PathKind kind : paths) {
        auto layer = grid.layer_of(kind);
        if (!layer) throw DomainError(fmt::format("grid has no layer for path {}", to_string(kind)));
        layers.push_back(*layer);
    }
    return layers;
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void MotionParams::validate() const {
    if (!finite_nonneg(accel_var) || !finite_nonneg(depth_var))
        throw DomainError("motion noise variances must be finite and nonnegative");
    if (!(std::isfinite(step_s) && step_s > 0.0)) throw DomainError("nominal step must be positive");
}

void PriorParams::validate() const {
    if (!(roi.range_min < roi.range_max && roi.depth_min < roi.depth_max))
        throw DomainError("prior roi must be nonempty");
    if (!(std::isfinite(speed_std) && speed_std > 0.0)) throw DomainError("prior speed_std must be positive");
}

ParticleSet init_particles(const PriorParams& prior, std::size_t count, Rng& rng) {
    prior.validate();
    if (count == 0) throw DomainError("particle count must be at least 1");
    std::uniform_real_distribution<double> range(prior.roi.range_min, prior.roi.range_max);
    std::uniform_real_distribution<double> depth(prior.roi.depth_min, prior.roi.depth_max);
    std::normal_distribution<double> speed(0.0, prior.speed_std);
    ParticleSet ps;
    ps.states.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        double r = range(rng);
        double d = depth(rng);
        double v = speed(rng);
        ps.states.push_back({r, d, v});
    }
    ps.weights.assign(count, 1.0 / static_cast<double>(count));
    return ps;
}

ParticleSet init_particles(const PriorParams& prior, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    return init_particles(prior, count, rng);
}

SourceState predict(const SourceState& s, double dt, double u_range, double u_depth) {
    return {s.range + dt * s.range_speed + 0.5 * dt * dt * u_range, s.depth + dt * u_depth,
            s.range_speed + dt * u_range};
}

void predict_particles(ParticleSet& particles, double dt, const MotionParams& motion, Rng& rng) {
    if (!(dt > 0.0)) throw DomainError(fmt::format("prediction step must be positive, got {}", dt));
    std::normal_distribution<double> u1(0.0, std::sqrt(motion.accel_var));
    std::normal_distribution<double> u2(0.0, std::sqrt(motion.depth_var));
    for (auto& s : particles.states) {
        double a = motion.accel_var > 0.0 ? u1(rng) : 0.0;
        double b = motion.depth_var > 0.0 ? u2(rng) : 0.0;
        s = predict(s, dt, a, b);
    }
}

ParticleWeigher::ParticleWeigher(const DoaGrid& grid, std::span<const PathKind> paths, const ModelParams& params)
    : grid_(&grid), params_(params), layers_(grid_layers(grid, paths)), angles_(paths.size()) {
    params_.validate();
    if (params_.path_count() != paths.size())
        throw DomainError(fmt::format("model has {} noise levels for {} paths", params_.path_count(), paths.size()));
    pred_.resize(paths.size());
}

double ParticleWeigher::log_likelihood(Position p, const ObservationSet& z) {
    if (!grid_->interpolate_layers(p, layers_, angles_)) return kNegInf;
    for (std::size_t k = 0; k < angles_.size(); ++k) {
        pred_[k].angle_deg = angles_[k];
        pred_[k].detect_prob = is_impossible(angles_[k]) ? 0.0 : params_.detect_prob;
    }
    return workspace_.log_marginal(z.values(), pred_, params_);
}

void update(ParticleSet& particles, const ObservationSet& z, const DoaGrid& grid, std::span<const PathKind> paths,
            const ModelParams& params, const UpdateOptions& options) {
    const std::size_t n = particles.size();
    std::vector<double> log_l(n);
    auto work = [&](std::size_t begin, std::size_t end) {
        ParticleWeigher weigher(grid, paths, params);
        for (std::size_t j = begin; j < end; ++j) log_l[j] = weigher.log_likelihood(particles.states[j].position(), z);
    };
    unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n / 256 + 1)));
    if (threads == 1) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            std::size_t b = std::min(n, t * chunk);
            std::size_t e = std::min(n, b + chunk);
            pool.emplace_back(work, b, e);
        }
    }

    double peak = kNegInf;
    for (std::size_t j = 0; j < n; ++j)
        if (particles.weights[j] > 0.0) peak = std::max(peak, log_l[j]);
    if (peak == kNegInf) throw DegeneracyError("every particle weight vanished in the update");

    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double w = log_l[j] == kNegInf ? 0.0 : particles.weights[j] * std::exp(log_l[j] - peak);
        particles.weights[j] = w;
        total += w;
    }
    if (!(total > 0.0) || !std::isfinite(total)) throw DegeneracyError("every particle weight vanished in the update");
    for (double& w : particles.weights) w /= total;
}

double effective_sample_size(const ParticleSet& particles) {
    double sq = 0.0;
    for (double w : particles.weights) sq += w * w;
    return sq > 0.0 ? 1.0 / sq : 0.0;
}

std::vector<std::size_t> systematic_counts(std::span<const double> weights, double u0) {
    const std::size_t n = weights.size();
    if (!(u0 >= 0.0 && u0 < 1.0)) throw DomainError("systematic offset must lie in [0, 1)");
    std::vector<std::size_t> counts(n, 0);
    if (n == 0) return counts;
    double cum = 0.0;
    std::size_t drawn = 0;
    const double jn = static_cast<double>(n);
    for (std::size_t j = 0; j < n && drawn < n; ++j) {
        cum += weights[j];
        // Pointer (u0 + i) / J falls in slot j while it is below the running sum.
        double limit = j + 1 == n ? jn : cum * jn;
        while (drawn < n && static_cast<double>(drawn) + u0 < limit) {
            ++counts[j];
            ++drawn;
        }
    }
    return counts;
}

ParticleSet resample(const ParticleSet& particles, Rng& rng) {
    const std::size_t n = particles.size();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto counts = systematic_counts(particles.weights, uni(rng));
    ParticleSet out;
    out.states.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < counts[j]; ++c) out.states.push_back(particles.states[j]);
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    return out;
}

SourceState mmse_estimate(const ParticleSet& particles) {
    SourceState m{0.0, 0.0, 0.0};
    double total = 0.0;
    for (std::size_t j = 0; j < particles.size(); ++j) {
        double w = particles.weights[j];
        m.range += w * particles.states[j].range;
        m.depth += w * particles.states[j].depth;
        m.range_speed += w * particles.states[j].range_speed;
        total += w;
    }
    if (!(total > 0.0)) throw DegeneracyError("cannot estimate from a particle set with zero total weight");
    m.range /= total;
    m.depth /= total;
    m.range_speed /= total;
    return m;
}

void TrackerConfig::validate() const {
    if (paths.empty()) throw DomainError("tracker needs at least one path");
    model.validate();
    if (model.path_count() != paths.size())
        throw DomainError(fmt::format("model has {} noise levels for {} paths", model.path_count(), paths.size()));
    motion.validate();
    prior.validate();
    if (particles == 0) throw DomainError("particle count must be at least 1");
    if (!(resample_fraction >= 0.0 && resample_fraction <= 1.0))
        throw DomainError("resample fraction must lie in [0, 1]");
    if (jitter.range_m < 0.0 || jitter.depth_m < 0.0 || jitter.speed_mps < 0.0)
        throw DomainError("jitter standard deviations must be nonnegative");
}

std::vector<TrackEstimate> run_tracker(const DoaGrid& grid, std::span<const TimedObservation> epochs,
                                       const TrackerConfig& config) {
    config.validate();
    for (std::size_t n = 1; n < epochs.size(); ++n)
        if (!(epochs[n].time_s > epochs[n - 1].time_s))
            throw DomainError(fmt::format("observation times must increase (epoch {})", epochs[n].t_index));

    std::vector<TrackEstimate> out;
    if (epochs.empty()) return out;
    out.reserve(epochs.size());

    Rng rng(config.seed);
    ParticleSet ps = init_particles(config.prior, config.particles, rng);
    const double jn = static_cast<double>(config.particles);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double t_prev = epochs.front().time_s - config.motion.step_s;

    for (const auto& epoch : epochs) {
        predict_particles(ps, epoch.time_s - t_prev, config.motion, rng);
        t_prev = epoch.time_s;
        update(ps, epoch.z, grid, config.paths, config.model, {config.threads});

        TrackEstimate est{epoch.time_s, mmse_estimate(ps), effective_sample_size(ps), 0.0, 0.0};
        for (std::size_t j = 0; j < ps.size(); ++j) {
            double dr = ps.states[j].range - est.state.range;
            double dd = ps.states[j].depth - est.state.depth;
            est.range_var += ps.weights[j] * dr * dr;
            est.depth_var += ps.weights[j] * dd * dd;
        }
        out.push_back(est);

        if (est.ess < config.resample_fraction * jn) {
            ps = resample(ps, rng);
            if (config.jitter.enabled()) {
                for (auto& s : ps.states) {
                    s.range += config.jitter.range_m * gauss(rng);
                    s.depth += config.jitter.depth_m * gauss(rng);
                    s.range_speed += config.jitter.speed_mps * gauss(rng);
                }
            }
        }
    }
    return out;
}

}  // namespace pfloc
