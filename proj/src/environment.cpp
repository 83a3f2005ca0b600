#include "pfloc/environment.hpp"

#include "pfloc/errors.hpp"
#include "ray_kernel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace pfloc {

SoundSpeedProfile::SoundSpeedProfile(std::vector<SspKnot> knots) : knots_(std::move(knots)) {
    if (knots_.size() < 2) throw DomainError("sound speed profile needs at least two knots");
    if (knots_.front().depth != 0.0) throw DomainError("sound speed profile must start at depth 0");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        const auto& k = knots_[i];
        if (!std::isfinite(k.depth) || !std::isfinite(k.speed) || k.speed <= 0.0)
            throw DomainError(fmt::format("invalid sound speed knot {} ({}, {})", i, k.depth, k.speed));
        if (i > 0 && !(k.depth > knots_[i - 1].depth))
            throw DomainError(fmt::format("sound speed knot depths must increase strictly (knot {})", i));
    }
}

SoundSpeedProfile SoundSpeedProfile::isovelocity(double speed, double max_depth) {
    return SoundSpeedProfile({{0.0, speed}, {max_depth, speed}});
}

double SoundSpeedProfile::speed_at(double depth) const {
    if (!(depth >= 0.0 && depth <= max_depth()))
        throw DomainError(fmt::format("depth {} m outside sound speed profile [0, {}]", depth, max_depth()));
    auto hi = std::upper_bound(knots_.begin(), knots_.end(), depth,
                               [](double d, const SspKnot& k) { return d < k.depth; });
    if (hi == knots_.end()) return knots_.back().speed;
    const auto lo = hi - 1;
    const double t = (depth - lo->depth) / (hi->depth - lo->depth);
    return lo->speed + t * (hi->speed - lo->speed);
}

double sound_speed_at(const SoundSpeedProfile& ssp, double depth) { return ssp.speed_at(depth); }

Waveguide::Waveguide(SoundSpeedProfile ssp, double bottom_depth, double receiver_depth)
    : ssp_(std::move(ssp)), bottom_depth_(bottom_depth), receiver_depth_(receiver_depth) {
    if (!(bottom_depth_ > 0.0)) throw DomainError("bottom depth must be positive");
    if (!(receiver_depth_ > 0.0 && receiver_depth_ < bottom_depth_))
        throw DomainError(fmt::format("receiver depth {} m must lie strictly inside (0, {})", receiver_depth_,
                                      bottom_depth_));
    if (ssp_.max_depth() < bottom_depth_)
        throw DomainError(fmt::format("sound speed profile ends at {} m, above the bottom at {} m",
                                      ssp_.max_depth(), bottom_depth_));

    const auto knots = ssp_.knots();
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double top = knots[i].depth;
        if (top >= bottom_depth_) break;
        const double gradient = (knots[i + 1].speed - knots[i].speed) / (knots[i + 1].depth - top);
        layers_.push_back({top, std::min(knots[i + 1].depth, bottom_depth_), knots[i].speed, gradient});
    }
}

std::size_t Waveguide::layer_index(double depth, double heading) const {
    auto it = std::upper_bound(layers_.begin(), layers_.end(), depth,
                               [](double d, const SoundSpeedLayer& l) { return d < l.top; });
    std::size_t idx = it == layers_.begin() ? 0 : static_cast<std::size_t>(it - layers_.begin()) - 1;
    idx = std::min(idx, layers_.size() - 1);
    // On an interior knot, idx is the layer below it.
    if (idx > 0 && depth == layers_[idx].top) {
        const bool go_up = heading < 0.0 || (heading == 0.0 && layers_[idx].gradient > 0.0);
        if (go_up) --idx;
    }
    return idx;
}

std::string_view to_string(PathKind kind) {
    switch (kind) {
        case PathKind::SB: return "SB";
        case PathKind::DP: return "DP";
        case PathKind::BB: return "BB";
        case PathKind::SBB: return "SBB";
    }
    return "?";
}

std::optional<PathKind> path_kind_from_index(int index) {
    if (index < 1 || index > 4) return std::nullopt;
    return static_cast<PathKind>(index);
}

std::vector<PathKind> paths_for_count(std::size_t count) {
    switch (count) {
        case 1: return {PathKind::SB};
        case 2: return {PathKind::SB, PathKind::DP};
        case 3: return {PathKind::SB, PathKind::DP, PathKind::BB};
        case 4: return {kAllPaths.begin(), kAllPaths.end()};
        default: throw DomainError(fmt::format("path count must be 1..4, got {}", count));
    }
}

RayPath trace_ray(const Waveguide& wg, Position start, double launch_angle_deg, double max_range, int max_bounces,
                  double sample_step) {
    if (!(start.depth >= 0.0 && start.depth <= wg.bottom_depth()))
        throw DomainError(fmt::format("ray start depth {} m outside the water column", start.depth));
    if (!(std::abs(launch_angle_deg) < 90.0)) throw DomainError("launch angle must satisfy |angle| < 90 deg");

    const double theta0 = launch_angle_deg * kRadPerDeg;
    detail::RayCursor cur{start.range, start.depth, theta0, wg.layer_index(start.depth, theta0)};
    const double xi = std::cos(theta0) / wg.layers()[cur.layer].speed_at(start.depth);

    RayPath path;
    path.launch_angle_deg = launch_angle_deg;
    auto record = [&] { path.samples.push_back({cur.x, cur.z, cur.theta * kDegPerRad}); };
    record();

    auto on_bounce = [&](Boundary b) {
        path.bounce_events.push_back(b);
        record();
        return static_cast<int>(path.bounce_events.size()) <= max_bounces;
    };

    double next = sample_step > 0.0 ? start.range + sample_step : max_range;
    while (cur.x < max_range) {
        const double target = std::min(next, max_range);
        if (!detail::advance(wg, xi, cur, target, on_bounce, record)) break;
        record();
        next += sample_step > 0.0 ? sample_step : 0.0;
        if (sample_step <= 0.0) break;
    }
    return path;
}

}  // namespace pfloc
