#include "pfloc/environment.hpp"

#include "pfloc/errors.hpp"
#include "ray_kernel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pfloc {
namespace {

constexpr double kTransitionWidth = 1e-10;  // rad
constexpr int kMaxBisections = 200;

using Signature = EigenrayFan::Signature;

// Bounce history of the receiver-launched ray that reverses into `kind`.
Signature receiver_signature(PathKind kind) {
    switch (kind) {
        case PathKind::DP: return {0, {}};
        case PathKind::SB: return {1, {Boundary::Surface, Boundary::Surface}};
        case PathKind::BB: return {1, {Boundary::Bottom, Boundary::Surface}};
        case PathKind::SBB: return {2, {Boundary::Bottom, Boundary::Surface}};
    }
    return {3, {}};
}

// Straight-line image-source arrival angle; only used to pick among several
// refracted roots of the same signature.
double image_source_doa(const Waveguide& wg, Position src, PathKind kind) {
    const double zr = wg.receiver_depth();
    const double b = wg.bottom_depth();
    switch (kind) {
        case PathKind::DP: return std::atan2(zr - src.depth, src.range);
        case PathKind::SB: return std::atan2(zr + src.depth, src.range);
        case PathKind::BB: return -std::atan2(2.0 * b - src.depth - zr, src.range);
        case PathKind::SBB: return -std::atan2(2.0 * b + src.depth - zr, src.range);
    }
    return 0.0;
}

}  // namespace

EigenrayFan::EigenrayFan(const Waveguide& wg, double source_range, EigenrayOptions options)
    : wg_(&wg), range_(source_range), options_(options) {
    if (!(source_range > 0.0) || !std::isfinite(source_range))
        throw DomainError(fmt::format("source range {} m must be positive", source_range));
    if (options_.fan_size < 2 || !(options_.fan_limit_deg > 0.0 && options_.fan_limit_deg < 90.0))
        throw DomainError("eigenray fan needs >= 2 rays and a limit inside (0, 90) deg");

    const double limit = options_.fan_limit_deg * kRadPerDeg;
    const int n = options_.fan_size;
    fan_.reserve(static_cast<std::size_t>(n) + 32);
    for (int i = 0; i < n; ++i) fan_.push_back(shoot(-limit + 2.0 * limit * (i + 0.5) / n));

    // Pin signature changes down to a narrow gap so brackets that end on a
    // transition still see the depth reached at the edge of the signature.
    std::vector<Shot> refined;
    refined.reserve(fan_.size() + 32);
    for (std::size_t i = 0; i + 1 < fan_.size(); ++i) {
        refined.push_back(fan_[i]);
        Shot lo = fan_[i];
        Shot hi = fan_[i + 1];
        if (lo.signature == hi.signature) continue;
        for (int it = 0; it < kMaxBisections && hi.theta - lo.theta > kTransitionWidth; ++it) {
            const Shot mid = shoot(0.5 * (lo.theta + hi.theta));
            if (mid.signature == lo.signature) {
                lo = mid;
            } else if (mid.signature == hi.signature) {
                hi = mid;
            } else {
                break;  // a third signature inside the gap
            }
        }
        if (lo.theta != fan_[i].theta) refined.push_back(lo);
        if (hi.theta != fan_[i + 1].theta) refined.push_back(hi);
    }
    refined.push_back(fan_.back());
    fan_ = std::move(refined);
}

EigenrayFan::Shot EigenrayFan::shoot(double theta) const {
    const Waveguide& wg = *wg_;
    const double zr = wg.receiver_depth();
    detail::RayCursor cur{0.0, zr, theta, wg.layer_index(zr, theta)};
    const double xi = std::cos(theta) / wg.layers()[cur.layer].speed_at(zr);

    Signature sig;
    auto on_bounce = [&](Boundary b) {
        if (sig.count >= 2) {
            sig.count = 3;
            return false;
        }
        sig.events[sig.count++] = b;
        return true;
    };
    if (!detail::advance(wg, xi, cur, range_, on_bounce, [] {})) sig.count = 3;
    return {theta, cur.z, cur.theta, sig};
}

std::optional<EigenRay> EigenrayFan::solve(double source_depth, PathKind kind) const {
    if (!(source_depth >= 0.0 && source_depth <= wg_->bottom_depth()))
        throw DomainError(fmt::format("source depth {} m outside the water column", source_depth));

    const Signature target = receiver_signature(kind);
    const double tol = options_.depth_tolerance;
    const Position source{range_, source_depth};
    const double expected = image_source_doa(*wg_, source, kind);

    std::optional<EigenRay> best;
    double best_gap = std::numeric_limits<double>::infinity();
    auto accept = [&](const Shot& s) {
        const double arrival = -s.theta;
        const double gap = std::abs(arrival - expected);
        if (gap < best_gap) {
            best_gap = gap;
            best = EigenRay{kind, arrival * kDegPerRad, -s.angle * kDegPerRad, source};
        }
    };

    for (std::size_t i = 0; i + 1 < fan_.size(); ++i) {
        Shot lo = fan_[i];
        Shot hi = fan_[i + 1];
        if (!(lo.signature == target) || !(hi.signature == target)) continue;
        double f_lo = lo.depth - source_depth;
        double f_hi = hi.depth - source_depth;
        if ((f_lo > 0.0 && f_hi > 0.0) || (f_lo < 0.0 && f_hi < 0.0)) continue;

        for (int it = 0; it < kMaxBisections; ++it) {
            if (std::abs(f_lo) <= tol || std::abs(f_hi) <= tol) {
                accept(std::abs(f_lo) <= std::abs(f_hi) ? lo : hi);
                break;
            }
            const double mid_theta = 0.5 * (lo.theta + hi.theta);
            if (mid_theta <= lo.theta || mid_theta >= hi.theta) {
                accept(std::abs(f_lo) <= std::abs(f_hi) ? lo : hi);
                break;
            }
            const Shot mid = shoot(mid_theta);
            if (!(mid.signature == target)) break;
            const double f_mid = mid.depth - source_depth;
            if ((f_mid > 0.0) == (f_lo > 0.0)) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
                f_hi = f_mid;
            }
        }
    }
    return best;
}

std::optional<EigenRay> find_eigenray(const Waveguide& wg, Position source, PathKind kind,
                                      const EigenrayOptions& options) {
    if (!(source.range > 0.0) || !std::isfinite(source.range))
        throw DomainError(fmt::format("source range {} m must be positive", source.range));
    if (!(source.depth >= 0.0 && source.depth <= wg.bottom_depth()))
        throw DomainError(fmt::format("source depth {} m outside the water column", source.depth));
    return EigenrayFan(wg, source.range, options).solve(source.depth, kind);
}

}  // namespace pfloc
