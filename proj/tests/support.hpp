#pragma once

// Shared fixtures and independent oracles for the test suites.

#include "pfloc/environment.hpp"

#include <cmath>

namespace pfloc::testing {

inline constexpr double kBottom = 216.5;

inline Waveguide iso_waveguide(double receiver_depth = 150.0, double speed = 1500.0) {
    return Waveguide(SoundSpeedProfile::isovelocity(speed, kBottom), kBottom, receiver_depth);
}

/// Downward-refracting shelf profile with a surface mixed layer and a
/// thermocline between roughly 10 and 60 m.
inline SoundSpeedProfile summer_profile() {
    return SoundSpeedProfile({{0.0, 1521.5},
                              {10.0, 1521.0},
                              {20.0, 1517.5},
                              {30.0, 1509.0},
                              {40.0, 1500.5},
                              {50.0, 1495.0},
                              {60.0, 1493.0},
                              {80.0, 1491.0},
                              {100.0, 1490.0},
                              {150.0, 1488.6},
                              {216.5, 1488.0}});
}

inline Waveguide summer_waveguide(double receiver_depth = kDefaultReceiverDepth) {
    return Waveguide(summer_profile(), kBottom, receiver_depth);
}

/// Straight-line image-source arrival angle (degrees, positive from above)
/// for a constant sound speed waveguide.
inline double image_source_doa_deg(PathKind kind, double range, double source_depth, double receiver_depth,
                                   double bottom = kBottom) {
    double vertical = 0.0;
    double sign = 1.0;
    switch (kind) {
        case PathKind::DP: vertical = receiver_depth - source_depth; break;
        case PathKind::SB: vertical = receiver_depth + source_depth; break;
        case PathKind::BB:
            vertical = 2.0 * bottom - source_depth - receiver_depth;
            sign = -1.0;
            break;
        case PathKind::SBB:
            vertical = 2.0 * bottom + source_depth - receiver_depth;
            sign = -1.0;
            break;
    }
    return sign * std::atan(vertical / range) * 180.0 / 3.14159265358979323846;
}

}  // namespace pfloc::testing
