#pragma once

// Constant-gradient ray stepping shared by trace_ray and the eigenray fan.
// Angles are in radians, positive when the ray heads to greater depth, and
// the ray always advances in +range. Within a layer c(z) = c0 + g (z - z0)
// the ray parameter xi = cos(theta) / c(z) is conserved, so
//   d(sin theta)/dx = -xi g   and   dz/dx = tan(theta).

#include "pfloc/environment.hpp"

#include <algorithm>
#include <cmath>

namespace pfloc::detail {

inline constexpr double kFlatGradient = 1e-12;
inline constexpr int kMaxSteps = 100000;

enum class StepEnd { Target, Top, Bottom };

inline StepEnd step_in_layer(const SoundSpeedLayer& layer, double xi, double x_target, double& x, double& z,
                             double& theta) {
    const double g = layer.gradient;
    const double remaining = x_target - x;

    if (std::abs(g) < kFlatGradient) {
        if (theta == 0.0) {
            x = x_target;
            return StepEnd::Target;
        }
        const double slope = std::tan(theta);
        const double boundary = theta > 0.0 ? layer.bottom : layer.top;
        const double dx = (boundary - z) / slope;
        if (dx >= remaining) {
            z = std::clamp(z + slope * remaining, layer.top, layer.bottom);
            x = x_target;
            return StepEnd::Target;
        }
        x += std::max(dx, 0.0);
        z = boundary;
        return theta > 0.0 ? StepEnd::Bottom : StepEnd::Top;
    }

    // A level ray bends toward lower sound speed.
    const bool down = theta > 0.0 || (theta == 0.0 && g < 0.0);
    StepEnd exit;
    double theta_exit;
    if (down) {
        const double cos_bottom = xi * layer.speed_at(layer.bottom);
        if (g < 0.0 || cos_bottom < 1.0) {
            exit = StepEnd::Bottom;
            theta_exit = std::acos(std::min(cos_bottom, 1.0));
        } else {
            exit = StepEnd::Top;  // turns inside the layer
            theta_exit = -std::acos(std::min(xi * layer.speed_at(layer.top), 1.0));
        }
    } else {
        const double cos_top = xi * layer.speed_at(layer.top);
        if (g > 0.0 || cos_top < 1.0) {
            exit = StepEnd::Top;
            theta_exit = -std::acos(std::min(cos_top, 1.0));
        } else {
            exit = StepEnd::Bottom;
            theta_exit = std::acos(std::min(xi * layer.speed_at(layer.bottom), 1.0));
        }
    }

    const double k = xi * g;
    // sin a - sin b and cos a - cos b in product form keep precision for short arcs.
    const double dx = 2.0 * std::cos(0.5 * (theta + theta_exit)) * std::sin(0.5 * (theta - theta_exit)) / k;
    if (dx >= remaining) {
        const double s = std::clamp(std::sin(theta) - k * remaining, -1.0, 1.0);
        const double theta_t = std::asin(s);
        const double dz = -2.0 * std::sin(0.5 * (theta_t + theta)) * std::sin(0.5 * (theta_t - theta)) / k;
        z = std::clamp(z + dz, layer.top, layer.bottom);
        x = x_target;
        theta = theta_t;
        return StepEnd::Target;
    }
    x += std::max(dx, 0.0);
    z = exit == StepEnd::Top ? layer.top : layer.bottom;
    theta = theta_exit;
    return exit;
}

struct RayCursor {
    double x;
    double z;
    double theta;
    std::size_t layer;
};

/// Moves the cursor to x_target. `on_bounce(Boundary)` runs after each
/// reflection and may return false to stop; `on_cross()` runs after each
/// layer change. Returns true when x_target is reached.
template <class OnBounce, class OnCross>
bool advance(const Waveguide& wg, double xi, RayCursor& cur, double x_target, OnBounce&& on_bounce,
             OnCross&& on_cross) {
    const auto layers = wg.layers();
    for (int step = 0; step < kMaxSteps; ++step) {
        if (cur.x >= x_target) return true;
        const StepEnd end = step_in_layer(layers[cur.layer], xi, x_target, cur.x, cur.z, cur.theta);
        switch (end) {
            case StepEnd::Target:
                return true;
            case StepEnd::Top:
                if (cur.layer == 0) {
                    cur.z = 0.0;
                    cur.theta = -cur.theta;
                    if (!on_bounce(Boundary::Surface)) return false;
                } else {
                    --cur.layer;
                    on_cross();
                }
                break;
            case StepEnd::Bottom:
                if (cur.layer + 1 == layers.size()) {
                    cur.z = wg.bottom_depth();
                    cur.theta = -cur.theta;
                    if (!on_bounce(Boundary::Bottom)) return false;
                } else {
                    ++cur.layer;
                    on_cross();
                }
                break;
        }
    }
    return false;
}

}  // namespace pfloc::detail
