#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pfloc {

inline constexpr double kRadPerDeg = std::numbers::pi / 180.0;
inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;

/// Midpoint of the 94.125-212.25 m vertical array; the single point at which
/// arrival angles are evaluated unless an environment file says otherwise.
inline constexpr double kDefaultReceiverDepth = 153.1875;

struct SspKnot {
    double depth;  // m
    double speed;  // m/s
};

/// Piecewise-linear sound speed over depth. Knot depths are strictly
/// increasing and start at the surface.
class SoundSpeedProfile {
public:
    explicit SoundSpeedProfile(std::vector<SspKnot> knots);

    static SoundSpeedProfile isovelocity(double speed, double max_depth);

    /// Throws DomainError outside [0, max_depth()].
    [[nodiscard]] double speed_at(double depth) const;

    [[nodiscard]] std::span<const SspKnot> knots() const { return knots_; }
    [[nodiscard]] double max_depth() const { return knots_.back().depth; }

private:
    std::vector<SspKnot> knots_;
};

[[nodiscard]] double sound_speed_at(const SoundSpeedProfile& ssp, double depth);

/// One constant-gradient slab of the water column.
struct SoundSpeedLayer {
    double top;        // m
    double bottom;     // m
    double speed_top;  // m/s
    double gradient;   // 1/s, dc/dz

    [[nodiscard]] double speed_at(double depth) const { return speed_top + gradient * (depth - top); }
};

/// Flat-bottom range-independent waveguide with a point receiver at range 0.
class Waveguide {
public:
    Waveguide(SoundSpeedProfile ssp, double bottom_depth, double receiver_depth = kDefaultReceiverDepth);

    [[nodiscard]] const SoundSpeedProfile& ssp() const { return ssp_; }
    [[nodiscard]] double bottom_depth() const { return bottom_depth_; }
    [[nodiscard]] double receiver_depth() const { return receiver_depth_; }

    /// SSP segments clipped to the water column [0, bottom_depth].
    [[nodiscard]] std::span<const SoundSpeedLayer> layers() const { return layers_; }

    /// Layer holding `depth`. On a knot, `heading` (> 0 down, < 0 up, 0 level)
    /// picks the side the ray is about to enter.
    [[nodiscard]] std::size_t layer_index(double depth, double heading) const;

private:
    SoundSpeedProfile ssp_;
    double bottom_depth_;
    double receiver_depth_;
    std::vector<SoundSpeedLayer> layers_;
};

/// The four dominant propagation paths. The numeric value is the canonical
/// index, ordered by descending arrival angle.
enum class PathKind : std::uint8_t { SB = 1, DP = 2, BB = 3, SBB = 4 };

inline constexpr std::array<PathKind, 4> kAllPaths{PathKind::SB, PathKind::DP, PathKind::BB, PathKind::SBB};

[[nodiscard]] constexpr int canonical_index(PathKind kind) { return static_cast<int>(kind); }
[[nodiscard]] std::string_view to_string(PathKind kind);
[[nodiscard]] std::optional<PathKind> path_kind_from_index(int index);

/// Path set used by a K-path model: K = 4 is all paths, K = 2 is {SB, DP}.
[[nodiscard]] std::vector<PathKind> paths_for_count(std::size_t count);

enum class Boundary : std::uint8_t { Surface, Bottom };

struct Position {
    double range;  // m, horizontal distance from the receiver
    double depth;  // m
};

struct RaySample {
    double range;      // m
    double depth;      // m
    double angle_deg;  // positive when travelling downward
};

struct RayPath {
    double launch_angle_deg = 0.0;
    std::vector<RaySample> samples;
    std::vector<Boundary> bounce_events;
};

/// Integrates a ray in the direction of increasing range from `start` using
/// exact circular arcs inside each constant-gradient layer with specular
/// reflection at the surface and bottom. Stops at `max_range` or at the
/// (max_bounces + 1)-th boundary interaction. Samples are emitted at the start,
/// every layer crossing and bounce, every `sample_step` metres of range when
/// positive, and at the end point.
[[nodiscard]] RayPath trace_ray(const Waveguide& wg, Position start, double launch_angle_deg, double max_range,
                                int max_bounces, double sample_step = 0.0);

struct EigenRay {
    PathKind kind;
    double arrival_angle_deg;  // at the receiver, positive when arriving from above
    double launch_angle_deg;   // at the source, positive when launched downward
    Position source;
};

struct EigenrayOptions {
    int fan_size = 2048;
    double fan_limit_deg = 89.0;
    double depth_tolerance = 1e-3;  // m
};

/// Launch-angle fan of rays shot from the receiver out to one source range,
/// refined around changes of bounce signature. Any number of source depths
/// and path kinds can be solved against the same fan; by reciprocity the
/// receiver-launched ray is the time-reversed eigenray.
class EigenrayFan {
public:
    EigenrayFan(const Waveguide& wg, double source_range, EigenrayOptions options = {});

    /// Returns std::nullopt when no ray of the requested signature reaches
    /// `source_depth` (geometrically impossible path).
    [[nodiscard]] std::optional<EigenRay> solve(double source_depth, PathKind kind) const;

    [[nodiscard]] double source_range() const { return range_; }
    [[nodiscard]] std::size_t sample_count() const { return fan_.size(); }

    struct Signature {
        std::uint8_t count = 0;  // 3 means more than two interactions or no arrival
        std::array<Boundary, 2> events{};
        friend bool operator==(const Signature&, const Signature&) = default;
    };

    struct Shot {
        double theta;    // receiver launch angle, rad, positive downward
        double depth;    // depth at the source range
        double angle;    // ray angle at the source range, rad
        Signature signature;
    };

private:
    [[nodiscard]] Shot shoot(double theta) const;

    const Waveguide* wg_;
    double range_;
    EigenrayOptions options_;
    std::vector<Shot> fan_;
};

/// Eigenray from `source` to the receiver with the bounce history of `kind`.
/// Throws DomainError for positions outside the water column or at range <= 0.
[[nodiscard]] std::optional<EigenRay> find_eigenray(const Waveguide& wg, Position source, PathKind kind,
                                                    const EigenrayOptions& options = {});

}  // namespace pfloc
