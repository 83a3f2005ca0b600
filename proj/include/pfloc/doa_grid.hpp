#pragma once

#include "pfloc/environment.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace pfloc {

/// Stored in place of an arrival angle for geometrically impossible paths.
inline constexpr double kImpossible = -std::numeric_limits<double>::infinity();

[[nodiscard]] inline bool is_impossible(double value) { return value == kImpossible; }

/// Rectangular region of interest in (range, depth).
struct Roi {
    double range_min;
    double range_max;
    double depth_min;
    double depth_max;

    [[nodiscard]] bool contains(Position p) const {
        return p.range >= range_min && p.range <= range_max && p.depth >= depth_min && p.depth <= depth_max;
    }
    [[nodiscard]] Position center() const { return {0.5 * (range_min + range_max), 0.5 * (depth_min + depth_max)}; }
    friend bool operator==(const Roi&, const Roi&) = default;
};

/// Region used throughout the shallow-water experiments.
inline constexpr Roi kDefaultRoi{100.0, 2500.0, 10.0, 175.0};

/// Throws DomainError unless the roi is nonempty, at positive range, and
/// inside the water column of `wg` (when given).
void validate_roi(const Roi& roi, const Waveguide* wg = nullptr);

/// Immutable N_r x N_d x K table of modelled arrival angles (degrees) on a
/// uniform grid; values are row-major in (range, depth, path).
class DoaGrid {
public:
    DoaGrid(Roi roi, std::size_t n_range, std::size_t n_depth, std::vector<PathKind> kinds,
            std::vector<double> values);

    [[nodiscard]] const Roi& roi() const { return roi_; }
    [[nodiscard]] std::size_t n_range() const { return n_range_; }
    [[nodiscard]] std::size_t n_depth() const { return n_depth_; }
    [[nodiscard]] std::size_t path_count() const { return kinds_.size(); }
    [[nodiscard]] std::span<const PathKind> kinds() const { return kinds_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }

    [[nodiscard]] double range_step() const { return range_step_; }
    [[nodiscard]] double depth_step() const { return depth_step_; }
    [[nodiscard]] double range_at(std::size_t ir) const { return roi_.range_min + static_cast<double>(ir) * range_step_; }
    [[nodiscard]] double depth_at(std::size_t id) const { return roi_.depth_min + static_cast<double>(id) * depth_step_; }

    [[nodiscard]] double at(std::size_t ir, std::size_t id, std::size_t k) const {
        return values_[(ir * n_depth_ + id) * kinds_.size() + k];
    }

    /// Grid layer holding `kind`, if present.
    [[nodiscard]] std::optional<std::size_t> layer_of(PathKind kind) const;

    /// Fraction of grid points at which layer k is impossible.
    [[nodiscard]] double impossible_fraction(std::size_t k) const;

    /// Bilinear interpolation of every requested layer at `p`, written to `out`
    /// (kImpossible where any corner with nonzero weight is impossible).
    /// Returns false when `p` is outside the roi.
    bool interpolate_layers(Position p, std::span<const std::size_t> layers, std::span<double> out) const;

private:
    Roi roi_;
    std::size_t n_range_;
    std::size_t n_depth_;
    std::vector<PathKind> kinds_;
    std::vector<double> values_;
    double range_step_;
    double depth_step_;
};

struct GridBuildOptions {
    EigenrayOptions eigenray{};
    unsigned threads = 1;
};

/// Arrival angle of every path in `kinds` at every grid point. Pure function
/// of its inputs; the thread count does not change the result.
[[nodiscard]] DoaGrid build_doa_grid(const Waveguide& wg, const Roi& roi, std::size_t n_range, std::size_t n_depth,
                                     std::span<const PathKind> kinds, const GridBuildOptions& options = {});

/// Bilinear lookup of grid layer `k`. Returns std::nullopt for an impossible
/// path; throws DomainError outside the roi.
[[nodiscard]] std::optional<double> interpolate_doa(const DoaGrid& grid, Position p, std::size_t k);

// Binary grid file: little-endian, "PFDOAGRD" magic, u32 version, f64 roi
// (range_min, range_max, depth_min, depth_max), u32 N_r, u32 N_d, u32 K,
// K u8 canonical path indices, then N_r*N_d*K f64 values row-major with
// -inf for impossible entries.
inline constexpr std::uint32_t kGridFormatVersion = 1;

void write_grid(const DoaGrid& grid, std::ostream& out);
[[nodiscard]] DoaGrid read_grid(std::istream& in);
void save_grid(const DoaGrid& grid, const std::filesystem::path& path);
[[nodiscard]] DoaGrid load_grid(const std::filesystem::path& path);

}  // namespace pfloc
