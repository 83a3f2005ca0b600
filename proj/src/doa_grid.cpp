#include "pfloc/doa_grid.hpp"

#include "pfloc/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

namespace pfloc {

void validate_roi(const Roi& roi, const Waveguide* wg) {
    const bool finite = std::isfinite(roi.range_min) && std::isfinite(roi.range_max) &&
                        std::isfinite(roi.depth_min) && std::isfinite(roi.depth_max);
    if (!finite || !(roi.range_min > 0.0) || !(roi.range_max > roi.range_min) || !(roi.depth_min >= 0.0) ||
        !(roi.depth_max > roi.depth_min))
        throw DomainError(fmt::format("invalid roi [{}, {}] x [{}, {}]", roi.range_min, roi.range_max,
                                      roi.depth_min, roi.depth_max));
    if (wg != nullptr && roi.depth_max > wg->bottom_depth())
        throw DomainError(fmt::format("roi reaches {} m, below the bottom at {} m", roi.depth_max,
                                      wg->bottom_depth()));
}

DoaGrid::DoaGrid(Roi roi, std::size_t n_range, std::size_t n_depth, std::vector<PathKind> kinds,
                 std::vector<double> values)
    : roi_(roi), n_range_(n_range), n_depth_(n_depth), kinds_(std::move(kinds)), values_(std::move(values)) {
    validate_roi(roi_);
    if (n_range_ < 2 || n_depth_ < 2) throw DomainError("grid needs at least 2 points per axis");
    if (kinds_.empty()) throw DomainError("grid needs at least one path");
    if (values_.size() != n_range_ * n_depth_ * kinds_.size())
        throw DomainError(fmt::format("grid value count {} does not match {}x{}x{}", values_.size(), n_range_,
                                      n_depth_, kinds_.size()));
    for (double v : values_)
        if (!is_impossible(v) && !(v >= -90.0 && v < 90.0))
            throw DomainError(fmt::format("grid value {} outside [-90, 90)", v));
    range_step_ = (roi_.range_max - roi_.range_min) / static_cast<double>(n_range_ - 1);
    depth_step_ = (roi_.depth_max - roi_.depth_min) / static_cast<double>(n_depth_ - 1);
}

std::optional<std::size_t> DoaGrid::layer_of(PathKind kind) const {
    for (std::size_t k = 0; k < kinds_.size(); ++k)
        if (kinds_[k] == kind) return k;
    return std::nullopt;
}

double DoaGrid::impossible_fraction(std::size_t k) const {
    if (k >= kinds_.size()) throw DomainError("grid layer index out of range");
    std::size_t count = 0;
    for (std::size_t i = k; i < values_.size(); i += kinds_.size()) count += is_impossible(values_[i]) ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(n_range_ * n_depth_);
}

bool DoaGrid::interpolate_layers(Position p, std::span<const std::size_t> layers, std::span<double> out) const {
    if (!roi_.contains(p)) return false;
    const double fr = (p.range - roi_.range_min) / range_step_;
    const double fd = (p.depth - roi_.depth_min) / depth_step_;
    const auto ir = std::min(static_cast<std::size_t>(fr), n_range_ - 2);
    const auto id = std::min(static_cast<std::size_t>(fd), n_depth_ - 2);
    const double tr = std::clamp(fr - static_cast<double>(ir), 0.0, 1.0);
    const double td = std::clamp(fd - static_cast<double>(id), 0.0, 1.0);
    const std::array<double, 4> w{(1.0 - tr) * (1.0 - td), (1.0 - tr) * td, tr * (1.0 - td), tr * td};

    const std::size_t kk = kinds_.size();
    const double* c00 = &values_[(ir * n_depth_ + id) * kk];
    const double* c01 = c00 + kk;
    const double* c10 = c00 + n_depth_ * kk;
    const double* c11 = c10 + kk;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::size_t k = layers[i];
        const std::array<double, 4> v{c00[k], c01[k], c10[k], c11[k]};
        double acc = 0.0;
        bool impossible = false;
        for (int j = 0; j < 4; ++j) {
            if (w[j] == 0.0) continue;
            if (is_impossible(v[j])) {
                impossible = true;
                break;
            }
            acc += w[j] * v[j];
        }
        out[i] = impossible ? kImpossible : acc;
    }
    return true;
}

std::optional<double> interpolate_doa(const DoaGrid& grid, Position p, std::size_t k) {
    if (k >= grid.path_count()) throw DomainError(fmt::format("grid has no layer {}", k));
    const std::array<std::size_t, 1> layer{k};
    std::array<double, 1> out{};
    if (!grid.interpolate_layers(p, layer, out))
        throw DomainError(fmt::format("position ({}, {}) outside the grid roi", p.range, p.depth));
    if (is_impossible(out[0])) return std::nullopt;
    return out[0];
}

DoaGrid build_doa_grid(const Waveguide& wg, const Roi& roi, std::size_t n_range, std::size_t n_depth,
                       std::span<const PathKind> kinds, const GridBuildOptions& options) {
    validate_roi(roi, &wg);
    if (n_range < 2 || n_depth < 2) throw DomainError("grid needs N_r >= 2 and N_d >= 2");
    if (kinds.empty()) throw DomainError("grid needs at least one path");

    const std::size_t kk = kinds.size();
    std::vector<double> values(n_range * n_depth * kk, kImpossible);
    const double dr = (roi.range_max - roi.range_min) / static_cast<double>(n_range - 1);
    const double dd = (roi.depth_max - roi.depth_min) / static_cast<double>(n_depth - 1);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t ir = next++; ir < n_range; ir = next++) {
            const EigenrayFan fan(wg, roi.range_min + static_cast<double>(ir) * dr, options.eigenray);
            for (std::size_t id = 0; id < n_depth; ++id) {
                const double depth = roi.depth_min + static_cast<double>(id) * dd;
                for (std::size_t k = 0; k < kk; ++k) {
                    if (auto ray = fan.solve(depth, kinds[k]))
                        values[(ir * n_depth + id) * kk + k] = ray->arrival_angle_deg;
                }
            }
        }
    };
    const unsigned threads = std::max(1u, options.threads);
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    return DoaGrid(roi, n_range, n_depth, {kinds.begin(), kinds.end()}, std::move(values));
}

namespace {

constexpr std::array<char, 8> kMagic{'P', 'F', 'D', 'O', 'A', 'G', 'R', 'D'};

template <class T>
void put(std::ostream& out, T value) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
T get(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) throw ParseError("grid file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

}  // namespace

void write_grid(const DoaGrid& grid, std::ostream& out) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kGridFormatVersion);
    const Roi& roi = grid.roi();
    for (double v : {roi.range_min, roi.range_max, roi.depth_min, roi.depth_max}) put<double>(out, v);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n_range()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n_depth()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.path_count()));
    for (PathKind k : grid.kinds()) put<std::uint8_t>(out, static_cast<std::uint8_t>(canonical_index(k)));
    for (double v : grid.values()) put<double>(out, v);
    if (!out) throw IoError("failed writing grid");
}

DoaGrid read_grid(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ParseError("not a DOA grid file (bad magic)");
    const auto version = get<std::uint32_t>(in);
    if (version != kGridFormatVersion) throw ParseError(fmt::format("unsupported grid format version {}", version));
    Roi roi{};
    roi.range_min = get<double>(in);
    roi.range_max = get<double>(in);
    roi.depth_min = get<double>(in);
    roi.depth_max = get<double>(in);
    const auto n_range = get<std::uint32_t>(in);
    const auto n_depth = get<std::uint32_t>(in);
    const auto n_paths = get<std::uint32_t>(in);
    if (n_paths == 0 || n_paths > 4) throw ParseError(fmt::format("grid path count {} not in 1..4", n_paths));
    std::vector<PathKind> kinds;
    for (std::uint32_t k = 0; k < n_paths; ++k) {
        const auto kind = path_kind_from_index(get<std::uint8_t>(in));
        if (!kind) throw ParseError("grid file names an unknown path kind");
        kinds.push_back(*kind);
    }
    const std::size_t count = std::size_t{n_range} * n_depth * n_paths;
    std::vector<double> values(count);
    for (auto& v : values) v = get<double>(in);
    try {
        return DoaGrid(roi, n_range, n_depth, std::move(kinds), std::move(values));
    } catch (const DomainError& e) {
        throw ParseError(fmt::format("grid file inconsistent: {}", e.what()));
    }
}

void save_grid(const DoaGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    write_grid(grid, out);
}

DoaGrid load_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open grid file {}", path.string()));
    return read_grid(in);
}

}  // namespace pfloc
