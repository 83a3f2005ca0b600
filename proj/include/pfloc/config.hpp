#pragma once

#include "pfloc/doa_grid.hpp"
#include "pfloc/filter.hpp"
#include "pfloc/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace pfloc {

struct GridSpec {
    Roi roi = kDefaultRoi;
    std::size_t n_range = 2400;
    std::size_t n_depth = 165;
    EigenrayOptions eigenray{};
};

/// Everything a pipeline command needs. Input and output file names are
/// resolved by `output_path`; see the schema in the README.
struct RunConfig {
    std::filesystem::path environment;            // resolved against the config file directory
    std::filesystem::path output_dir = ".";
    std::filesystem::path grid = "grid.bin";       // the rest resolve against output_dir
    std::filesystem::path observations = "observations.jsonl";
    std::filesystem::path truth = "truth.csv";
    std::filesystem::path estimates = "estimates.csv";
    std::filesystem::path report = "report.json";

    GridSpec grid_spec{};
    ScenarioConfig scenario{};  // the simulator always draws from its own 4-path model
    TrackerConfig tracker{};    // paths and model follow the selected K
    std::uint64_t seed = 1;
    unsigned threads = 1;

    [[nodiscard]] std::size_t path_count() const { return tracker.paths.size(); }
    [[nodiscard]] std::filesystem::path output_path(const std::filesystem::path& name) const;

    void validate() const;
};

/// Independent seeds for the truth, observation and tracker streams.
enum class SeedStream : std::uint64_t { Truth = 1, Observations = 2, Tracker = 3 };
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

/// Parses a JSON run configuration. Unknown keys anywhere are rejected.
/// `base_dir` anchors a relative environment path.
[[nodiscard]] RunConfig parse_run_config(std::string_view text, std::string_view source = "config",
                                         const std::filesystem::path& base_dir = {});
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

/// The full resolved configuration as JSON, suitable for feeding back to parse_run_config.
[[nodiscard]] std::string run_config_to_json(const RunConfig& cfg);

/// Default configuration for K paths.
[[nodiscard]] RunConfig default_run_config(std::size_t k = 4);

}  // namespace pfloc
