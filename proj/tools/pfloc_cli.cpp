#include "pfloc/pfloc.h"

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
    pfloc_status status;
};

void check(pfloc_status status) {
    if (status != PFLOC_OK) throw Failure{status};
}

using ConfigPtr = std::unique_ptr<pfloc_config, decltype(&pfloc_config_free)>;

std::string artifact(const pfloc_config* cfg, const char* name) {
    std::size_t needed = 0;
    check(pfloc_config_file(cfg, name, nullptr, 0, &needed));
    std::string out(needed, '\0');
    check(pfloc_config_file(cfg, name, out.data(), out.size(), &needed));
    out.resize(needed - 1);
    return out;
}

const char* path_name(int index) {
    switch (index) {
        case 1: return "SB";
        case 2: return "DP";
        case 3: return "BB";
        case 4: return "SBB";
        default: return "?";
    }
}

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<unsigned> threads;
};

ConfigPtr make_config(const GlobalOptions& g) {
    pfloc_config* raw = nullptr;
    if (g.config.empty())
        check(pfloc_config_default(4, &raw));
    else
        check(pfloc_config_load(g.config.c_str(), &raw));
    ConfigPtr cfg(raw, pfloc_config_free);
    if (g.seed) check(pfloc_config_set_seed(cfg.get(), *g.seed));
    if (!g.out.empty()) check(pfloc_config_set_output_dir(cfg.get(), g.out.c_str()));
    if (g.threads) check(pfloc_config_set_threads(cfg.get(), *g.threads));
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shallow-water source localization from DOA observations"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", pfloc_version());

    GlobalOptions g;
    app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Override the configured seed");
    app.add_option("--out", g.out, "Output directory for generated files");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* build = app.add_subcommand("build-grid", "Trace the eigenray DOA grid for an environment");
    std::string env;
    std::optional<std::size_t> n_range, n_depth;
    bool quiet = false;
    build->add_option("--env", env, "Environment JSON (overrides the config)");
    build->add_option("--n-range", n_range, "Grid points in range");
    build->add_option("--n-depth", n_depth, "Grid points in depth");
    build->add_flag("-q,--quiet", quiet, "Suppress coverage statistics");

    auto* simulate = app.add_subcommand("simulate", "Generate a truth track and synthetic observations");

    auto* track = app.add_subcommand("track", "Run the particle filter on an observation file");
    std::optional<std::size_t> particles;
    track->add_option("--particles", particles, "Number of particles");

    auto* evaluate = app.add_subcommand("evaluate", "Score estimates against the truth track");
    std::vector<std::string> estimates;
    std::string truth, report;
    evaluate->add_option("--estimates", estimates, "Estimates CSV, optionally LABEL=PATH (repeatable)");
    evaluate->add_option("--truth", truth, "Truth CSV (default: from the config)");
    evaluate->add_option("--report", report, "Report JSON (default: from the config)");

    auto* show = app.add_subcommand("show-config", "Print the resolved configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        ConfigPtr cfg = make_config(g);

        if (*build) {
            if (!env.empty()) check(pfloc_config_set_environment(cfg.get(), env.c_str()));
            if (n_range || n_depth) {
                std::size_t nr = 0, nd = 0;
                check(pfloc_config_get_grid_size(cfg.get(), &nr, &nd));
                check(pfloc_config_set_grid_size(cfg.get(), n_range.value_or(nr), n_depth.value_or(nd)));
            }
            pfloc_grid_stats stats{};
            check(pfloc_build_grid(cfg.get(), &stats));
            std::printf("wrote %s (%zu x %zu x %zu) in %.1f s\n", artifact(cfg.get(), "grid").c_str(), stats.n_range,
                        stats.n_depth, stats.path_count, stats.seconds);
            if (!quiet)
                for (std::size_t k = 0; k < stats.path_count; ++k)
                    std::printf("  %-3s impossible fraction %.6f\n", path_name(stats.path_index[k]),
                                stats.impossible_fraction[k]);
        } else if (*simulate) {
            pfloc_sim_summary s{};
            check(pfloc_simulate(cfg.get(), &s));
            if (s.truncated) std::fprintf(stderr, "warning: %s\n", pfloc_last_warning());
            std::printf("wrote %s and %s: %zu epochs, %zu DOAs\n", artifact(cfg.get(), "truth").c_str(),
                        artifact(cfg.get(), "observations").c_str(), s.epochs, s.detections);
        } else if (*track) {
            if (particles) check(pfloc_config_set_particles(cfg.get(), *particles));
            pfloc_track_summary s{};
            check(pfloc_track(cfg.get(), &s));
            std::printf("wrote %s: %zu epochs in %.1f s", artifact(cfg.get(), "estimates").c_str(), s.epochs,
                        s.seconds);
            if (s.epochs > 0)
                std::printf(", final range %.2f m depth %.2f m speed %.3f m/s, min ESS %.1f", s.final_range_m,
                            s.final_depth_m, s.final_speed_mps, s.min_ess);
            std::printf("\n");
        } else if (*evaluate) {
            if (estimates.empty()) estimates.push_back(artifact(cfg.get(), "estimates"));
            if (truth.empty()) truth = artifact(cfg.get(), "truth");
            if (report.empty()) report = artifact(cfg.get(), "report");
            std::vector<std::string> labels, paths;
            for (const auto& e : estimates) {
                auto eq = e.find('=');
                labels.push_back(eq == std::string::npos ? std::string{} : e.substr(0, eq));
                paths.push_back(eq == std::string::npos ? e : e.substr(eq + 1));
            }
            std::vector<const char*> lp, pp;
            for (std::size_t i = 0; i < paths.size(); ++i) {
                lp.push_back(labels[i].c_str());
                pp.push_back(paths[i].c_str());
            }
            std::vector<pfloc_eval_result> results(paths.size());
            check(pfloc_evaluate(pp.data(), lp.data(), pp.size(), truth.c_str(), report.c_str(), results.data()));
            for (std::size_t i = 0; i < results.size(); ++i)
                std::printf("%s: %zu epochs, range RMSE %.3f m, depth RMSE %.3f m\n",
                            labels[i].empty() ? paths[i].c_str() : labels[i].c_str(), results[i].epochs,
                            results[i].rmse_range_m, results[i].rmse_depth_m);
            std::printf("wrote %s\n", report.c_str());
        } else if (*show) {
            std::size_t needed = 0;
            check(pfloc_config_to_json(cfg.get(), nullptr, 0, &needed));
            std::string text(needed, '\0');
            check(pfloc_config_to_json(cfg.get(), text.data(), text.size(), &needed));
            std::fputs(text.c_str(), stdout);
        }
    } catch (const Failure& f) {
        std::fprintf(stderr, "error (%s): %s\n", pfloc_status_name(f.status), pfloc_last_error());
        return f.status == PFLOC_ERR_USAGE ? kExitUsage : kExitFailure;
    }
    return kExitOk;
}
