#include "pfloc/pfloc.h"

#include "pfloc/assoc.hpp"
#include "pfloc/errors.hpp"
#include "pfloc/pipeline.hpp"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>

struct pfloc_config {
    pfloc::RunConfig cfg;
};

struct pfloc_grid {
    pfloc::DoaGrid grid;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_warning;

template <class Fn>
pfloc_status guarded(Fn&& fn) {
    try {
        g_error.clear();
        fn();
        return PFLOC_OK;
    } catch (const pfloc::UsageError& e) {
        g_error = e.what();
        return PFLOC_ERR_USAGE;
    } catch (const pfloc::DomainError& e) {
        g_error = e.what();
        return PFLOC_ERR_DOMAIN;
    } catch (const pfloc::ParseError& e) {
        g_error = e.what();
        return PFLOC_ERR_PARSE;
    } catch (const pfloc::IoError& e) {
        g_error = e.what();
        return PFLOC_ERR_IO;
    } catch (const pfloc::DegeneracyError& e) {
        g_error = e.what();
        return PFLOC_ERR_DEGENERATE;
    } catch (const std::bad_alloc&) {
        g_error = "out of memory";
        return PFLOC_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_error = e.what();
        return PFLOC_ERR_INTERNAL;
    } catch (...) {
        g_error = "unknown error";
        return PFLOC_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw pfloc::UsageError(std::string(what) + " must not be null");
}

void copy_out(const std::string& s, char* buffer, std::size_t capacity, std::size_t* needed) {
    if (needed != nullptr) *needed = s.size() + 1;
    if (buffer == nullptr || capacity == 0) return;
    std::size_t n = std::min(s.size(), capacity - 1);
    std::memcpy(buffer, s.data(), n);
    buffer[n] = '\0';
}

}  // namespace

extern "C" {

const char* pfloc_last_error(void) { return g_error.c_str(); }
const char* pfloc_last_warning(void) { return g_warning.c_str(); }
const char* pfloc_version(void) { return "1.0.0"; }

const char* pfloc_status_name(pfloc_status status) {
    switch (status) {
        case PFLOC_OK: return "ok";
        case PFLOC_ERR_DOMAIN: return "domain error";
        case PFLOC_ERR_PARSE: return "parse error";
        case PFLOC_ERR_IO: return "i/o error";
        case PFLOC_ERR_DEGENERATE: return "filter degeneracy";
        case PFLOC_ERR_USAGE: return "usage error";
        case PFLOC_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

pfloc_status pfloc_config_default(size_t path_count, pfloc_config** out) {
    return guarded([&] {
        require(out, "out");
        if (path_count != 2 && path_count != 4) throw pfloc::UsageError("path count must be 2 or 4");
        *out = new pfloc_config{pfloc::default_run_config(path_count)};
    });
}

pfloc_status pfloc_config_load(const char* path, pfloc_config** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new pfloc_config{pfloc::load_run_config(path)};
    });
}

pfloc_status pfloc_config_parse(const char* json_text, const char* base_dir, pfloc_config** out) {
    return guarded([&] {
        require(json_text, "json_text");
        require(out, "out");
        *out = new pfloc_config{
            pfloc::parse_run_config(json_text, "config", base_dir != nullptr ? base_dir : std::filesystem::path{})};
    });
}

void pfloc_config_free(pfloc_config* cfg) { delete cfg; }

pfloc_status pfloc_config_set_seed(pfloc_config* cfg, uint64_t seed) {
    return guarded([&] {
        require(cfg, "cfg");
        cfg->cfg.seed = seed;
    });
}

pfloc_status pfloc_config_set_threads(pfloc_config* cfg, unsigned threads) {
    return guarded([&] {
        require(cfg, "cfg");
        if (threads == 0) throw pfloc::UsageError("threads must be at least 1");
        cfg->cfg.threads = threads;
    });
}

pfloc_status pfloc_config_set_output_dir(pfloc_config* cfg, const char* dir) {
    return guarded([&] {
        require(cfg, "cfg");
        require(dir, "dir");
        cfg->cfg.output_dir = dir;
    });
}

pfloc_status pfloc_config_set_environment(pfloc_config* cfg, const char* path) {
    return guarded([&] {
        require(cfg, "cfg");
        require(path, "path");
        cfg->cfg.environment = path;
    });
}

pfloc_status pfloc_config_set_grid_size(pfloc_config* cfg, size_t n_range, size_t n_depth) {
    return guarded([&] {
        require(cfg, "cfg");
        if (n_range < 2 || n_depth < 2) throw pfloc::UsageError("grid needs at least 2 points per axis");
        cfg->cfg.grid_spec.n_range = n_range;
        cfg->cfg.grid_spec.n_depth = n_depth;
    });
}

pfloc_status pfloc_config_get_grid_size(const pfloc_config* cfg, size_t* n_range, size_t* n_depth) {
    return guarded([&] {
        require(cfg, "cfg");
        if (n_range != nullptr) *n_range = cfg->cfg.grid_spec.n_range;
        if (n_depth != nullptr) *n_depth = cfg->cfg.grid_spec.n_depth;
    });
}

pfloc_status pfloc_config_set_particles(pfloc_config* cfg, size_t particles) {
    return guarded([&] {
        require(cfg, "cfg");
        if (particles == 0) throw pfloc::UsageError("particle count must be at least 1");
        cfg->cfg.tracker.particles = particles;
    });
}

pfloc_status pfloc_config_file(const pfloc_config* cfg, const char* artifact, char* buffer, size_t capacity,
                               size_t* needed) {
    return guarded([&] {
        require(cfg, "cfg");
        require(artifact, "artifact");
        const auto& c = cfg->cfg;
        std::string name = artifact;
        std::filesystem::path p;
        if (name == "grid")
            p = c.grid;
        else if (name == "observations")
            p = c.observations;
        else if (name == "truth")
            p = c.truth;
        else if (name == "estimates")
            p = c.estimates;
        else if (name == "report")
            p = c.report;
        else
            throw pfloc::UsageError("unknown artifact '" + name + "'");
        copy_out(c.output_path(p).string(), buffer, capacity, needed);
    });
}

pfloc_status pfloc_config_to_json(const pfloc_config* cfg, char* buffer, size_t capacity, size_t* needed) {
    return guarded([&] {
        require(cfg, "cfg");
        copy_out(pfloc::run_config_to_json(cfg->cfg), buffer, capacity, needed);
    });
}

pfloc_status pfloc_build_grid(const pfloc_config* cfg, pfloc_grid_stats* stats) {
    return guarded([&] {
        require(cfg, "cfg");
        g_warning.clear();
        auto s = pfloc::run_build_grid(cfg->cfg);
        if (stats != nullptr) {
            *stats = {};
            stats->n_range = s.n_range;
            stats->n_depth = s.n_depth;
            stats->path_count = std::min<std::size_t>(s.kinds.size(), 4);
            for (std::size_t k = 0; k < stats->path_count; ++k) {
                stats->path_index[k] = pfloc::canonical_index(s.kinds[k]);
                stats->impossible_fraction[k] = s.impossible_fraction[k];
            }
            stats->seconds = s.seconds;
        }
    });
}

pfloc_status pfloc_simulate(const pfloc_config* cfg, pfloc_sim_summary* summary) {
    return guarded([&] {
        require(cfg, "cfg");
        g_warning.clear();
        auto s = pfloc::run_simulate(cfg->cfg);
        g_warning = s.warning;
        if (summary != nullptr) *summary = {s.epochs, s.detections, s.warning.empty() ? 0 : 1};
    });
}

pfloc_status pfloc_track(const pfloc_config* cfg, pfloc_track_summary* summary) {
    return guarded([&] {
        require(cfg, "cfg");
        g_warning.clear();
        auto s = pfloc::run_track(cfg->cfg);
        if (summary != nullptr)
            *summary = {s.epochs, s.final_estimate.range, s.final_estimate.depth, s.final_estimate.range_speed,
                        s.min_ess, s.seconds};
    });
}

pfloc_status pfloc_evaluate(const char* const* estimates, const char* const* labels, size_t count, const char* truth,
                            const char* report, pfloc_eval_result* results) {
    return guarded([&] {
        require(estimates, "estimates");
        require(truth, "truth");
        require(report, "report");
        std::vector<pfloc::EvaluateInput> runs;
        for (std::size_t i = 0; i < count; ++i) {
            require(estimates[i], "estimates entry");
            runs.push_back({labels != nullptr && labels[i] != nullptr ? labels[i] : "", estimates[i]});
        }
        auto out = pfloc::run_evaluate(runs, truth, report);
        if (results != nullptr)
            for (std::size_t i = 0; i < out.size(); ++i)
                results[i] = {out[i].rmse_range, out[i].rmse_depth, out[i].epochs.size()};
    });
}

pfloc_status pfloc_grid_load(const char* path, pfloc_grid** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new pfloc_grid{pfloc::load_grid(path)};
    });
}

void pfloc_grid_free(pfloc_grid* grid) { delete grid; }

pfloc_status pfloc_grid_dims(const pfloc_grid* grid, size_t* n_range, size_t* n_depth, size_t* path_count) {
    return guarded([&] {
        require(grid, "grid");
        if (n_range != nullptr) *n_range = grid->grid.n_range();
        if (n_depth != nullptr) *n_depth = grid->grid.n_depth();
        if (path_count != nullptr) *path_count = grid->grid.path_count();
    });
}

pfloc_status pfloc_grid_interpolate(const pfloc_grid* grid, double range_m, double depth_m, size_t k, double* doa_deg,
                                    int* possible) {
    return guarded([&] {
        require(grid, "grid");
        require(doa_deg, "doa_deg");
        require(possible, "possible");
        if (k >= grid->grid.path_count()) throw pfloc::DomainError("path layer index out of range");
        auto v = pfloc::interpolate_doa(grid->grid, {range_m, depth_m}, k);
        *possible = v ? 1 : 0;
        if (v) *doa_deg = *v;
    });
}

pfloc_status pfloc_log_marginal_likelihood(const double* z, size_t m, const double* angles, const double* sigma_deg,
                                           size_t k, double detect_prob, double mu_fa, double* out) {
    return guarded([&] {
        require(out, "out");
        if (m > 0) require(z, "z");
        require(angles, "angles");
        require(sigma_deg, "sigma_deg");
        pfloc::ModelParams params{std::vector<double>(sigma_deg, sigma_deg + k), detect_prob, mu_fa};
        params.validate();
        auto obs = pfloc::ObservationSet::from_unsorted(std::vector<double>(z, z + m));
        auto pred = pfloc::make_prediction(std::span<const double>(angles, k), detect_prob);
        *out = pfloc::log_marginal_likelihood(obs, pred, params);
    });
}

}  // extern "C"
