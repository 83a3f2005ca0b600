#ifndef PFLOC_PFLOC_H
#define PFLOC_PFLOC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(PFLOC_BUILDING)
#define PFLOC_API __declspec(dllexport)
#else
#define PFLOC_API __declspec(dllimport)
#endif
#else
#define PFLOC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pfloc_status {
    PFLOC_OK = 0,
    PFLOC_ERR_DOMAIN = 1,     /* argument outside an operation's domain */
    PFLOC_ERR_PARSE = 2,      /* malformed config, environment or data file */
    PFLOC_ERR_IO = 3,         /* file missing or unreadable/unwritable */
    PFLOC_ERR_DEGENERATE = 4, /* particle weights vanished */
    PFLOC_ERR_USAGE = 5,      /* invalid argument combination */
    PFLOC_ERR_INTERNAL = 6
} pfloc_status;

/* Message for the most recent failure on the calling thread; "" after success. */
PFLOC_API const char* pfloc_last_error(void);
PFLOC_API const char* pfloc_status_name(pfloc_status status);
PFLOC_API const char* pfloc_version(void);

/* ---- run configuration ---- */

typedef struct pfloc_config pfloc_config;

/* Defaults for path_count 2 or 4. */
PFLOC_API pfloc_status pfloc_config_default(size_t path_count, pfloc_config** out);
PFLOC_API pfloc_status pfloc_config_load(const char* path, pfloc_config** out);
PFLOC_API pfloc_status pfloc_config_parse(const char* json_text, const char* base_dir, pfloc_config** out);
PFLOC_API void pfloc_config_free(pfloc_config* cfg);

PFLOC_API pfloc_status pfloc_config_set_seed(pfloc_config* cfg, uint64_t seed);
PFLOC_API pfloc_status pfloc_config_set_threads(pfloc_config* cfg, unsigned threads);
PFLOC_API pfloc_status pfloc_config_set_output_dir(pfloc_config* cfg, const char* dir);
PFLOC_API pfloc_status pfloc_config_set_environment(pfloc_config* cfg, const char* path);
PFLOC_API pfloc_status pfloc_config_set_grid_size(pfloc_config* cfg, size_t n_range, size_t n_depth);
PFLOC_API pfloc_status pfloc_config_get_grid_size(const pfloc_config* cfg, size_t* n_range, size_t* n_depth);
PFLOC_API pfloc_status pfloc_config_set_particles(pfloc_config* cfg, size_t particles);

/* Resolved path of an output artifact: "grid", "observations", "truth", "estimates" or "report".
   Writes at most `capacity` bytes including the terminator; `needed` receives the full length + 1. */
PFLOC_API pfloc_status pfloc_config_file(const pfloc_config* cfg, const char* artifact, char* buffer, size_t capacity,
                                         size_t* needed);

/* The resolved configuration as JSON text, same buffer convention. */
PFLOC_API pfloc_status pfloc_config_to_json(const pfloc_config* cfg, char* buffer, size_t capacity, size_t* needed);

/* ---- pipeline commands ---- */

typedef struct pfloc_grid_stats {
    size_t n_range;
    size_t n_depth;
    size_t path_count;
    int path_index[4];                /* canonical indices: 1 SB, 2 DP, 3 BB, 4 SBB */
    double impossible_fraction[4];
    double seconds;
} pfloc_grid_stats;

typedef struct pfloc_sim_summary {
    size_t epochs;
    size_t detections;
    int truncated; /* nonzero when the truth left the roi; see pfloc_last_warning */
} pfloc_sim_summary;

typedef struct pfloc_track_summary {
    size_t epochs;
    double final_range_m;
    double final_depth_m;
    double final_speed_mps;
    double min_ess;
    double seconds;
} pfloc_track_summary;

PFLOC_API pfloc_status pfloc_build_grid(const pfloc_config* cfg, pfloc_grid_stats* stats);
PFLOC_API pfloc_status pfloc_simulate(const pfloc_config* cfg, pfloc_sim_summary* summary);
PFLOC_API pfloc_status pfloc_track(const pfloc_config* cfg, pfloc_track_summary* summary);

/* Non-fatal warning from the last successful command on this thread, or "". */
PFLOC_API const char* pfloc_last_warning(void);

typedef struct pfloc_eval_result {
    double rmse_range_m;
    double rmse_depth_m;
    size_t epochs;
} pfloc_eval_result;

/* Evaluates `count` estimates files against one truth file and writes a JSON report.
   `labels` may be NULL; `results` (may be NULL) receives `count` entries. */
PFLOC_API pfloc_status pfloc_evaluate(const char* const* estimates, const char* const* labels, size_t count,
                                      const char* truth, const char* report, pfloc_eval_result* results);

/* ---- DOA grid ---- */

typedef struct pfloc_grid pfloc_grid;

PFLOC_API pfloc_status pfloc_grid_load(const char* path, pfloc_grid** out);
PFLOC_API void pfloc_grid_free(pfloc_grid* grid);
PFLOC_API pfloc_status pfloc_grid_dims(const pfloc_grid* grid, size_t* n_range, size_t* n_depth, size_t* path_count);

/* Bilinear DOA of layer k at (range, depth). `possible` is set to 0 for an
   impossible path, in which case `doa_deg` is left untouched. */
PFLOC_API pfloc_status pfloc_grid_interpolate(const pfloc_grid* grid, double range_m, double depth_m, size_t k,
                                              double* doa_deg, int* possible);

/* ---- association likelihood ---- */

/* Log of the association-marginalized likelihood (state-dependent part) of
   observations z[0..m) (any order) given predicted angles angles[0..k)
   (-INFINITY marks an impossible path), per-path sigma, detection probability
   and mean false-alarm count. */
PFLOC_API pfloc_status pfloc_log_marginal_likelihood(const double* z, size_t m, const double* angles,
                                                     const double* sigma_deg, size_t k, double detect_prob,
                                                     double mu_fa, double* out);

#ifdef __cplusplus
}
#endif

#endif
