/* rlscale C API: a GRPO post-training laboratory for scaling-law experiments.
 *
 * The shared library wraps the C++ core behind opaque handles and integer
 * status codes so any language with a C FFI can drive runs, sweeps, fits,
 * consistency checks and evaluations. All functions return RLS_OK (0) on
 * success; on failure, rls_last_error() returns a human-readable message
 * for the calling thread.
 */
#ifndef RLSCALE_H
#define RLSCALE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RLS_API __declspec(dllexport)
#else
#define RLS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rls_status {
    RLS_OK = 0,
    RLS_USAGE_ERROR = 1,   /* bad arguments or configuration */
    RLS_DATA_ERROR = 2,    /* malformed or inconsistent data */
    RLS_NUMERIC_ERROR = 3, /* non-finite loss/gradient during training */
    RLS_IO_ERROR = 4       /* filesystem failures */
} rls_status;

/* Opaque experiment configuration. */
typedef struct rls_config rls_config;

RLS_API const char* rls_version(void);

/* Message for the last failing call on this thread. Never NULL. */
RLS_API const char* rls_last_error(void);

/* Loads and validates a config file. On success *out_config owns the handle
 * and must be released with rls_config_free. */
RLS_API rls_status rls_config_load(const char* path, rls_config** out_config);

/* Writes a ready-to-edit example config to `path`. */
RLS_API rls_status rls_config_write_example(const char* path);

/* Applies one "section.key" override, e.g. ("train.seed", "42"). */
RLS_API rls_status rls_config_set(rls_config* config, const char* dotted_key,
                                  const char* value);

RLS_API void rls_config_free(rls_config* config);

/* Executes one training run under out_dir. The run id is copied into
 * run_id (truncated to run_id_capacity-1 chars) when the buffer is given. */
RLS_API rls_status rls_run(const rls_config* config, const char* out_dir,
                           char* run_id, size_t run_id_capacity);

/* Sweeps one axis ("model_size", "data_budget", "reuse_tau", "group_size")
 * over `values`, `replicates` runs per value. Individual run failures do
 * not abort the sweep; counts land in runs_ok / runs_failed. */
RLS_API rls_status rls_sweep(const rls_config* config, const char* axis,
                             const double* values, size_t n_values, int replicates,
                             const char* out_dir, int* runs_ok, int* runs_failed);

/* Fits ln y = -k ln x + E per (model size, variant) group over the runs in
 * runs_dir. x_axis is "flops", "data" or "steps"; y_target is "loss" or
 * "length". Writes fit_<x>_<y>.csv and plot data under out_dir (pass NULL
 * to write next to the runs). n_groups (nullable) receives the number of
 * groups found; an empty directory succeeds with zero groups. */
RLS_API rls_status rls_fit(const char* runs_dir, const char* x_axis, const char* y_target,
                           double burn_in_fraction, const char* out_dir, int* n_groups);

/* Slope/intercept consistency report across the compute and data laws;
 * writes consistency.csv. n_groups as in rls_fit. */
RLS_API rls_status rls_check(const char* runs_dir, double burn_in_fraction,
                             const char* out_dir, int* n_groups);

/* Single-sample evaluation of a policy checkpoint on a task file:
 * loss = 1 - correct/total. Output pointers may be NULL. */
RLS_API rls_status rls_eval(const char* checkpoint_path, const char* dataset_path,
                            double temperature, uint64_t seed, double* out_loss,
                            int64_t* out_correct, int64_t* out_total);

#ifdef __cplusplus
}
#endif

#endif /* RLSCALE_H */
