// C ABI over the rlscale core: opaque handles, thread-local error strings,
// integer statuses. Exceptions never cross this boundary.

#include "rlscale.h"

#include <cstring>
#include <fstream>
#include <string>

#include "rlscale/config.hpp"
#include "rlscale/error.hpp"
#include "rlscale/experiment.hpp"

struct rls_config {
    rlscale::ExperimentConfig config;
};

namespace {

thread_local std::string g_last_error;

rls_status status_from_kind(rlscale::ErrorKind kind) {
    switch (kind) {
        case rlscale::ErrorKind::usage: return RLS_USAGE_ERROR;
        case rlscale::ErrorKind::data: return RLS_DATA_ERROR;
        case rlscale::ErrorKind::numeric: return RLS_NUMERIC_ERROR;
        default: return RLS_IO_ERROR;
    }
}

template <typename Fn>
rls_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const rlscale::Error& e) {
        g_last_error = e.what();
        return status_from_kind(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RLS_DATA_ERROR;
    } catch (...) {
        g_last_error = "unknown error";
        return RLS_DATA_ERROR;
    }
}

rls_status require(bool condition, const char* message) {
    if (!condition) {
        g_last_error = message;
        return RLS_USAGE_ERROR;
    }
    return RLS_OK;
}

} // namespace

extern "C" {

const char* rls_version(void) { return rlscale::kCodeVersion; }

const char* rls_last_error(void) { return g_last_error.c_str(); }

rls_status rls_config_load(const char* path, rls_config** out_config) {
    if (auto s = require(path && out_config, "rls_config_load: null argument")) return s;
    return guarded([&] {
        auto handle = new rls_config{rlscale::load_config(path)};
        *out_config = handle;
        return RLS_OK;
    });
}

rls_status rls_config_write_example(const char* path) {
    if (auto s = require(path != nullptr, "rls_config_write_example: null path")) return s;
    return guarded([&] {
        std::ofstream out(path);
        if (!out) throw rlscale::IoError(std::string("cannot open ") + path + " for writing");
        out << rlscale::example_config_text();
        if (!out) throw rlscale::IoError(std::string("failed writing ") + path);
        return RLS_OK;
    });
}

rls_status rls_config_set(rls_config* config, const char* dotted_key, const char* value) {
    if (auto s = require(config && dotted_key && value, "rls_config_set: null argument")) return s;
    return guarded([&] {
        rlscale::apply_override(config->config, dotted_key, value);
        return RLS_OK;
    });
}

void rls_config_free(rls_config* config) { delete config; }

rls_status rls_run(const rls_config* config, const char* out_dir, char* run_id,
                   size_t run_id_capacity) {
    if (auto s = require(config && out_dir, "rls_run: null argument")) return s;
    return guarded([&] {
        rlscale::RunResult result = rlscale::run_experiment(config->config, out_dir);
        if (run_id && run_id_capacity > 0) {
            std::strncpy(run_id, result.run_id.c_str(), run_id_capacity - 1);
            run_id[run_id_capacity - 1] = '\0';
        }
        if (result.numeric_failure) {
            g_last_error = result.error;
            return RLS_NUMERIC_ERROR;
        }
        return RLS_OK;
    });
}

rls_status rls_sweep(const rls_config* config, const char* axis, const double* values,
                     size_t n_values, int replicates, const char* out_dir, int* runs_ok,
                     int* runs_failed) {
    if (auto s = require(config && axis && out_dir, "rls_sweep: null argument")) return s;
    if (auto s = require(values != nullptr && n_values > 0, "rls_sweep: no sweep values")) return s;
    return guarded([&] {
        rlscale::SweepResult sweep =
            rlscale::run_sweep(config->config, rlscale::sweep_axis_from_name(axis),
                               std::vector<double>(values, values + n_values), replicates, out_dir);
        if (runs_ok) *runs_ok = static_cast<int>(sweep.runs.size()) - sweep.failures;
        if (runs_failed) *runs_failed = sweep.failures;
        return RLS_OK;
    });
}

rls_status rls_fit(const char* runs_dir, const char* x_axis, const char* y_target,
                   double burn_in_fraction, const char* out_dir, int* n_groups) {
    if (auto s = require(runs_dir && x_axis && y_target, "rls_fit: null argument")) return s;
    return guarded([&] {
        rlscale::FitOptions options;
        options.burn_in_fraction = burn_in_fraction;
        const rlscale::FitOutput output =
            rlscale::fit_runs(runs_dir, rlscale::x_axis_from_name(x_axis),
                              rlscale::y_target_from_name(y_target), options,
                              out_dir ? out_dir : runs_dir);
        if (n_groups) *n_groups = static_cast<int>(output.rows.size());
        return RLS_OK;
    });
}

rls_status rls_check(const char* runs_dir, double burn_in_fraction, const char* out_dir,
                     int* n_groups) {
    if (auto s = require(runs_dir != nullptr, "rls_check: null runs_dir")) return s;
    return guarded([&] {
        rlscale::FitOptions options;
        options.burn_in_fraction = burn_in_fraction;
        const rlscale::CheckOutput output =
            rlscale::check_runs(runs_dir, options, out_dir ? out_dir : runs_dir);
        if (n_groups) *n_groups = static_cast<int>(output.rows.size());
        return RLS_OK;
    });
}

rls_status rls_eval(const char* checkpoint_path, const char* dataset_path, double temperature,
                    uint64_t seed, double* out_loss, int64_t* out_correct, int64_t* out_total) {
    if (auto s = require(checkpoint_path && dataset_path, "rls_eval: null argument")) return s;
    return guarded([&] {
        rlscale::EvalResult result =
            rlscale::eval_checkpoint(checkpoint_path, dataset_path, temperature, seed);
        if (out_loss) *out_loss = result.loss;
        if (out_correct) *out_correct = result.correct;
        if (out_total) *out_total = result.total;
        return RLS_OK;
    });
}

} // extern "C"
