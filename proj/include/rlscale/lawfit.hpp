#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rlscale/runlog.hpp"

namespace rlscale {

// Log-linear scaling fit, sign convention ln y = -k ln x + E.
struct FitResult {
    double k = 0.0;
    double E = 0.0;
    double r2 = 0.0;
    int n_points = 0;
    XAxis target_x = XAxis::flops;
    YTarget target_y = YTarget::loss;
    std::int64_t model_n = 0;
    std::string variant;
    int excluded_points = 0;       // points dropped for y <= 0
    double burn_in_fraction = 0.0; // per-run fraction of earliest eval points dropped
};

struct FitOptions {
    double burn_in_fraction = 0.0;
    // When set, y is floored at this value instead of excluding y <= 0
    // points. The natural choice is 1/(2*R_max): half a correct answer.
    std::optional<double> loss_floor;
};

// Ordinary least squares of ln y on ln x, natural logs. Throws DataError on
// nonpositive coordinates, fewer than two points, or all-equal x
// (degenerate fit).
FitResult fit_loglinear(const std::vector<std::pair<double, double>>& points);

struct FitRow {
    std::int64_t model_n = 0;
    std::string variant;
    std::optional<FitResult> fit;
    std::string error; // set when this group's fit failed; other rows still emitted
};

// One pooled fit per (model_n, variant) group, rows sorted by model_n
// ascending then variant.
std::vector<FitRow> fit_per_model(const RunSet& runset, XAxis x, YTarget y,
                                  const FitOptions& options = {});

// Machine check of the coefficient-consistency identity: under C = N*D*phi
// with constant phi, the two laws share a slope and the intercepts differ
// by k*ln(N*phi).
struct ConsistencyReport {
    double k_gap = 0.0;             // |k_C - k_D|
    double intercept_residual = 0.0; // |E_C - E_D - k_D * ln(N * phi)|
    double phi = 0.0;                // mean over eval points of C / (N * D)
    double phi_dispersion = 0.0;     // (max - min) / mean of per-point phi
    bool exact_linkage = false;      // phi_dispersion < 1e-9
};

// phi_points are per-eval-point (C, D) pairs pooled over the group's runs.
ConsistencyReport check_consistency(const FitResult& fit_c, const FitResult& fit_d,
                                    std::int64_t n,
                                    const std::vector<std::pair<double, double>>& phi_points);

// Comma-separated table with header model_n,variant,k,E,r2,n_points and
// fixed 4-decimal cells for k, E and r2.
std::string render_table(const std::vector<FitResult>& rows);
void emit_table(const std::vector<FitResult>& rows, const std::filesystem::path& path);
std::vector<FitResult> parse_table(const std::filesystem::path& path);

// Per-group (x, y, fitted_y) triples for external plotting.
void emit_plot_data(const std::vector<std::pair<double, double>>& points,
                    const FitResult& fit, const std::filesystem::path& path);

} // namespace rlscale
