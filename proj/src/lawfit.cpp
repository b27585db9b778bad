#include "rlscale/lawfit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rlscale/error.hpp"

namespace rlscale {

FitResult fit_loglinear(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw DataError("log-linear fit needs at least 2 points");
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0)) {
            throw DataError("log-linear fit requires strictly positive coordinates");
        }
    }

    const auto n = static_cast<double>(points.size());
    std::vector<double> lx(points.size()), ly(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        lx[i] = std::log(points[i].first);
        ly[i] = std::log(points[i].second);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw DataError("degenerate fit: all x coordinates equal");

    const double slope = sxy / sxx;

    FitResult fit;
    fit.k = -slope;                 // ln y = -k ln x + E
    fit.E = my - slope * mx;
    fit.n_points = static_cast<int>(points.size());

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double pred = slope * lx[i] + fit.E;
        ss_res += (ly[i] - pred) * (ly[i] - pred);
        ss_tot += (ly[i] - my) * (ly[i] - my);
    }
    // A horizontal exact fit has 0/0 here; residual-free means R^2 = 1.
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

std::vector<FitRow> fit_per_model(const RunSet& runset, XAxis x, YTarget y,
                                  const FitOptions& options) {
    if (options.burn_in_fraction < 0.0 || options.burn_in_fraction >= 1.0) {
        throw UsageError("burn-in fraction must be in [0,1)");
    }

    std::vector<FitRow> rows;
    for (const auto& [key, run_indices] : runset.groups()) {
        FitRow row;
        row.model_n = key.first;
        row.variant = key.second;

        std::vector<std::pair<double, double>> pooled;
        int excluded = 0;
        for (std::size_t idx : run_indices) {
            auto series = extract_series(runset.runs[idx], x, y);
            // Burn-in drops the earliest eval points per run, before pooling.
            const auto burn =
                static_cast<std::size_t>(options.burn_in_fraction *
                                         static_cast<double>(series.size()));
            for (std::size_t i = burn; i < series.size(); ++i) {
                auto [xv, yv] = series[i];
                if (options.loss_floor && y == YTarget::loss) {
                    yv = std::max(yv, *options.loss_floor);
                }
                if (yv <= 0.0) {
                    ++excluded; // ln of a zero loss is undefined; count and skip
                    continue;
                }
                pooled.emplace_back(xv, yv);
            }
        }

        try {
            FitResult fit = fit_loglinear(pooled);
            fit.target_x = x;
            fit.target_y = y;
            fit.model_n = row.model_n;
            fit.variant = row.variant;
            fit.excluded_points = excluded;
            fit.burn_in_fraction = options.burn_in_fraction;
            row.fit = fit;
        } catch (const DataError& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    // groups() iterates a std::map, so rows are already sorted by
    // (model_n, variant); keep the table layout explicit anyway.
    std::stable_sort(rows.begin(), rows.end(), [](const FitRow& a, const FitRow& b) {
        if (a.model_n != b.model_n) return a.model_n < b.model_n;
        return a.variant < b.variant;
    });
    return rows;
}

ConsistencyReport check_consistency(const FitResult& fit_c, const FitResult& fit_d,
                                    std::int64_t n,
                                    const std::vector<std::pair<double, double>>& phi_points) {
    if (fit_c.target_x != XAxis::flops || fit_d.target_x != XAxis::unique_data) {
        throw UsageError("check_consistency expects a compute-law fit and a data-law fit");
    }
    if (fit_c.model_n != fit_d.model_n || fit_c.variant != fit_d.variant) {
        throw UsageError("consistency check requires fits from the same group");
    }
    if (phi_points.empty()) throw DataError("no eval points to estimate phi");
    if (n < 1) throw UsageError("model size must be >= 1");

    ConsistencyReport report;
    double phi_sum = 0.0;
    double phi_min = std::numeric_limits<double>::infinity();
    double phi_max = -std::numeric_limits<double>::infinity();
    for (const auto& [c, d] : phi_points) {
        if (!(c > 0.0) || !(d > 0.0)) throw DataError("phi estimation needs positive (C, D)");
        const double phi = c / (static_cast<double>(n) * d);
        phi_sum += phi;
        phi_min = std::min(phi_min, phi);
        phi_max = std::max(phi_max, phi);
    }
    report.phi = phi_sum / static_cast<double>(phi_points.size());
    report.phi_dispersion = report.phi > 0.0 ? (phi_max - phi_min) / report.phi : 0.0;
    report.exact_linkage = report.phi_dispersion < 1e-9;

    report.k_gap = std::abs(fit_c.k - fit_d.k);
    // E_C = E_D + k ln(N phi), checked with k = k_D.
    report.intercept_residual =
        std::abs(fit_c.E - fit_d.E - fit_d.k * std::log(static_cast<double>(n) * report.phi));
    return report;
}

namespace {

std::string format_cell(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

} // namespace

std::string render_table(const std::vector<FitResult>& rows) {
    std::ostringstream out;
    out << "model_n,variant,k,E,r2,n_points\n";
    for (const auto& r : rows) {
        out << r.model_n << ',' << r.variant << ',' << format_cell(r.k) << ','
            << format_cell(r.E) << ',' << format_cell(r.r2) << ',' << r.n_points << "\n";
    }
    return out.str();
}

void emit_table(const std::vector<FitResult>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << render_table(rows);
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<FitResult> parse_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty table");
    if (line != "model_n,variant,k,E,r2,n_points") {
        throw DataError(path.string() + ": unexpected table header");
    }
    std::vector<FitResult> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        FitResult r;
        try {
            std::getline(ls, cell, ',');
            r.model_n = std::stoll(cell);
            std::getline(ls, r.variant, ',');
            std::getline(ls, cell, ',');
            r.k = std::stod(cell);
            std::getline(ls, cell, ',');
            r.E = std::stod(cell);
            std::getline(ls, cell, ',');
            r.r2 = std::stod(cell);
            std::getline(ls, cell, ',');
            r.n_points = std::stoi(cell);
        } catch (const std::exception&) {
            throw DataError(path.string() + ": malformed table row: " + line);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_plot_data(const std::vector<std::pair<double, double>>& points, const FitResult& fit,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "x,y,fitted_y\n";
    for (const auto& [x, y] : points) {
        const double fitted = std::exp(-fit.k * std::log(x) + fit.E);
        out << x << ',' << y << ',' << fitted << "\n";
    }
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace rlscale
