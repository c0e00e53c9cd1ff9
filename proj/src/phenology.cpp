#include "phenology.hpp"

#include "csv.hpp"
#include "errors.hpp"

#include <algorithm>
#include <cmath>

namespace phenoflow {

namespace {

// Golden-section search for the maximum of f on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

double estimate_sos(const SeasonFit& fit) {
    if (fit.params.c < kCMin) {
        fail(Errc::degenerate_fit,
             "estimate_sos: amplitude " + std::to_string(fit.params.c) + " below " +
                 std::to_string(kCMin));
    }
    const auto& params = fit.params;
    auto curvature = [&params](double x) {
        return spring_branch_second_derivative(params, x);
    };

    constexpr double step = 0.01;
    double best_x = 0.0;
    double best_val = curvature(0.0);
    const long n_steps = std::lround(std::ceil(params.p / step));
    for (long i = 1; i <= n_steps; ++i) {
        double x = std::min(params.p, static_cast<double>(i) * step);
        double val = curvature(x);
        if (val > best_val) {
            best_val = val;
            best_x = x;
        }
    }

    double lo = std::max(0.0, best_x - step);
    double hi = std::min(params.p, best_x + step);
    return golden_max(curvature, lo, hi, 1e-6);
}

double estimate_pos(const SeasonFit& fit) {
    return fit.params.p;
}

double estimate_peak(const SeasonFit& fit) {
    return eval_double_logistic(fit.params, fit.params.p);
}

QcPartition apply_qc(const std::vector<PlotYearFit>& fits, double threshold) {
    QcPartition part;
    for (const auto& f : fits) {
        if (f.fit.converged && f.fit.r2 >= threshold) {
            part.kept.push_back(f);
        } else {
            part.excluded.push_back(f);
        }
    }
    part.exclusion_rate =
        fits.empty() ? 0.0
                     : static_cast<double>(part.excluded.size()) / static_cast<double>(fits.size());
    return part;
}

PhenologyMetrics extract_phenology(const std::string& plot_id, int year, const SeasonFit& fit,
                                   double qc_threshold) {
    PhenologyMetrics m;
    m.plot_id = plot_id;
    m.year = year;
    m.qc_pass = fit.converged && fit.r2 >= qc_threshold;
    if (m.qc_pass) {
        m.sos = estimate_sos(fit);
        m.pos = estimate_pos(fit);
        m.peak = estimate_peak(fit);
    }
    return m;
}

namespace {
const std::vector<std::string> kPhenologyHeader = {"plot_id", "year", "sos",
                                                   "pos",     "peak", "qc_pass"};
}

void write_phenology_csv(const std::string& path, const std::vector<PhenologyMetrics>& rows) {
    CsvWriter out(path);
    out.write_row(kPhenologyHeader);
    for (const auto& m : rows) {
        out.write_row({m.plot_id, std::to_string(m.year), format_double(m.sos),
                       format_double(m.pos), format_double(m.peak), m.qc_pass ? "1" : "0"});
    }
}

std::vector<PhenologyMetrics> read_phenology_csv(const std::string& path) {
    CsvFile file = read_csv(path);
    require_header(file, kPhenologyHeader, path);
    std::vector<PhenologyMetrics> rows;
    rows.reserve(file.rows.size());
    for (size_t r = 0; r < file.rows.size(); ++r) {
        const auto& row = file.rows[r];
        auto bad = [&](const std::string& what) {
            fail(Errc::malformed_row,
                 path + " line " + std::to_string(file.line_numbers[r]) + ": " + what);
        };
        PhenologyMetrics m;
        m.plot_id = row[0];
        auto year = parse_int(row[1]);
        if (!year) bad("bad year '" + row[1] + "'");
        m.year = static_cast<int>(*year);
        auto sos = parse_double(row[2]);
        auto pos = parse_double(row[3]);
        auto peak = parse_double(row[4]);
        auto qc = parse_int(row[5]);
        if (!sos || !pos || !peak || !qc) bad("bad numeric cell");
        m.sos = *sos;
        m.pos = *pos;
        m.peak = *peak;
        m.qc_pass = *qc != 0;
        rows.push_back(std::move(m));
    }
    return rows;
}

} // namespace phenoflow
