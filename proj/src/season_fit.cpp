#include "season_fit.hpp"

#include "csv.hpp"
#include "errors.hpp"
#include "trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace phenoflow {

std::uint64_t fit_seed(std::uint64_t base, std::string_view plot_id, int year) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](unsigned char b) {
        h ^= b;
        h *= 1099511628211ull;
    };
    for (char ch : plot_id) mix(static_cast<unsigned char>(ch));
    for (int i = 0; i < 4; ++i) {
        mix(static_cast<unsigned char>((static_cast<std::uint32_t>(year) >> (8 * i)) & 0xff));
    }
    return base ^ h;
}

namespace {

struct Candidate {
    SeasonFit fit;
    bool converged = false;
};

std::array<double, kFreeParamCount> initial_guess(const std::vector<NdviSample>& sorted) {
    double lo = sorted.front().ndvi;
    double hi = sorted.front().ndvi;
    double p0 = sorted.front().week;
    for (const auto& s : sorted) {
        lo = std::min(lo, s.ndvi);
        if (s.ndvi > hi) {
            hi = s.ndvi;
            p0 = s.week;
        }
    }
    double c0 = hi - lo;
    double half = lo + 0.5 * c0;
    double a10 = sorted.front().week;
    for (size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].ndvi >= half && sorted[i - 1].ndvi < half) {
            a10 = 0.5 * (sorted[i - 1].week + sorted[i].week);
            break;
        }
    }
    std::array<double, kFreeParamCount> x{};
    x[kA1] = a10;
    x[kB1] = -0.5;
    x[kB2] = -0.5;
    x[kC] = c0;
    x[kD] = lo;
    x[kP] = p0;
    return x;
}

SeasonFit score_fit(const std::vector<NdviSample>& samples, const DoubleLogisticParams& params,
                    double lambda, bool converged) {
    SeasonFit fit;
    fit.params = params;
    fit.n_points = static_cast<int>(samples.size());
    fit.converged = converged;
    fit.deriv_gap = derivative_gap_at_p(params);
    fit.degenerate = params.c < kCMin;

    double mean = 0.0;
    for (const auto& s : samples) mean += s.ndvi;
    mean /= static_cast<double>(samples.size());

    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (const auto& s : samples) {
        double e = eval_double_logistic(params, s.week) - s.ndvi;
        ss_res += e * e;
        double t = s.ndvi - mean;
        ss_tot += t * t;
    }
    fit.mse = ss_res / static_cast<double>(samples.size());
    fit.penalized_mse = fit.mse + lambda * fit.deriv_gap * fit.deriv_gap;
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

} // namespace

SeasonFit fit_season(const std::vector<NdviSample>& samples, const FitOptions& options) {
    if (samples.size() < 7) {
        fail(Errc::too_few_points, "fit_season: need at least 7 samples, got " +
                                       std::to_string(samples.size()));
    }
    std::vector<NdviSample> sorted = samples;
    std::sort(sorted.begin(), sorted.end(),
              [](const NdviSample& a, const NdviSample& b) { return a.week < b.week; });
    double span = sorted.back().week - sorted.front().week;
    if (span < 10.0) {
        fail(Errc::too_few_points, "fit_season: samples span under 10 weeks");
    }

    const auto n = static_cast<double>(sorted.size());
    const double sqrt_n = std::sqrt(n);
    const double sqrt_lambda = std::sqrt(options.lambda);

    TrfProblem problem = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        std::array<double, kFreeParamCount> free_v;
        for (int i = 0; i < kFreeParamCount; ++i) free_v[static_cast<size_t>(i)] = x[i];
        DoubleLogisticParams params = params_from_free(free_v);

        const auto m = static_cast<Eigen::Index>(sorted.size());
        r.resize(m + 1);
        if (jac) jac->resize(m + 1, kFreeParamCount);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto& s = sorted[static_cast<size_t>(i)];
            r[i] = (eval_double_logistic(params, s.week) - s.ndvi) / sqrt_n;
            if (jac) {
                auto g = eval_jacobian(params, s.week);
                for (int j = 0; j < kFreeParamCount; ++j) {
                    (*jac)(i, j) = g[static_cast<size_t>(j)] / sqrt_n;
                }
            }
        }
        r[m] = sqrt_lambda * derivative_gap_at_p(params);
        if (jac) {
            auto g = derivative_gap_gradient(params);
            for (int j = 0; j < kFreeParamCount; ++j) {
                (*jac)(m, j) = sqrt_lambda * g[static_cast<size_t>(j)];
            }
        }
    };

    Eigen::VectorXd lb(kFreeParamCount), ub(kFreeParamCount);
    lb << options.a_lo, options.b_lo, options.b_lo, options.c_lo, options.d_lo, options.a_lo;
    ub << options.a_hi, options.b_hi, options.b_hi, options.c_hi, options.d_hi, options.a_hi;

    TrfOptions trf_opts;
    trf_opts.max_iter = options.max_iter;
    trf_opts.gtol = options.gtol;
    trf_opts.xtol = options.xtol;

    auto base = initial_guess(sorted);
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> week_jitter(0.0, 2.0);
    std::normal_distribution<double> slope_jitter(0.0, 0.3);
    std::normal_distribution<double> level_jitter(0.0, 0.05);

    std::optional<Candidate> best_converged;
    std::optional<Candidate> best_any;
    for (int k = 0; k <= options.restarts; ++k) {
        auto start = base;
        if (k > 0) {
            start[kA1] += week_jitter(rng);
            start[kP] += week_jitter(rng);
            start[kB1] += slope_jitter(rng);
            start[kB2] += slope_jitter(rng);
            start[kC] += level_jitter(rng);
            start[kD] += level_jitter(rng);
        }
        Eigen::VectorXd x0(kFreeParamCount);
        for (int i = 0; i < kFreeParamCount; ++i) {
            x0[i] = std::clamp(start[static_cast<size_t>(i)], lb[i], ub[i]);
        }

        TrfResult res = trf_minimize(problem, x0, lb, ub, trf_opts);
        std::array<double, kFreeParamCount> free_v;
        for (int i = 0; i < kFreeParamCount; ++i) free_v[static_cast<size_t>(i)] = res.x[i];
        Candidate cand;
        cand.converged = res.converged;
        cand.fit = score_fit(sorted, params_from_free(free_v), options.lambda, res.converged);

        auto better = [](const Candidate& a, const std::optional<Candidate>& b) {
            return !b || a.fit.penalized_mse < b->fit.penalized_mse;
        };
        if (cand.converged && better(cand, best_converged)) best_converged = cand;
        if (better(cand, best_any)) best_any = cand;
    }

    if (best_converged) {
        return best_converged->fit;
    }
    SeasonFit fallback = best_any->fit;
    fallback.converged = false;
    fail(Errc::no_convergence,
         "fit_season: no restart converged within " + std::to_string(options.max_iter) +
             " iterations (best penalized MSE " + std::to_string(fallback.penalized_mse) + ")");
}

SeasonFit try_fit_season(const std::vector<NdviSample>& samples, const FitOptions& options) {
    try {
        return fit_season(samples, options);
    } catch (const Error& e) {
        if (e.code() != Errc::too_few_points && e.code() != Errc::no_convergence) {
            throw;
        }
        SeasonFit fit;
        fit.n_points = static_cast<int>(samples.size());
        fit.converged = false;
        return fit;
    }
}

namespace {
const std::vector<std::string> kFitsHeader = {
    "plot_id", "year", "a1", "a2", "b1", "b2", "c", "d",
    "p", "r2", "mse", "n_points", "converged", "deriv_gap"};
}

void write_fits_csv(const std::string& path, const std::vector<PlotYearFit>& fits) {
    CsvWriter out(path);
    out.write_row(kFitsHeader);
    for (const auto& f : fits) {
        const auto& p = f.fit.params;
        out.write_row({f.plot_id, std::to_string(f.year), format_double(p.a1),
                       format_double(p.a2), format_double(p.b1), format_double(p.b2),
                       format_double(p.c), format_double(p.d), format_double(p.p),
                       format_double(f.fit.r2), format_double(f.fit.mse),
                       std::to_string(f.fit.n_points), f.fit.converged ? "1" : "0",
                       format_double(f.fit.deriv_gap)});
    }
}

std::vector<PlotYearFit> read_fits_csv(const std::string& path) {
    CsvFile file = read_csv(path);
    require_header(file, kFitsHeader, path);
    std::vector<PlotYearFit> fits;
    fits.reserve(file.rows.size());
    for (size_t r = 0; r < file.rows.size(); ++r) {
        const auto& row = file.rows[r];
        auto num = [&](size_t col) {
            auto v = parse_double(row[col]);
            if (!v) {
                fail(Errc::malformed_row, path + " line " + std::to_string(file.line_numbers[r]) +
                                              ": bad number '" + row[col] + "'");
            }
            return *v;
        };
        PlotYearFit f;
        f.plot_id = row[0];
        auto year = parse_int(row[1]);
        if (!year) {
            fail(Errc::malformed_row, path + " line " + std::to_string(file.line_numbers[r]) +
                                          ": bad year '" + row[1] + "'");
        }
        f.year = static_cast<int>(*year);
        f.fit.params.a1 = num(2);
        f.fit.params.a2 = num(3);
        f.fit.params.b1 = num(4);
        f.fit.params.b2 = num(5);
        f.fit.params.c = num(6);
        f.fit.params.d = num(7);
        f.fit.params.p = num(8);
        f.fit.r2 = num(9);
        f.fit.mse = num(10);
        f.fit.n_points = static_cast<int>(num(11));
        f.fit.converged = num(12) != 0.0;
        f.fit.deriv_gap = num(13);
        f.fit.degenerate = f.fit.params.c < kCMin;
        fits.push_back(std::move(f));
    }
    return fits;
}

} // namespace phenoflow
