#pragma once

#include "data.hpp"
#include "double_logistic.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace phenoflow {

// Amplitudes below this are treated as degenerate: the season never greens
// up enough to carry phenology landmarks. Distinct from the box bound on c,
// which only keeps the solver away from zero.
inline constexpr double kCMin = 0.05;

struct FitOptions {
    double lambda = 10.0; // weight of the squared derivative-gap penalty
    int restarts = 4;     // jittered restarts beyond the data-driven start
    int max_iter = 500;   // trust-region iterations per restart
    double gtol = 1e-8;
    double xtol = 1e-10;
    std::uint64_t seed = 0; // jitter RNG; callers mix in plot/year via fit_seed

    // Box bounds.
    double a_lo = 0.0, a_hi = 52.0;
    double b_lo = -10.0, b_hi = -0.01;
    double c_lo = 0.01, c_hi = 2.0;
    double d_lo = -1.0, d_hi = 1.0;
};

struct SeasonFit {
    DoubleLogisticParams params;
    double r2 = 0.0;
    double mse = 0.0;           // mean squared residual, no penalty
    double penalized_mse = 0.0; // mse + lambda * deriv_gap^2
    double deriv_gap = 0.0;
    int n_points = 0;
    bool converged = false;
    bool degenerate = false; // params.c < kCMin
};

struct PlotYearFit {
    std::string plot_id;
    int year = 0;
    SeasonFit fit;
};

/// Deterministic per-plot-year seed derived from a base seed.
std::uint64_t fit_seed(std::uint64_t base, std::string_view plot_id, int year);

/// Fits the continuity-constrained double logistic to one plot-year by
/// penalized trust-region least squares. The best converged restart by
/// penalized MSE wins. Throws TooFewPoints (fewer than 7 samples or span
/// under 10 weeks) and NoConvergence (all restarts exhausted max_iter).
SeasonFit fit_season(const std::vector<NdviSample>& samples, const FitOptions& options = {});

/// Like fit_season but maps TooFewPoints / NoConvergence to a result with
/// converged = false, so bulk pipelines can record the failure and move on.
SeasonFit try_fit_season(const std::vector<NdviSample>& samples, const FitOptions& options = {});

void write_fits_csv(const std::string& path, const std::vector<PlotYearFit>& fits);
std::vector<PlotYearFit> read_fits_csv(const std::string& path);

} // namespace phenoflow
