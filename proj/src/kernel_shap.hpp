#pragma once

#include "mlp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace phenoflow {

/// Model evaluated on a batch of raw feature rows.
using BatchPredictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

struct ShapExplanation {
    std::string plot_id;
    int year = 0;
    double base_value = 0.0; // mean model output over the background
    Eigen::VectorXd phi;
    double reconstructed = 0.0; // base_value + sum(phi)
    double prediction = 0.0;    // model output at x
};

struct AggregatedShap {
    std::string plot_id;
    int year = 0;
    double shap_air = 0.0;
    double shap_precip = 0.0;
    double shap_irr = 0.0;
    double shap_soil = 0.0;
};

struct AShapTotals {
    double air = 0.0;
    double precip = 0.0;
    double irr = 0.0;
    double soil = 0.0;
};

struct ShapOptions {
    int n_coalitions = 2048;
    std::uint64_t seed = 0;
};

/// Kernel weight (M - 1) / (C(M, s) * s * (M - s)). The empty and full
/// coalitions are exact constraints, not weighted rows; asking for their
/// weight throws InvalidCoalitionSize.
double shapley_kernel_weight(int m, int s);

/// Kernel SHAP attribution of f at x against a background (one row per
/// reference sample). Enumerates every coalition when 2^M - 2 fits the
/// budget, otherwise samples coalition pairs from the kernel's size
/// distribution. The efficiency constraint base + sum(phi) = f(x) is built
/// into the regression. Throws DegenerateSystem when the sampled design is
/// rank-deficient even after one retry with a doubled budget.
ShapExplanation kernel_shap(const BatchPredictor& f, const Eigen::VectorXd& x,
                            const Eigen::MatrixXd& background, const ShapOptions& options);

/// The 26 weekly phis per meteorological variable collapse to one value
/// each; soil passes through.
AggregatedShap aggregate_weekly(const ShapExplanation& expl);

/// Per-variable sum of absolute per-sample aggregates.
AShapTotals a_shap(const std::vector<AggregatedShap>& rows);

/// Pearson correlation between soil temperatures and their SHAP values.
double shap_soil_correlation(const std::vector<double>& soil_means,
                             const std::vector<double>& shap_soil);

} // namespace phenoflow
