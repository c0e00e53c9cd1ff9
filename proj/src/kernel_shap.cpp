#include "kernel_shap.hpp"

#include "errors.hpp"
#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace phenoflow {

double shapley_kernel_weight(int m, int s) {
    if (m < 2) {
        fail(Errc::invalid_config, "shapley_kernel_weight: need at least 2 features");
    }
    if (s <= 0 || s >= m) {
        fail(Errc::invalid_coalition_size,
             "shapley_kernel_weight: size " + std::to_string(s) +
                 " is an exact constraint, not a weighted coalition");
    }
    double log_comb = std::lgamma(m + 1.0) - std::lgamma(s + 1.0) - std::lgamma(m - s + 1.0);
    return std::exp(std::log(m - 1.0) - log_comb - std::log(static_cast<double>(s)) -
                    std::log(static_cast<double>(m - s)));
}

namespace {

using Mask = std::vector<char>;

double coalition_value(const BatchPredictor& f, const Eigen::VectorXd& x,
                       const Eigen::MatrixXd& background, const Mask& mask) {
    Eigen::MatrixXd z = background;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i) {
        if (mask[static_cast<size_t>(i)]) {
            z.col(i).setConstant(x[i]);
        }
    }
    return f(z).mean();
}

struct Design {
    std::vector<Mask> masks;
    std::vector<double> weights;
    bool exact = false;
};

Design enumerate_coalitions(int m) {
    Design d;
    d.exact = true;
    auto total = (1u << m) - 2u;
    d.masks.reserve(total);
    d.weights.reserve(total);
    for (unsigned bits = 1; bits <= total; ++bits) {
        Mask mask(static_cast<size_t>(m), 0);
        int size = 0;
        for (int i = 0; i < m; ++i) {
            if (bits & (1u << i)) {
                mask[static_cast<size_t>(i)] = 1;
                ++size;
            }
        }
        d.masks.push_back(std::move(mask));
        d.weights.push_back(shapley_kernel_weight(m, size));
    }
    return d;
}

Design sample_coalitions(int m, int budget, std::mt19937_64& rng) {
    Design d;
    // Paired draws from the kernel's coalition-size distribution,
    // p(s) proportional to (m - 1) / (s (m - s)); uniform regression weights.
    std::vector<double> size_prob(static_cast<size_t>(m - 1));
    for (int s = 1; s < m; ++s) {
        size_prob[static_cast<size_t>(s - 1)] =
            1.0 / (static_cast<double>(s) * static_cast<double>(m - s));
    }
    std::discrete_distribution<int> size_dist(size_prob.begin(), size_prob.end());

    std::vector<int> indices(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) indices[static_cast<size_t>(i)] = i;

    int pairs = budget / 2;
    d.masks.reserve(static_cast<size_t>(pairs) * 2);
    d.weights.assign(static_cast<size_t>(pairs) * 2, 1.0);
    for (int p = 0; p < pairs; ++p) {
        int s = size_dist(rng) + 1;
        for (int i = 0; i < s; ++i) {
            std::uniform_int_distribution<int> pick(i, m - 1);
            std::swap(indices[static_cast<size_t>(i)], indices[static_cast<size_t>(pick(rng))]);
        }
        Mask mask(static_cast<size_t>(m), 0);
        for (int i = 0; i < s; ++i) mask[static_cast<size_t>(indices[static_cast<size_t>(i)])] = 1;
        Mask complement(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            complement[static_cast<size_t>(i)] = mask[static_cast<size_t>(i)] ? 0 : 1;
        }
        d.masks.push_back(std::move(mask));
        d.masks.push_back(std::move(complement));
    }
    return d;
}

// Weighted least squares with the efficiency constraint folded in by
// eliminating the last attribution. Returns false on rank deficiency.
bool solve_constrained(const Design& d, const std::vector<double>& values, double base, double fx,
                       int m, Eigen::VectorXd& phi) {
    const auto n = static_cast<Eigen::Index>(d.masks.size());
    Eigen::MatrixXd a(n, m - 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Mask& mask = d.masks[static_cast<size_t>(j)];
        double z_last = mask[static_cast<size_t>(m - 1)];
        double sw = std::sqrt(d.weights[static_cast<size_t>(j)]);
        y[j] = sw * (values[static_cast<size_t>(j)] - base - z_last * (fx - base));
        for (int i = 0; i + 1 < m; ++i) {
            a(j, i) = sw * (static_cast<double>(mask[static_cast<size_t>(i)]) - z_last);
        }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < m - 1) {
        return false;
    }
    Eigen::VectorXd head = qr.solve(y);
    phi.resize(m);
    phi.head(m - 1) = head;
    phi[m - 1] = (fx - base) - head.sum();
    return true;
}

} // namespace

ShapExplanation kernel_shap(const BatchPredictor& f, const Eigen::VectorXd& x,
                            const Eigen::MatrixXd& background, const ShapOptions& options) {
    const int m = static_cast<int>(x.size());
    if (background.rows() == 0) {
        fail(Errc::invalid_config, "kernel_shap: background is empty");
    }
    if (background.cols() != x.size()) {
        fail(Errc::length_mismatch, "kernel_shap: background width differs from x");
    }

    ShapExplanation expl;
    expl.base_value = f(background).mean();
    expl.prediction = f(x.transpose())[0];

    if (m == 1) {
        expl.phi = Eigen::VectorXd::Constant(1, expl.prediction - expl.base_value);
        expl.reconstructed = expl.base_value + expl.phi.sum();
        return expl;
    }

    bool exact_feasible =
        m <= 30 && ((1u << m) - 2u) <= static_cast<unsigned>(std::max(options.n_coalitions, 0));
    if (!exact_feasible && options.n_coalitions < 2 * m) {
        fail(Errc::invalid_config,
             "kernel_shap: budget " + std::to_string(options.n_coalitions) +
                 " below 2M = " + std::to_string(2 * m));
    }

    std::mt19937_64 rng(options.seed);
    int budget = options.n_coalitions;
    for (int attempt = 0;; ++attempt) {
        Design design = exact_feasible ? enumerate_coalitions(m) : sample_coalitions(m, budget, rng);
        std::vector<double> values(design.masks.size());
        for (size_t j = 0; j < design.masks.size(); ++j) {
            values[j] = coalition_value(f, x, background, design.masks[j]);
        }
        if (solve_constrained(design, values, expl.base_value, expl.prediction, m, expl.phi)) {
            expl.reconstructed = expl.base_value + expl.phi.sum();
            return expl;
        }
        if (exact_feasible || attempt >= 1) {
            fail(Errc::degenerate_system,
                 "kernel_shap: coalition design is rank-deficient (budget " +
                     std::to_string(budget) + ")");
        }
        budget *= 2;
    }
}

AggregatedShap aggregate_weekly(const ShapExplanation& expl) {
    if (expl.phi.size() != kFeatureCount) {
        fail(Errc::length_mismatch, "aggregate_weekly: expected " +
                                        std::to_string(kFeatureCount) + " attributions, got " +
                                        std::to_string(expl.phi.size()));
    }
    AggregatedShap row;
    row.plot_id = expl.plot_id;
    row.year = expl.year;
    row.shap_air = expl.phi.segment(0, kWeeksPerVariable).sum();
    row.shap_precip = expl.phi.segment(kWeeksPerVariable, kWeeksPerVariable).sum();
    row.shap_irr = expl.phi.segment(2 * kWeeksPerVariable, kWeeksPerVariable).sum();
    row.shap_soil = expl.phi[kSoilFeatureIndex];
    return row;
}

AShapTotals a_shap(const std::vector<AggregatedShap>& rows) {
    AShapTotals totals;
    for (const auto& r : rows) {
        totals.air += std::fabs(r.shap_air);
        totals.precip += std::fabs(r.shap_precip);
        totals.irr += std::fabs(r.shap_irr);
        totals.soil += std::fabs(r.shap_soil);
    }
    return totals;
}

double shap_soil_correlation(const std::vector<double>& soil_means,
                             const std::vector<double>& shap_soil) {
    return pearson(soil_means, shap_soil);
}

} // namespace phenoflow
