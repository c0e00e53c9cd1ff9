#pragma once

#include <string>
#include <utility>
#include <vector>

namespace phenoflow {

struct LinRegResult {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    double intercept_se = 0.0;
    double r2 = 0.0;
    double p_slope = 1.0;
    double p_intercept = 1.0;
    int n = 0;
};

struct SlopeConversion {
    double days_per_degc = 0.0;
    double degc_per_week = 0.0;
};

/// Closed-form simple linear regression of y on x with t-test p-values
/// (n - 2 degrees of freedom). Throws LengthMismatch, TooFewPoints (n < 3)
/// and ConstantPredictor.
LinRegResult ols_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Product-moment correlation. Throws LengthMismatch, TooFewPoints (n < 2)
/// and ConstantSeries.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Converts a weeks-per-degree-Celsius slope into days per degree and the
/// reciprocal degrees of warming per week of shift. Throws ZeroSlope.
SlopeConversion weeks_per_degc_to_days(double slope);

/// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with df degrees of freedom.
double students_t_cdf(double t, double df);

/// Two-sided p-value for a t statistic with df degrees of freedom.
double two_sided_t_pvalue(double t, double df);

/// One row per named regression target.
void write_linreg_csv(const std::string& path,
                      const std::vector<std::pair<std::string, LinRegResult>>& rows);

} // namespace phenoflow
