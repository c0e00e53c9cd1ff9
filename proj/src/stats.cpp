#include "stats.hpp"

#include "csv.hpp"
#include "errors.hpp"

#include <cmath>
#include <limits>

namespace phenoflow {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) break;
    }
    return h;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        fail(Errc::out_of_range, "regularized_incomplete_beta: a and b must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        fail(Errc::out_of_range, "regularized_incomplete_beta: x outside [0, 1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double students_t_cdf(double t, double df) {
    if (!(df > 0.0)) {
        fail(Errc::out_of_range, "students_t_cdf: df must be positive");
    }
    if (t == 0.0) return 0.5;
    double x = df / (df + t * t);
    double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

double two_sided_t_pvalue(double t, double df) {
    if (!(df > 0.0)) {
        fail(Errc::out_of_range, "two_sided_t_pvalue: df must be positive");
    }
    if (!std::isfinite(t)) return 0.0;
    double x = df / (df + t * t);
    return regularized_incomplete_beta(0.5 * df, 0.5, x);
}

LinRegResult ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        fail(Errc::length_mismatch, "ols_fit: x and y sizes differ");
    }
    const auto n = x.size();
    if (n < 3) {
        fail(Errc::too_few_points, "ols_fit: need at least 3 points");
    }

    double mean_x = 0.0;
    double mean_y = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = x[i] - mean_x;
        double dy = y[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        fail(Errc::constant_predictor, "ols_fit: predictor is constant");
    }

    LinRegResult res;
    res.n = static_cast<int>(n);
    res.slope = sxy / sxx;
    res.intercept = mean_y - res.slope * mean_x;

    double ss_res = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double e = y[i] - (res.intercept + res.slope * x[i]);
        ss_res += e * e;
    }
    res.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 0.0;

    double df = static_cast<double>(n) - 2.0;
    double sigma2 = ss_res / df;
    res.slope_se = std::sqrt(sigma2 / sxx);
    res.intercept_se =
        std::sqrt(sigma2 * (1.0 / static_cast<double>(n) + mean_x * mean_x / sxx));

    auto pvalue = [df](double estimate, double se) {
        if (se == 0.0) {
            return estimate == 0.0 ? 1.0 : 0.0;
        }
        return two_sided_t_pvalue(estimate / se, df);
    };
    res.p_slope = pvalue(res.slope, res.slope_se);
    res.p_intercept = pvalue(res.intercept, res.intercept_se);
    return res;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        fail(Errc::length_mismatch, "pearson: x and y sizes differ");
    }
    const auto n = x.size();
    if (n < 2) {
        fail(Errc::too_few_points, "pearson: need at least 2 points");
    }
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = x[i] - mean_x;
        double dy = y[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        fail(Errc::constant_series, "pearson: one of the series is constant");
    }
    return sxy / std::sqrt(sxx * syy);
}

SlopeConversion weeks_per_degc_to_days(double slope) {
    if (slope == 0.0) {
        fail(Errc::zero_slope, "weeks_per_degc_to_days: zero slope has no reciprocal");
    }
    SlopeConversion conv;
    conv.days_per_degc = 7.0 * slope;
    conv.degc_per_week = 1.0 / std::fabs(slope);
    return conv;
}

void write_linreg_csv(const std::string& path,
                      const std::vector<std::pair<std::string, LinRegResult>>& rows) {
    CsvWriter out(path);
    out.write_row({"target", "slope", "slope_se", "intercept", "intercept_se", "r2", "p_slope",
                   "p_intercept", "n"});
    for (const auto& [target, r] : rows) {
        out.write_row({target, format_double(r.slope), format_double(r.slope_se),
                       format_double(r.intercept), format_double(r.intercept_se),
                       format_double(r.r2), format_double(r.p_slope),
                       format_double(r.p_intercept), std::to_string(r.n)});
    }
}

} // namespace phenoflow
