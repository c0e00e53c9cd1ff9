#include "errors.hpp"
#include "stats.hpp"
#include "test_util.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace phenoflow;
using testutil::code_of;

namespace {

double rel_err(double got, long double want) {
    long double denom = std::max<long double>(std::fabs(want), 1e-300L);
    return static_cast<double>(std::fabs(got - want) / denom);
}

} // namespace

TEST_CASE("ols recovers an exact line") {
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
        x.push_back(i);
        y.push_back(2.0 * i + 1.0);
    }
    auto r = ols_fit(x, y);
    CHECK(r.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.intercept == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.r2 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.slope_se == doctest::Approx(0.0));
    CHECK(r.p_slope == 0.0); // zero residual, nonzero slope
    CHECK(r.n == 12);
}

TEST_CASE("ols on a flat response reports r2 = 0 and p = 1") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y(5, 3.5);
    auto r = ols_fit(x, y);
    CHECK(r.slope == 0.0);
    CHECK(r.r2 == 0.0);
    CHECK(r.p_slope == 1.0);
}

TEST_CASE("ols input validation") {
    std::vector<double> two = {1.0, 2.0};
    CHECK(code_of([&] { ols_fit(two, two); }) == Errc::too_few_points);
    std::vector<double> x3 = {1, 2, 3}, y2 = {1, 2};
    CHECK(code_of([&] { ols_fit(x3, y2); }) == Errc::length_mismatch);
    std::vector<double> flat_x(4, 2.0), y4 = {1, 2, 3, 4};
    CHECK(code_of([&] { ols_fit(flat_x, y4); }) == Errc::constant_predictor);
}

TEST_CASE("ols matches the extended-precision oracle on random data") {
    std::mt19937_64 rng(991);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> size_dist(5, 60);
    for (int trial = 0; trial < 100; ++trial) {
        int n = size_dist(rng);
        double slope = 3.0 * unit(rng);
        double intercept = 2.0 * unit(rng);
        double noise = 0.1 + std::fabs(unit(rng));
        std::vector<double> x, y;
        for (int i = 0; i < n; ++i) {
            x.push_back(2.0 * unit(rng) + 5.0);
            y.push_back(intercept + slope * x.back() + noise * unit(rng));
        }
        auto got = ols_fit(x, y);
        auto want = oracle::ols_reference(x, y);
        CHECK(rel_err(got.slope, want.slope) < 1e-10);
        CHECK(rel_err(got.slope_se, want.slope_se) < 1e-10);
        CHECK(rel_err(got.intercept, want.intercept) < 1e-10);
        CHECK(rel_err(got.intercept_se, want.intercept_se) < 1e-10);
        CHECK(rel_err(got.r2, want.r2) < 1e-10);
        CHECK(rel_err(got.p_slope, want.p_slope) < 1e-10);
        CHECK(rel_err(got.p_intercept, want.p_intercept) < 1e-10);
    }
}

TEST_CASE("residuals are orthogonal to the predictor") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<double> x, y;
    for (int i = 0; i < 40; ++i) {
        x.push_back(unit(rng) * 4.0);
        y.push_back(0.7 * x.back() - 2.0 + unit(rng));
    }
    auto r = ols_fit(x, y);
    double sum = 0.0, dot = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (r.intercept + r.slope * x[i]);
        sum += e;
        dot += e * x[i];
    }
    CHECK(std::fabs(sum) < 1e-9);
    CHECK(std::fabs(dot) < 1e-9);
}

TEST_CASE("t distribution cdf matches quadrature") {
    for (double df : {3.0, 10.0, 48.0, 100.0}) {
        for (double t : {-30.0, -4.0, -1.0, -0.2, 0.0, 0.5, 2.0, 8.0, 25.0}) {
            double got = students_t_cdf(t, df);
            double want = static_cast<double>(oracle::t_cdf_quadrature(t, df));
            CHECK(std::fabs(got - want) < 1e-8);
        }
    }
    CHECK(students_t_cdf(0.0, 7.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("two-sided p decreases as |t| grows") {
    for (double df : {3.0, 20.0}) {
        double prev = 2.0;
        for (double t = 0.0; t <= 12.0; t += 0.25) {
            double p = two_sided_t_pvalue(t, df);
            CHECK(p <= prev + 1e-15);
            CHECK(p == two_sided_t_pvalue(-t, df)); // symmetry
            prev = p;
        }
    }
}

TEST_CASE("incomplete beta edge cases") {
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    // I_x(1, 1) is the identity
    for (double x : {0.1, 0.5, 0.9}) {
        CHECK(regularized_incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK(code_of([] { regularized_incomplete_beta(0.0, 1.0, 0.5); }) == Errc::out_of_range);
    CHECK(code_of([] { regularized_incomplete_beta(1.0, 1.0, 1.5); }) == Errc::out_of_range);
}

TEST_CASE("pearson correlation properties") {
    std::vector<double> x = {1, 2, 3, 4, 5, 6};
    std::vector<double> y = {2, 4, 6, 8, 10, 12};
    CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-14));
    std::vector<double> neg;
    for (double v : y) neg.push_back(-v + 3.0);
    CHECK(pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-14));

    // invariant under affine maps with positive scale
    std::mt19937_64 rng(5);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<double> a, b, a_scaled;
    for (int i = 0; i < 30; ++i) {
        a.push_back(unit(rng));
        b.push_back(unit(rng) + 0.4 * a.back());
        a_scaled.push_back(3.5 * a.back() - 7.0);
    }
    CHECK(pearson(a, b) == doctest::Approx(pearson(a_scaled, b)).epsilon(1e-12));

    std::vector<double> flat(6, 1.0);
    CHECK(code_of([&] { pearson(x, flat); }) == Errc::constant_series);
    std::vector<double> one = {1.0};
    CHECK(code_of([&] { pearson(one, one); }) == Errc::too_few_points);
}

TEST_CASE("slope unit conversions reproduce the documented arithmetic") {
    // -0.216 weeks per degree C: -1.512 days per degree, one week of
    // advance per 4.63 degrees of warming
    auto conv = weeks_per_degc_to_days(-0.216);
    CHECK(conv.days_per_degc == -1.512);
    CHECK(conv.degc_per_week == doctest::Approx(4.62962962962963).epsilon(1e-14));
    CHECK(std::round(conv.degc_per_week * 100.0) / 100.0 == 4.63);

    auto pos = weeks_per_degc_to_days(-0.235);
    CHECK(pos.days_per_degc == doctest::Approx(-1.645).epsilon(1e-12));

    CHECK(code_of([] { weeks_per_degc_to_days(0.0); }) == Errc::zero_slope);
}
