#include "errors.hpp"
#include "oracles.hpp"
#include "phenology.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace phenoflow;
using testutil::TempDir;
using testutil::code_of;

namespace {

SeasonFit make_fit(double a1, double b1, double b2, double c, double d, double p) {
    SeasonFit fit;
    fit.params.a1 = a1;
    fit.params.b1 = b1;
    fit.params.b2 = b2;
    fit.params.c = c;
    fit.params.d = d;
    fit.params.p = p;
    fit.params.a2 = derive_a2(a1, b1, b2, p);
    fit.r2 = 0.95;
    fit.n_points = 41;
    fit.converged = true;
    return fit;
}

} // namespace

TEST_CASE("sos matches the closed-form curvature maximum") {
    // For c / (1 + exp(b1 (x - a1))), the second derivative peaks at
    // a1 + ln(2 + sqrt(3)) / b1 (b1 < 0 puts it before the inflection).
    SeasonFit f1 = make_fit(20.0, -1.0, -1.4, 0.6, 0.1, 31.0);
    CHECK(estimate_sos(f1) == doctest::Approx(oracle::sos_closed_form(20.0, -1.0)).epsilon(1e-4));
    CHECK(estimate_sos(f1) == doctest::Approx(20.0 - std::log(2.0 + std::sqrt(3.0))).epsilon(1e-4));

    SeasonFit f2 = make_fit(20.0, -2.0, -1.7, 0.5, 0.1, 30.0);
    CHECK(estimate_sos(f2) ==
          doctest::Approx(20.0 - std::log(2.0 + std::sqrt(3.0)) / 2.0).epsilon(1e-4));

    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> a1_d(12.0, 22.0), b1_d(-2.5, -0.4),
        width_d(8.0, 16.0), c_d(0.3, 0.9), d_d(0.0, 0.3), ratio_d(0.5, 0.9);
    for (int trial = 0; trial < 25; ++trial) {
        double a1 = a1_d(rng);
        double b1 = b1_d(rng);
        double p = a1 + width_d(rng);
        SeasonFit fit = make_fit(a1, b1, b1 / ratio_d(rng), c_d(rng), d_d(rng), p);
        double want = oracle::sos_closed_form(a1, b1);
        CAPTURE(trial);
        CHECK(std::fabs(estimate_sos(fit) - want) <= 1e-3);
    }
}

TEST_CASE("sos is translation equivariant") {
    SeasonFit base = make_fit(16.0, -0.9, -1.3, 0.55, 0.12, 29.0);
    double s0 = estimate_sos(base);
    for (double shift : {1.0, 3.5, 7.0}) {
        SeasonFit moved = make_fit(16.0 + shift, -0.9, -1.3, 0.55, 0.12, 29.0 + shift);
        CHECK(estimate_sos(moved) == doctest::Approx(s0 + shift).epsilon(1e-6));
    }
}

TEST_CASE("pos and peak read off the transition point") {
    SeasonFit fit = make_fit(15.0, -1.1, -1.5, 0.62, 0.14, 28.5);
    CHECK(estimate_pos(fit) == 28.5);
    double peak = estimate_peak(fit);
    CHECK(peak == eval_double_logistic(fit.params, 28.5));
    // the curve is near its plateau at p: above baseline, at most baseline + amplitude
    CHECK(peak > fit.params.d);
    CHECK(peak <= fit.params.d + fit.params.c);
    CHECK(peak > fit.params.d + 0.9 * fit.params.c);
}

TEST_CASE("degenerate fits carry no landmarks") {
    SeasonFit flat = make_fit(15.0, -1.0, -1.0, 0.01, 0.2, 28.0);
    flat.degenerate = true;
    CHECK(code_of([&] { estimate_sos(flat); }) == Errc::degenerate_fit);
}

TEST_CASE("qc keeps converged fits above the threshold") {
    std::vector<PlotYearFit> fits;
    auto add = [&](const std::string& plot, int year, double r2, bool converged) {
        PlotYearFit f;
        f.plot_id = plot;
        f.year = year;
        f.fit = make_fit(15.0, -1.0, -1.2, 0.5, 0.1, 28.0);
        f.fit.r2 = r2;
        f.fit.converged = converged;
        fits.push_back(f);
    };
    add("A", 2015, 0.95, true);
    add("B", 2015, 0.80, true);  // boundary value passes
    add("C", 2015, 0.79, true);  // below threshold
    add("D", 2015, 0.99, false); // unconverged never passes
    add("E", 2015, 0.30, true);

    QcPartition part = apply_qc(fits, 0.80);
    REQUIRE(part.kept.size() == 2);
    REQUIRE(part.excluded.size() == 3);
    CHECK(part.kept[0].plot_id == "A");
    CHECK(part.kept[1].plot_id == "B");
    CHECK(part.excluded[0].plot_id == "C");
    CHECK(part.exclusion_rate == doctest::Approx(3.0 / 5.0));
}

TEST_CASE("extract_phenology mirrors the qc rule") {
    SeasonFit good = make_fit(16.0, -1.0, -1.3, 0.6, 0.1, 29.0);
    PhenologyMetrics m = extract_phenology("DG-1-A", 2016, good, 0.80);
    CHECK(m.plot_id == "DG-1-A");
    CHECK(m.year == 2016);
    CHECK(m.qc_pass);
    CHECK(m.sos == doctest::Approx(estimate_sos(good)));
    CHECK(m.pos == 29.0);
    CHECK(m.peak == doctest::Approx(estimate_peak(good)));

    SeasonFit poor = good;
    poor.r2 = 0.5;
    PhenologyMetrics bad = extract_phenology("DG-1-A", 2016, poor, 0.80);
    CHECK_FALSE(bad.qc_pass);
    // excluded rows carry no landmark values
    CHECK(bad.sos == 0.0);
    CHECK(bad.pos == 0.0);
    CHECK(bad.peak == 0.0);

    // A degenerate amplitude that somehow clears the r2 gate is an error,
    // not a silent exclusion: there is no spring branch to read SOS from.
    SeasonFit degen = make_fit(16.0, -1.0, -1.3, 0.01, 0.1, 29.0);
    degen.degenerate = true;
    degen.r2 = 0.9;
    CHECK(code_of([&] { extract_phenology("DG-1-A", 2016, degen, 0.80); }) ==
          Errc::degenerate_fit);
}

TEST_CASE("phenology csv round-trips") {
    TempDir dir;
    std::vector<PhenologyMetrics> rows;
    PhenologyMetrics a{"DG-1-A", 2015, 14.682162458739, 28.25, 0.71230000000001, true};
    PhenologyMetrics b{"LW-9-E", 2020, 0.0, 0.0, 0.0, false};
    rows.push_back(a);
    rows.push_back(b);
    write_phenology_csv(dir.file("phenology.csv"), rows);
    auto back = read_phenology_csv(dir.file("phenology.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].plot_id == "DG-1-A");
    CHECK(back[0].year == 2015);
    CHECK(back[0].sos == a.sos);
    CHECK(back[0].pos == a.pos);
    CHECK(back[0].peak == a.peak);
    CHECK(back[0].qc_pass);
    CHECK_FALSE(back[1].qc_pass);
}
