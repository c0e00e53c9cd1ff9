#include "csv.hpp"
#include "data.hpp"
#include "errors.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

using namespace phenoflow;

namespace {

using testutil::TempDir;
using testutil::code_of;
using testutil::write_file;

} // namespace

TEST_CASE("calendar helpers") {
    CHECK(days_in_year(2015) == 365);
    CHECK(days_in_year(2016) == 366);
    CHECK(days_in_year(2000) == 366);
    CHECK(days_in_year(1900) == 365);

    CHECK(day_of_year(2015, 1, 1) == 1);
    CHECK(day_of_year(2015, 12, 31) == 365);
    CHECK(day_of_year(2016, 12, 31) == 366);
    CHECK(day_of_year(2016, 3, 1) == 61);

    // date_from_doy inverts day_of_year across two full years
    for (int year : {2015, 2016}) {
        for (int doy = 1; doy <= days_in_year(year); ++doy) {
            int month = 0, day = 0;
            date_from_doy(year, doy, month, day);
            CHECK(day_of_year(year, month, day) == doy);
        }
    }
}

TEST_CASE("site and category names round-trip") {
    for (Category c : {Category::A, Category::B, Category::C, Category::D, Category::E}) {
        CHECK(category_from_string(to_string(c)) == c);
    }
    for (Site s : {Site::DisturbedGrassland, Site::LongWarmedGrassland}) {
        CHECK(site_from_string(to_string(s)) == s);
    }
    CHECK(code_of([] { category_from_string("F"); }) == Errc::out_of_range);
    CHECK(code_of([] { site_from_string("XX"); }) == Errc::out_of_range);
}

TEST_CASE("csv numeric formatting round-trips") {
    for (double v : {0.0, -1.0, 0.1, 1e-300, 12345.678901234567, -0.21599999999999997}) {
        auto parsed = parse_double(format_double(v));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == v);
    }
    CHECK_FALSE(parse_double("1.2.3").has_value());
    CHECK_FALSE(parse_double("").has_value());
    CHECK_FALSE(parse_int("12x").has_value());
}

TEST_CASE("ndvi ingestion validates and sorts") {
    TempDir dir;

    SUBCASE("valid file comes back sorted") {
        auto path = write_file(dir, "ndvi.csv",
                               "plot_id,year,week,ndvi\n"
                               "B-1-A,2015,20,0.5\n"
                               "A-1-A,2015,22,0.6\n"
                               "A-1-A,2015,18,0.4\n");
        auto rows = ingest_ndvi(path);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].plot_id == "A-1-A");
        CHECK(rows[0].week == 18.0);
        CHECK(rows[1].week == 22.0);
        CHECK(rows[2].plot_id == "B-1-A");
    }

    SUBCASE("week outside [0, 52] is rejected") {
        auto path = write_file(dir, "bad_week.csv",
                               "plot_id,year,week,ndvi\nA,2015,53,0.5\n");
        CHECK(code_of([&] { ingest_ndvi(path); }) == Errc::out_of_range);
    }

    SUBCASE("ndvi outside [-1, 1] is rejected with its line number") {
        auto path = write_file(dir, "bad_ndvi.csv",
                               "plot_id,year,week,ndvi\n"
                               "A,2015,20,0.5\n"
                               "A,2015,22,1.5\n");
        try {
            ingest_ndvi(path);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::out_of_range);
            CHECK(std::string(e.what()).find(":3") != std::string::npos);
        }
    }

    SUBCASE("duplicate plot-year-week is rejected") {
        auto path = write_file(dir, "dup.csv",
                               "plot_id,year,week,ndvi\n"
                               "A,2015,20,0.5\n"
                               "A,2015,20,0.6\n");
        CHECK(code_of([&] { ingest_ndvi(path); }) == Errc::duplicate_sample);
    }

    SUBCASE("wrong header is rejected") {
        auto path = write_file(dir, "hdr.csv", "plot,year,week,ndvi\nA,2015,20,0.5\n");
        CHECK(code_of([&] { ingest_ndvi(path); }) == Errc::malformed_row);
    }

    SUBCASE("empty file is rejected, message names the file") {
        auto path = write_file(dir, "empty.csv", "");
        try {
            ingest_ndvi(path);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("empty.csv") != std::string::npos);
        }
    }

    SUBCASE("missing file is an io error") {
        CHECK(code_of([&] { ingest_ndvi(dir.file("nope.csv")); }) == Errc::io_error);
    }
}

TEST_CASE("soil ingestion groups per plot-year and derives the mean") {
    TempDir dir;
    auto path = write_file(dir, "soil.csv",
                           "plot_id,year,doy,temp_c\n"
                           "A,2015,2,4\n"
                           "A,2015,1,6\n"
                           "B,2015,1,10\n");
    auto series = ingest_soil(path);
    REQUIRE(series.size() == 2);
    CHECK(series[0].plot_id == "A");
    REQUIRE(series[0].readings.size() == 2);
    CHECK(series[0].readings[0].doy == 1); // sorted within the series
    CHECK(series[0].annual_mean == doctest::Approx(5.0));
    CHECK(series[1].plot_id == "B");
    CHECK(series[1].annual_mean == doctest::Approx(10.0));

    auto bad = write_file(dir, "soil_bad.csv", "plot_id,year,doy,temp_c\nA,2015,366,4\n");
    CHECK(code_of([&] { ingest_soil(bad); }) == Errc::out_of_range);

    auto dup = write_file(dir, "soil_dup.csv",
                          "plot_id,year,doy,temp_c\nA,2015,1,4\nA,2015,1,5\n");
    CHECK(code_of([&] { ingest_soil(dup); }) == Errc::duplicate_sample);
}

TEST_CASE("weather ingestion parses ISO dates") {
    TempDir dir;
    auto path = write_file(dir, "weather.csv",
                           "date,air_temp_c,precip_mm,irradiance_wm2\n"
                           "2015-01-02,1.5,0.4,50\n"
                           "2015-01-01,2.0,0.0,40\n");
    auto daily = ingest_weather_daily(path);
    REQUIRE(daily.size() == 2);
    CHECK(daily[0].doy == 1);
    CHECK(daily[1].doy == 2);
    CHECK(daily[1].air_temp_c == 1.5);

    auto bad = write_file(dir, "weather_bad.csv",
                          "date,air_temp_c,precip_mm,irradiance_wm2\n2015-13-01,1,0,40\n");
    CHECK(code_of([&] { ingest_weather_daily(bad); }) == Errc::malformed_row);
}

TEST_CASE("weekly aggregation means over fixed windows") {
    // week w covers doy [7(w-1)+1, 7w]; build two years with a known ramp
    std::vector<DailyWeather> daily;
    for (int year : {2015, 2016}) {
        for (int doy = 1; doy <= days_in_year(year); ++doy) {
            DailyWeather d;
            d.year = year;
            d.doy = doy;
            d.air_temp_c = doy; // mean over week w must be 7(w-1) + 4
            d.precip_mm = 1.0;
            d.irradiance_wm2 = 2.0 * doy;
            daily.push_back(d);
        }
    }
    auto weekly = aggregate_weather_weekly(daily);
    REQUIRE(weekly.size() == 52);
    for (const auto& w : weekly) {
        CHECK(w.week >= 1);
        CHECK(w.week <= 26);
        double expected = 7.0 * (w.week - 1) + 4.0;
        CHECK(w.air_temp_c == doctest::Approx(expected).epsilon(1e-12));
        CHECK(w.precip_mm == doctest::Approx(1.0));
        CHECK(w.irradiance_wm2 == doctest::Approx(2.0 * expected).epsilon(1e-12));
    }

    // a missing week is an error
    std::vector<DailyWeather> gappy = daily;
    gappy.erase(std::remove_if(gappy.begin(), gappy.end(),
                               [](const DailyWeather& d) {
                                   return d.year == 2015 && d.doy >= 8 && d.doy <= 14;
                               }),
                gappy.end());
    try {
        aggregate_weather_weekly(gappy);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_window);
    }
}

TEST_CASE("writers and ingesters round-trip") {
    TempDir dir;

    std::vector<NdviSample> ndvi = {{"DG-1-A", 2015, 18.0, 0.41},
                                    {"DG-1-A", 2015, 20.0, 0.55},
                                    {"LW-2-E", 2016, 30.0, -0.125}};
    write_ndvi_csv(dir.file("ndvi.csv"), ndvi);
    auto ndvi2 = ingest_ndvi(dir.file("ndvi.csv"));
    REQUIRE(ndvi2.size() == ndvi.size());
    for (size_t i = 0; i < ndvi.size(); ++i) {
        CHECK(ndvi2[i].plot_id == ndvi[i].plot_id);
        CHECK(ndvi2[i].year == ndvi[i].year);
        CHECK(ndvi2[i].week == ndvi[i].week);
        CHECK(ndvi2[i].ndvi == ndvi[i].ndvi);
    }

    std::vector<SoilTempSeries> soil(1);
    soil[0].plot_id = "DG-1-A";
    soil[0].year = 2015;
    soil[0].readings = {{1, 3.25}, {2, 4.5}};
    soil[0].annual_mean = (3.25 + 4.5) / 2.0;
    write_soil_csv(dir.file("soil.csv"), soil);
    auto soil2 = ingest_soil(dir.file("soil.csv"));
    REQUIRE(soil2.size() == 1);
    CHECK(soil2[0].annual_mean == soil[0].annual_mean);
    CHECK(soil2[0].readings.size() == 2);

    std::vector<DailyWeather> weather = {{2015, 1, 1.5, 0.25, 40.0}, {2015, 2, -2.0, 0.0, 55.5}};
    write_weather_daily_csv(dir.file("weather.csv"), weather);
    auto weather2 = ingest_weather_daily(dir.file("weather.csv"));
    REQUIRE(weather2.size() == 2);
    CHECK(weather2[1].air_temp_c == -2.0);
    CHECK(weather2[1].irradiance_wm2 == 55.5);

    std::vector<PlotRecord> plots = {{"DG-1-A", Site::DisturbedGrassland, 1, Category::A},
                                     {"LW-5-E", Site::LongWarmedGrassland, 5, Category::E}};
    write_plots_csv(dir.file("plots.csv"), plots);
    auto plots2 = ingest_plots(dir.file("plots.csv"));
    REQUIRE(plots2.size() == 2);
    CHECK(plots2[0].plot_id == "DG-1-A");
    CHECK(plots2[1].category == Category::E);
    CHECK(plots2[1].transect == 5);
}
