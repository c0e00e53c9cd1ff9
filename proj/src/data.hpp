#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace phenoflow {

enum class Site { DisturbedGrassland, LongWarmedGrassland };

// Soil-warming class of a plot, ordered by temperature elevation:
// A ambient, B +0.5..1, C +2..3, D +3..5, E +5..10 degrees C.
enum class Category : int { A = 0, B, C, D, E };

std::string to_string(Site site);
std::string to_string(Category category);
Site site_from_string(std::string_view text);
Category category_from_string(std::string_view text);

struct PlotRecord {
    std::string plot_id;
    Site site = Site::DisturbedGrassland;
    int transect = 1; // 1..5
    Category category = Category::A;
};

struct NdviSample {
    std::string plot_id;
    int year = 0;
    double week = 0.0; // fractional week of year, [0, 52]
    double ndvi = 0.0; // [-1, 1]
};

struct SoilReading {
    int doy = 0; // 1-based day of year
    double temp_c = 0.0;
};

struct SoilTempSeries {
    std::string plot_id;
    int year = 0;
    std::vector<SoilReading> readings;
    double annual_mean = 0.0; // arithmetic mean of readings
};

struct DailyWeather {
    int year = 0;
    int doy = 0; // 1-based day of year
    double air_temp_c = 0.0;
    double precip_mm = 0.0;
    double irradiance_wm2 = 0.0;
};

struct WeatherWeekly {
    int year = 0;
    int week = 0; // 1..26; week w covers day-of-year [7(w-1)+1, 7w]
    double air_temp_c = 0.0;
    double precip_mm = 0.0;
    double irradiance_wm2 = 0.0;
};

// Calendar helpers (proleptic Gregorian).
int days_in_year(int year);
int day_of_year(int year, int month, int day);
void date_from_doy(int year, int doy, int& month, int& day);

/// Parses `ndvi.csv` (header plot_id,year,week,ndvi). Rows with week outside
/// [0, 52] or ndvi outside [-1, 1] are rejected with the offending line
/// number; duplicate (plot, year, week) keys are an error. The result is
/// sorted by (plot_id, year, week).
std::vector<NdviSample> ingest_ndvi(const std::string& path);

/// Parses `soil.csv` (header plot_id,year,doy,temp_c) and groups readings per
/// plot-year; annual_mean is derived. Sorted by (plot_id, year, doy).
std::vector<SoilTempSeries> ingest_soil(const std::string& path);

/// Parses `weather_daily.csv` (header date,air_temp_c,precip_mm,irradiance_wm2,
/// ISO-8601 dates). Sorted by (year, doy).
std::vector<DailyWeather> ingest_weather_daily(const std::string& path);

/// Parses `plots.csv` (header plot_id,site,transect,category).
std::vector<PlotRecord> ingest_plots(const std::string& path);

/// Weekly means over the fixed windows doy in [7(w-1)+1, 7w], weeks 1..26 of
/// each year present in the input. A week with no daily records is an error.
std::vector<WeatherWeekly> aggregate_weather_weekly(const std::vector<DailyWeather>& daily);

void write_ndvi_csv(const std::string& path, const std::vector<NdviSample>& samples);
void write_soil_csv(const std::string& path, const std::vector<SoilTempSeries>& series);
void write_weather_daily_csv(const std::string& path, const std::vector<DailyWeather>& daily);
void write_plots_csv(const std::string& path, const std::vector<PlotRecord>& plots);

} // namespace phenoflow
