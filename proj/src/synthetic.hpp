#pragma once

#include "data.hpp"
#include "double_logistic.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace phenoflow {

/// Knobs of the closed-loop data generator. Ground-truth phenology responds
/// linearly to soil warming and to shared yearly weather anomalies, so runs
/// of the full pipeline can be checked against planted effect sizes.
struct SyntheticConfig {
    std::uint64_t seed = 42;

    int first_year = 2014;
    int n_years = 6;
    int transects = 5; // per site, two sites, 5 categories per transect

    // Baseline season shape at ambient soil temperature.
    double base_a1 = 17.5;
    double base_p = 29.0;
    double base_b1 = -0.8;
    double base_b2 = -1.1;
    double base_c = 0.62;
    double base_d = 0.18;

    // Soil thermal regime: ambient annual mean and seasonal swing, plus the
    // per-category warming offsets (A..E midpoints of the observed ranges).
    double soil_base_mean = 5.0;
    double soil_amplitude = 5.0;
    double warming_offsets[5] = {0.0, 0.75, 2.5, 4.0, 7.5};

    // Linear responses to soil warming, in weeks (or NDVI) per degree.
    double sos_sensitivity = -0.216;
    double pos_sensitivity = -0.235;
    double peak_sensitivity = 0.005;

    // Yearly weather anomalies shift the whole season; the gains make the
    // shift recoverable from the weekly weather features.
    double air_anomaly_sd = 0.8;    // degC, shared per year
    double precip_anomaly_sd = 0.4; // mm/day
    double irradiance_anomaly_sd = 8.0; // W/m2
    double air_gain = -0.5;    // weeks per degC of air anomaly
    double precip_gain = -0.3; // weeks per mm/day of precip anomaly
    double irradiance_gain = -0.01; // weeks per W/m2 of irradiance anomaly

    // Nuisance noise.
    double ndvi_noise_sd = 0.02;     // per NDVI sample
    double plot_soil_jitter_sd = 0.15; // per plot, constant across years
    double season_jitter_sd = 0.3;   // per plot-year, on a1 and p jointly
    double amplitude_jitter_sd = 0.008; // per plot-year, on c
    double baseline_jitter_sd = 0.005;  // per plot-year, on d
    double soil_noise_sd = 0.3;      // per daily soil reading
    double weather_noise_sd = 1.0;   // per daily weather reading (scaled per series)

    // Fraction of plot-years replaced by uniform noise in [0.1, 0.9],
    // exercising the QC filter.
    double corrupt_fraction = 0.0;

    // NDVI sampling grid, inclusive.
    int week_start = 14;
    int week_end = 44;
    int week_step = 2;
};

struct TruthRecord {
    std::string plot_id;
    int year = 0;
    DoubleLogisticParams params;
    double sos = 0.0;
    double pos = 0.0;
    double peak = 0.0;
    double soil_mean = 0.0; // planted annual mean, before sensor noise
    bool corrupted = false;
};

struct SyntheticData {
    std::vector<PlotRecord> plots;
    std::vector<NdviSample> ndvi;
    std::vector<SoilTempSeries> soil;
    std::vector<DailyWeather> weather;
    std::vector<TruthRecord> truth;
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

/// Writes ndvi.csv, soil.csv, weather_daily.csv, plots.csv and truth.csv
/// into dir (created if missing).
void write_synthetic(const SyntheticData& data, const std::string& dir);

} // namespace phenoflow
