#include "synthetic.hpp"

#include "csv.hpp"
#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

namespace phenoflow {

namespace {

constexpr double kSosCurvatureOffset = 1.3169578969248166; // ln(2 + sqrt(3))

double seasonal(double doy, double phase_doy, double period = 365.0) {
    return std::sin(2.0 * std::numbers::pi * (doy - phase_doy) / period);
}

std::string make_plot_id(Site site, int transect, Category category) {
    std::string id = site == Site::DisturbedGrassland ? "DG" : "LW";
    id += "-";
    id += std::to_string(transect);
    id += "-";
    id += to_string(category);
    return id;
}

} // namespace

SyntheticData generate_synthetic(const SyntheticConfig& config) {
    if (config.n_years < 1 || config.transects < 1) {
        fail(Errc::invalid_config, "generate_synthetic: need at least one year and transect");
    }
    if (config.corrupt_fraction < 0.0 || config.corrupt_fraction > 1.0) {
        fail(Errc::invalid_config, "generate_synthetic: corrupt_fraction outside [0, 1]");
    }
    if (config.week_step < 1 || config.week_start > config.week_end) {
        fail(Errc::invalid_config, "generate_synthetic: bad NDVI sampling grid");
    }

    SyntheticData data;
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    auto noise = [&](double sd) { return sd > 0.0 ? sd * unit_normal(rng) : 0.0; };

    for (Site site : {Site::DisturbedGrassland, Site::LongWarmedGrassland}) {
        for (int t = 1; t <= config.transects; ++t) {
            for (int cat = 0; cat < 5; ++cat) {
                PlotRecord plot;
                plot.site = site;
                plot.transect = t;
                plot.category = static_cast<Category>(cat);
                plot.plot_id = make_plot_id(site, t, plot.category);
                data.plots.push_back(plot);
            }
        }
    }

    std::vector<double> plot_soil_jitter(data.plots.size());
    for (auto& j : plot_soil_jitter) j = noise(config.plot_soil_jitter_sd);

    std::vector<double> air_anom(static_cast<size_t>(config.n_years));
    std::vector<double> precip_anom(static_cast<size_t>(config.n_years));
    std::vector<double> irr_anom(static_cast<size_t>(config.n_years));
    for (int y = 0; y < config.n_years; ++y) {
        air_anom[static_cast<size_t>(y)] = noise(config.air_anomaly_sd);
        precip_anom[static_cast<size_t>(y)] = noise(config.precip_anomaly_sd);
        irr_anom[static_cast<size_t>(y)] = noise(config.irradiance_anomaly_sd);
    }

    for (int y = 0; y < config.n_years; ++y) {
        int year = config.first_year + y;
        int n_days = days_in_year(year);
        for (int doy = 1; doy <= n_days; ++doy) {
            DailyWeather w;
            w.year = year;
            w.doy = doy;
            w.air_temp_c = 4.0 + 11.0 * seasonal(doy, 110.0) +
                           air_anom[static_cast<size_t>(y)] + noise(config.weather_noise_sd);
            w.precip_mm = std::max(0.0, 2.0 + 0.8 * seasonal(doy, 250.0) +
                                            precip_anom[static_cast<size_t>(y)] +
                                            noise(0.8 * config.weather_noise_sd));
            w.irradiance_wm2 = std::max(5.0, 120.0 + 110.0 * seasonal(doy, 81.0) +
                                                 irr_anom[static_cast<size_t>(y)] +
                                                 noise(6.0 * config.weather_noise_sd));
            data.weather.push_back(w);
        }
    }

    const size_t n_plot_years = data.plots.size() * static_cast<size_t>(config.n_years);
    std::vector<char> corrupted(n_plot_years, 0);
    {
        auto k = static_cast<size_t>(
            std::llround(config.corrupt_fraction * static_cast<double>(n_plot_years)));
        std::vector<size_t> order(n_plot_years);
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t i = 0; i < k; ++i) corrupted[order[i]] = 1;
    }

    std::uniform_real_distribution<double> corrupt_ndvi(0.1, 0.9);
    size_t plot_year_index = 0;
    for (size_t pi = 0; pi < data.plots.size(); ++pi) {
        const auto& plot = data.plots[pi];
        double offset = config.warming_offsets[static_cast<int>(plot.category)];
        double delta = offset + plot_soil_jitter[pi];

        for (int y = 0; y < config.n_years; ++y, ++plot_year_index) {
            int year = config.first_year + y;

            TruthRecord truth;
            truth.plot_id = plot.plot_id;
            truth.year = year;
            truth.soil_mean = config.soil_base_mean + delta;
            truth.corrupted = corrupted[plot_year_index] != 0;

            double season_shift = config.air_gain * air_anom[static_cast<size_t>(y)] +
                                  config.precip_gain * precip_anom[static_cast<size_t>(y)] +
                                  config.irradiance_gain * irr_anom[static_cast<size_t>(y)] +
                                  noise(config.season_jitter_sd);

            DoubleLogisticParams params;
            params.a1 = config.base_a1 + config.sos_sensitivity * delta + season_shift;
            params.p = config.base_p + config.pos_sensitivity * delta + season_shift;
            params.b1 = config.base_b1;
            params.b2 = config.base_b2;
            params.c = config.base_c + config.peak_sensitivity * delta +
                       noise(config.amplitude_jitter_sd);
            params.d = config.base_d + noise(config.baseline_jitter_sd);
            params.a2 = derive_a2(params.a1, params.b1, params.b2, params.p);
            truth.params = params;
            truth.sos = params.a1 + kSosCurvatureOffset / params.b1;
            truth.pos = params.p;
            truth.peak = eval_double_logistic(params, params.p);

            for (int w = config.week_start; w <= config.week_end; w += config.week_step) {
                NdviSample s;
                s.plot_id = plot.plot_id;
                s.year = year;
                s.week = w;
                if (truth.corrupted) {
                    s.ndvi = corrupt_ndvi(rng);
                } else {
                    s.ndvi = std::clamp(
                        eval_double_logistic(params, w) + noise(config.ndvi_noise_sd), -1.0, 1.0);
                }
                data.ndvi.push_back(s);
            }

            SoilTempSeries series;
            series.plot_id = plot.plot_id;
            series.year = year;
            int n_days = days_in_year(year);
            series.readings.reserve(static_cast<size_t>(n_days));
            double sum = 0.0;
            for (int doy = 1; doy <= n_days; ++doy) {
                SoilReading r;
                r.doy = doy;
                r.temp_c = truth.soil_mean + config.soil_amplitude * seasonal(doy, 120.0) +
                           noise(config.soil_noise_sd);
                sum += r.temp_c;
                series.readings.push_back(r);
            }
            series.annual_mean = sum / static_cast<double>(n_days);
            data.soil.push_back(std::move(series));
            data.truth.push_back(std::move(truth));
        }
    }

    return data;
}

void write_synthetic(const SyntheticData& data, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto path = [&dir](const char* name) {
        return (std::filesystem::path(dir) / name).string();
    };
    write_plots_csv(path("plots.csv"), data.plots);
    write_ndvi_csv(path("ndvi.csv"), data.ndvi);
    write_soil_csv(path("soil.csv"), data.soil);
    write_weather_daily_csv(path("weather_daily.csv"), data.weather);

    CsvWriter truth(path("truth.csv"));
    truth.write_row({"plot_id", "year", "a1", "a2", "b1", "b2", "c", "d", "p", "sos", "pos",
                     "peak", "soil_mean", "corrupted"});
    for (const auto& t : data.truth) {
        truth.write_row({t.plot_id, std::to_string(t.year), format_double(t.params.a1),
                         format_double(t.params.a2), format_double(t.params.b1),
                         format_double(t.params.b2), format_double(t.params.c),
                         format_double(t.params.d), format_double(t.params.p),
                         format_double(t.sos), format_double(t.pos), format_double(t.peak),
                         format_double(t.soil_mean), t.corrupted ? "1" : "0"});
    }
}

} // namespace phenoflow
