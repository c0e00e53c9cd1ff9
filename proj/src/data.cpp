#include "data.hpp"

#include "csv.hpp"
#include "errors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace phenoflow {

std::string to_string(Site site) {
    return site == Site::DisturbedGrassland ? "disturbed-grassland" : "long-warmed-grassland";
}

std::string to_string(Category category) {
    static const char* names[] = {"A", "B", "C", "D", "E"};
    return names[static_cast<int>(category)];
}

Site site_from_string(std::string_view text) {
    if (text == "disturbed-grassland") return Site::DisturbedGrassland;
    if (text == "long-warmed-grassland") return Site::LongWarmedGrassland;
    fail(Errc::out_of_range, "unknown site: " + std::string(text));
}

Category category_from_string(std::string_view text) {
    if (text.size() == 1 && text[0] >= 'A' && text[0] <= 'E') {
        return static_cast<Category>(text[0] - 'A');
    }
    fail(Errc::out_of_range, "unknown category: " + std::string(text));
}

int days_in_year(int year) {
    bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 366 : 365;
}

namespace {

constexpr int kMonthDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

int month_length(int year, int month) {
    if (month == 2 && days_in_year(year) == 366) return 29;
    return kMonthDays[month - 1];
}

} // namespace

int day_of_year(int year, int month, int day) {
    int doy = day;
    for (int m = 1; m < month; ++m) doy += month_length(year, m);
    return doy;
}

void date_from_doy(int year, int doy, int& month, int& day) {
    month = 1;
    while (doy > month_length(year, month)) {
        doy -= month_length(year, month);
        ++month;
    }
    day = doy;
}

namespace {

struct IsoDate {
    int year, month, day;
};

IsoDate parse_iso_date(std::string_view text, const std::string& where) {
    // YYYY-MM-DD
    auto bad = [&]() -> IsoDate {
        fail(Errc::malformed_row, where + ": invalid ISO-8601 date '" + std::string(text) + "'");
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return bad();
    auto y = parse_int(text.substr(0, 4));
    auto m = parse_int(text.substr(5, 2));
    auto d = parse_int(text.substr(8, 2));
    if (!y || !m || !d) return bad();
    IsoDate date{static_cast<int>(*y), static_cast<int>(*m), static_cast<int>(*d)};
    if (date.month < 1 || date.month > 12 || date.day < 1 ||
        date.day > month_length(date.year, date.month)) {
        return bad();
    }
    return date;
}

double need_double(const std::vector<std::string>& row, size_t col, const std::string& path,
                   int line, const char* field) {
    auto value = parse_double(row[col]);
    if (!value) {
        fail(Errc::malformed_row, path + ":" + std::to_string(line) + ": field '" + field +
                                      "' is not a number: '" + row[col] + "'");
    }
    return *value;
}

int need_int(const std::vector<std::string>& row, size_t col, const std::string& path, int line,
             const char* field) {
    auto value = parse_int(row[col]);
    if (!value) {
        fail(Errc::malformed_row, path + ":" + std::to_string(line) + ": field '" + field +
                                      "' is not an integer: '" + row[col] + "'");
    }
    return static_cast<int>(*value);
}

[[noreturn]] void out_of_range(const std::string& path, int line, const char* field,
                               const std::string& value) {
    fail(Errc::out_of_range,
         path + ":" + std::to_string(line) + ": field '" + field + "' out of range: " + value);
}

} // namespace

std::vector<NdviSample> ingest_ndvi(const std::string& path) {
    CsvFile file = read_csv(path);
    require_header(file, {"plot_id", "year", "week", "ndvi"}, path);

    std::vector<NdviSample> samples;
    samples.reserve(file.rows.size());
    std::set<std::tuple<std::string, int, double>> seen;
    for (size_t i = 0; i < file.rows.size(); ++i) {
        const auto& row = file.rows[i];
        int line = file.line_numbers[i];
        NdviSample s;
        s.plot_id = row[0];
        if (s.plot_id.empty()) fail(Errc::malformed_row, path + ":" + std::to_string(line) + ": empty plot_id");
        s.year = need_int(row, 1, path, line, "year");
        s.week = need_double(row, 2, path, line, "week");
        s.ndvi = need_double(row, 3, path, line, "ndvi");
        if (s.week < 0.0 || s.week > 52.0) out_of_range(path, line, "week", row[2]);
        if (s.ndvi < -1.0 || s.ndvi > 1.0) out_of_range(path, line, "ndvi", row[3]);
        if (!seen.insert({s.plot_id, s.year, s.week}).second) {
            fail(Errc::duplicate_sample, path + ":" + std::to_string(line) + ": duplicate sample (" +
                                             s.plot_id + ", " + std::to_string(s.year) + ", " +
                                             row[2] + ")");
        }
        samples.push_back(std::move(s));
    }
    std::sort(samples.begin(), samples.end(), [](const NdviSample& a, const NdviSample& b) {
        return std::tie(a.plot_id, a.year, a.week) < std::tie(b.plot_id, b.year, b.week);
    });
    return samples;
}

std::vector<SoilTempSeries> ingest_soil(const std::string& path) {
    CsvFile file = read_csv(path);
    require_header(file, {"plot_id", "year", "doy", "temp_c"}, path);

    std::map<std::pair<std::string, int>, SoilTempSeries> grouped;
    std::set<std::tuple<std::string, int, int>> seen;
    for (size_t i = 0; i < file.rows.size(); ++i) {
        const auto& row = file.rows[i];
        int line = file.line_numbers[i];
        std::string plot = row[0];
        int year = need_int(row, 1, path, line, "year");
        int doy = need_int(row, 2, path, line, "doy");
        double temp = need_double(row, 3, path, line, "temp_c");
        if (doy < 1 || doy > days_in_year(year)) out_of_range(path, line, "doy", row[2]);
        if (!seen.insert({plot, year, doy}).second) {
            fail(Errc::duplicate_sample, path + ":" + std::to_string(line) +
                                             ": duplicate soil reading (" + plot + ", " +
                                             std::to_string(year) + ", doy " +
                                             std::to_string(doy) + ")");
        }
        auto& series = grouped[{plot, year}];
        series.plot_id = plot;
        series.year = year;
        series.readings.push_back({doy, temp});
    }

    std::vector<SoilTempSeries> out;
    out.reserve(grouped.size());
    for (auto& [key, series] : grouped) {
        std::sort(series.readings.begin(), series.readings.end(),
                  [](const SoilReading& a, const SoilReading& b) { return a.doy < b.doy; });
        double sum = 0.0;
        for (const auto& r : series.readings) sum += r.temp_c;
        series.annual_mean = sum / static_cast<double>(series.readings.size());
        out.push_back(std::move(series));
    }
    return out;
}

std::vector<DailyWeather> ingest_weather_daily(const std::string& path) {
    CsvFile file = read_csv(path);
    require_header(file, {"date", "air_temp_c", "precip_mm", "irradiance_wm2"}, path);

    std::vector<DailyWeather> out;
    out.reserve(file.rows.size());
    for (size_t i = 0; i < file.rows.size(); ++i) {
        const auto& row = file.rows[i];
        int line = file.line_numbers[i];
        IsoDate date = parse_iso_date(row[0], path + ":" + std::to_string(line));
        DailyWeather d;
        d.year = date.year;
        d.doy = day_of_year(date.year, date.month, date.day);
        d.air_temp_c = need_double(row, 1, path, line, "air_temp_c");
        d.precip_mm = need_double(row, 2, path, line, "precip_mm");
        d.irradiance_wm2 = need_double(row, 3, path, line, "irradiance_wm2");
        out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [](const DailyWeather& a, const DailyWeather& b) {
        return std::tie(a.year, a.doy) < std::tie(b.year, b.doy);
    });
    return out;
}

std::vector<PlotRecord> ingest_plots(const std::string& path) {
    CsvFile file = read_csv(path);
    require_header(file, {"plot_id", "site", "transect", "category"}, path);

    std::vector<PlotRecord> out;
    std::set<std::string> ids;
    for (size_t i = 0; i < file.rows.size(); ++i) {
        const auto& row = file.rows[i];
        int line = file.line_numbers[i];
        PlotRecord p;
        p.plot_id = row[0];
        if (!ids.insert(p.plot_id).second) {
            fail(Errc::duplicate_sample,
                 path + ":" + std::to_string(line) + ": duplicate plot_id " + p.plot_id);
        }
        p.site = site_from_string(row[1]);
        p.transect = need_int(row, 2, path, line, "transect");
        if (p.transect < 1 || p.transect > 5) out_of_range(path, line, "transect", row[2]);
        p.category = category_from_string(row[3]);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<WeatherWeekly> aggregate_weather_weekly(const std::vector<DailyWeather>& daily) {
    // sums[year][week-1] -> (n, air, precip, irr)
    struct Acc {
        int n = 0;
        double air = 0.0, precip = 0.0, irr = 0.0;
    };
    std::map<int, std::array<Acc, 26>> by_year;
    std::set<std::pair<int, int>> seen_dates;
    for (const auto& d : daily) {
        if (!seen_dates.insert({d.year, d.doy}).second) {
            fail(Errc::duplicate_sample, "duplicate daily weather record for year " +
                                             std::to_string(d.year) + " doy " +
                                             std::to_string(d.doy));
        }
        by_year.try_emplace(d.year);
        if (d.doy < 1 || d.doy > 182) continue; // weeks 1..26 only
        int week = (d.doy - 1) / 7 + 1;
        Acc& acc = by_year[d.year][week - 1];
        acc.n += 1;
        acc.air += d.air_temp_c;
        acc.precip += d.precip_mm;
        acc.irr += d.irradiance_wm2;
    }

    std::vector<WeatherWeekly> out;
    for (const auto& [year, weeks] : by_year) {
        for (int w = 1; w <= 26; ++w) {
            const Acc& acc = weeks[w - 1];
            if (acc.n == 0) {
                fail(Errc::empty_window, "no daily weather in year " + std::to_string(year) +
                                             " week " + std::to_string(w));
            }
            WeatherWeekly ww;
            ww.year = year;
            ww.week = w;
            ww.air_temp_c = acc.air / acc.n;
            ww.precip_mm = acc.precip / acc.n;
            ww.irradiance_wm2 = acc.irr / acc.n;
            out.push_back(ww);
        }
    }
    return out;
}

void write_ndvi_csv(const std::string& path, const std::vector<NdviSample>& samples) {
    CsvWriter w(path);
    w.write_row({"plot_id", "year", "week", "ndvi"});
    for (const auto& s : samples) {
        w.write_row({s.plot_id, std::to_string(s.year), format_double(s.week),
                     format_double(s.ndvi)});
    }
}

void write_soil_csv(const std::string& path, const std::vector<SoilTempSeries>& series) {
    CsvWriter w(path);
    w.write_row({"plot_id", "year", "doy", "temp_c"});
    for (const auto& s : series) {
        for (const auto& r : s.readings) {
            w.write_row({s.plot_id, std::to_string(s.year), std::to_string(r.doy),
                         format_double(r.temp_c)});
        }
    }
}

void write_weather_daily_csv(const std::string& path, const std::vector<DailyWeather>& daily) {
    CsvWriter w(path);
    w.write_row({"date", "air_temp_c", "precip_mm", "irradiance_wm2"});
    char date[16];
    for (const auto& d : daily) {
        int month = 0, day = 0;
        date_from_doy(d.year, d.doy, month, day);
        std::snprintf(date, sizeof(date), "%04d-%02d-%02d", d.year, month, day);
        w.write_row({date, format_double(d.air_temp_c), format_double(d.precip_mm),
                     format_double(d.irradiance_wm2)});
    }
}

void write_plots_csv(const std::string& path, const std::vector<PlotRecord>& plots) {
    CsvWriter w(path);
    w.write_row({"plot_id", "site", "transect", "category"});
    for (const auto& p : plots) {
        w.write_row({p.plot_id, to_string(p.site), std::to_string(p.transect),
                     to_string(p.category)});
    }
}

} // namespace phenoflow
