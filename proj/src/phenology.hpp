#pragma once

#include "season_fit.hpp"

#include <string>
#include <vector>

namespace phenoflow {

struct PhenologyMetrics {
    std::string plot_id;
    int year = 0;
    double sos = 0.0;  // week the spring curvature peaks
    double pos = 0.0;  // week of the seasonal maximum
    double peak = 0.0; // NDVI at pos
    bool qc_pass = false;
};

struct QcPartition {
    std::vector<PlotYearFit> kept;
    std::vector<PlotYearFit> excluded;
    double exclusion_rate = 0.0;
};

/// Week in [0, p] maximizing the spring-branch second derivative: dense grid
/// at 0.01-week steps, then golden-section refinement to 1e-4 week. Throws
/// DegenerateFit when the amplitude is below kCMin.
double estimate_sos(const SeasonFit& fit);

/// The fitted transition week p.
double estimate_pos(const SeasonFit& fit);

/// Fitted NDVI at the transition week.
double estimate_peak(const SeasonFit& fit);

/// Splits fits into kept (r2 >= threshold and converged) and excluded.
QcPartition apply_qc(const std::vector<PlotYearFit>& fits, double threshold = 0.80);

/// Landmarks for one qc-evaluated fit; the qc_pass flag follows the same
/// rule as apply_qc.
PhenologyMetrics extract_phenology(const std::string& plot_id, int year, const SeasonFit& fit,
                                   double qc_threshold = 0.80);

void write_phenology_csv(const std::string& path, const std::vector<PhenologyMetrics>& rows);
std::vector<PhenologyMetrics> read_phenology_csv(const std::string& path);

} // namespace phenoflow
