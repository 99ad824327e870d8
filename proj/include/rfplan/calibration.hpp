// SPDX-License-Identifier: Apache-2.0
//
// Measurement ingestion, prediction error statistics and the (A, B) tuning fit.

#ifndef RFPLAN_CALIBRATION_HPP
#define RFPLAN_CALIBRATION_HPP

#include "rfplan/rt.hpp"
#include "rfplan/vec3.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace rfplan
{

struct RawTrace
{
    std::string tx_id;
    std::string rx_id;
    Vec3 position;
    std::vector<double> samples; // instantaneous RxP, dBm
    double trajectory_length = 0.0;
    std::size_t first_row = 0; // source line of the first sample, 0 when not read from a file
};

struct FastFadingFilter
{
    std::size_t min_samples = 20;
    double min_span_db = 3.0;
    double max_span_db = 40.0;
};

struct ProcessedSample
{
    std::string tx_id;
    std::string rx_id;
    Vec3 position;
    double rxp_avg_dbm = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
    double d3d = 0.0; // filled in once the transmitter is known
};

// Linear-power mean of the trace. Invalid when too short or the peak-to-peak span is implausible.
ProcessedSample filter_fast_fading(const RawTrace &trace, const FastFadingFilter &filter = {});
// Sample count rule only, no span bounds.
ProcessedSample filter_fast_fading(const RawTrace &trace, std::size_t min_samples);

double pl_from_measurement(const ProcessedSample &sample, double tx_power_dbm, double tx_gain_dbi,
                           double rx_gain_dbi);

struct ErrorStats
{
    double rmse = 0.0;
    double mean_error = 0.0;
    double std_dev = 0.0;     // population convention
    double correlation = 0.0; // Pearson; NaN when either list is constant
    std::size_t n = 0;
};

// Errors are predicted - measured.
ErrorStats compute_error_stats(const std::vector<double> &predicted, const std::vector<double> &measured);
double pearson_correlation(const std::vector<double> &x, const std::vector<double> &y);

struct TuningSample
{
    double d3d = 1.0;
    double rxp_measured = 0.0;
    double rxp_untuned = 0.0;
};

struct TuningFitOptions
{
    double b_step = 0.5;
    double b_stop = 0.05;
    double b_max = 60.0;
    double b_min = 0.0;
};

struct TuningFit
{
    TuningParams params;
    double std_dev_initial = 0.0;
    double std_dev_final = 0.0;
    int steps = 0;
    std::vector<std::string> warnings;
};

TuningFit fit_tuning(const std::vector<TuningSample> &samples, const TuningFitOptions &options = {});

struct CdfPoint
{
    double value = 0.0;
    double probability = 0.0;
};

struct EmpiricalCdf
{
    std::vector<CdfPoint> steps; // one entry per distinct value, probability right-continuous
    double mean = 0.0;
    double sigma = 0.0; // population standard deviation of the normal fit
};

EmpiricalCdf empirical_cdf(const std::vector<double> &values);

// Measurement CSV with header tx_id,rx_id,x_m,y_m,z_m,sample_dbm. Rows group into traces by (tx_id, rx_id),
// in order of first appearance.
std::vector<RawTrace> read_measurements_csv(std::istream &in, const std::string &name = "measurements");
std::vector<RawTrace> read_measurements_csv(const std::string &path);
void write_measurements_csv(std::ostream &out, const std::vector<RawTrace> &traces);

void write_processed_csv(std::ostream &out, const std::vector<ProcessedSample> &samples);

} // namespace rfplan

#endif
