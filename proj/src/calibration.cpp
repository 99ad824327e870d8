// SPDX-License-Identifier: Apache-2.0

#include "rfplan/calibration.hpp"

#include "rfplan/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace rfplan
{

namespace
{

double mean_of(const std::vector<double> &v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double> &v)
{
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v)
        acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

std::vector<std::string> split_csv(const std::string &line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
    {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

double parse_number(const std::string &text, const std::string &where)
{
    std::size_t used = 0;
    double v = 0.0;
    try
    {
        v = std::stod(text, &used);
    }
    catch (const std::exception &)
    {
        throw ParseError(where + ": '" + text + "' is not a number");
    }
    if (used != text.size() || !std::isfinite(v))
        throw ParseError(where + ": '" + text + "' is not a finite number");
    return v;
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double std_for(const std::vector<TuningSample> &samples, double b)
{
    std::vector<double> e;
    e.reserve(samples.size());
    for (const auto &s : samples)
        e.push_back(s.rxp_untuned - (b - 20.0) * std::log10(s.d3d) - s.rxp_measured);
    return population_std(e);
}

} // namespace

ProcessedSample filter_fast_fading(const RawTrace &trace, const FastFadingFilter &filter)
{
    ProcessedSample out;
    out.tx_id = trace.tx_id;
    out.rx_id = trace.rx_id;
    out.position = trace.position;
    if (trace.samples.empty())
        return out;
    double linear = 0.0;
    for (double s : trace.samples)
        linear += std::pow(10.0, s / 10.0);
    out.rxp_avg_dbm = 10.0 * std::log10(linear / static_cast<double>(trace.samples.size()));
    const auto [lo, hi] = std::minmax_element(trace.samples.begin(), trace.samples.end());
    const double span = *hi - *lo;
    out.valid = trace.samples.size() >= filter.min_samples && span >= filter.min_span_db &&
                span <= filter.max_span_db;
    if (!out.valid)
        out.rxp_avg_dbm = std::numeric_limits<double>::quiet_NaN();
    return out;
}

ProcessedSample filter_fast_fading(const RawTrace &trace, std::size_t min_samples)
{
    FastFadingFilter f;
    f.min_samples = min_samples;
    f.min_span_db = 0.0;
    f.max_span_db = std::numeric_limits<double>::infinity();
    return filter_fast_fading(trace, f);
}

double pl_from_measurement(const ProcessedSample &sample, double tx_power_dbm, double tx_gain_dbi, double rx_gain_dbi)
{
    if (!sample.valid)
        throw DomainError("pl_from_measurement: sample '" + sample.rx_id + "' is invalid");
    return tx_power_dbm + tx_gain_dbi + rx_gain_dbi - sample.rxp_avg_dbm;
}

double pearson_correlation(const std::vector<double> &x, const std::vector<double> &y)
{
    if (x.size() != y.size())
        throw DomainError("correlation: length mismatch");
    if (x.size() < 2)
        throw DomainError("correlation: need at least 2 values");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ErrorStats compute_error_stats(const std::vector<double> &predicted, const std::vector<double> &measured)
{
    if (predicted.size() != measured.size())
        throw DomainError("error stats: predicted and measured differ in length");
    if (predicted.size() < 2)
        throw DomainError("error stats: need at least 2 pairs");
    std::vector<double> e(predicted.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = predicted[i] - measured[i];
    ErrorStats s;
    s.n = e.size();
    s.mean_error = mean_of(e);
    s.std_dev = population_std(e);
    double sq = 0.0;
    for (double v : e)
        sq += v * v;
    s.rmse = std::sqrt(sq / static_cast<double>(e.size()));
    s.correlation = pearson_correlation(predicted, measured);
    return s;
}

TuningFit fit_tuning(const std::vector<TuningSample> &samples, const TuningFitOptions &options)
{
    if (samples.empty())
        throw DomainError("fit_tuning: no samples");
    if (!(options.b_step > 0.0) || !(options.b_stop >= 0.0) || !(options.b_min <= 20.0 && 20.0 <= options.b_max))
        throw ValidationError("fit_tuning: invalid search options");
    double d_min = std::numeric_limits<double>::infinity();
    double d_max = 0.0;
    for (const auto &s : samples)
    {
        if (!(s.d3d > 0.0))
            throw DomainError("fit_tuning: distances must be positive");
        d_min = std::min(d_min, s.d3d);
        d_max = std::max(d_max, s.d3d);
    }

    TuningFit fit;
    if (samples.size() < 10)
        fit.warnings.push_back("fewer than 10 samples");
    if (d_max < 10.0 * d_min)
        fit.warnings.push_back("distances span less than one decade");

    double b = 20.0;
    double s = std_for(samples, b);
    fit.std_dev_initial = s;

    auto improves = [&](double candidate, double &s_next) {
        if (candidate < options.b_min - 1e-12 || candidate > options.b_max + 1e-12)
            return false;
        s_next = std_for(samples, candidate);
        return s - s_next >= options.b_stop;
    };

    double direction = 0.0;
    double s_next = 0.0;
    if (improves(b + options.b_step, s_next))
        direction = 1.0;
    else if (improves(b - options.b_step, s_next))
        direction = -1.0;
    while (direction != 0.0)
    {
        b += direction * options.b_step;
        s = s_next;
        ++fit.steps;
        if (!improves(b + direction * options.b_step, s_next))
            break;
    }

    double a = 0.0;
    for (const auto &smp : samples)
        a += smp.rxp_untuned - (b - 20.0) * std::log10(smp.d3d) - smp.rxp_measured;
    fit.params = {a / static_cast<double>(samples.size()), b};
    fit.std_dev_final = s;
    return fit;
}

EmpiricalCdf empirical_cdf(const std::vector<double> &values)
{
    if (values.empty())
        throw DomainError("empirical_cdf: no values");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    EmpiricalCdf cdf;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
    {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i])
            continue;
        cdf.steps.push_back({sorted[i], static_cast<double>(i + 1) / n});
    }
    cdf.mean = mean_of(values);
    cdf.sigma = population_std(values);
    return cdf;
}

std::vector<RawTrace> read_measurements_csv(std::istream &in, const std::string &name)
{
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(name + ": empty file");
    const std::vector<std::string> expected{"tx_id", "rx_id", "x_m", "y_m", "z_m", "sample_dbm"};
    if (split_csv(line) != expected)
        throw ParseError(name + ": header must be tx_id,rx_id,x_m,y_m,z_m,sample_dbm");

    std::vector<RawTrace> traces;
    std::map<std::pair<std::string, std::string>, std::size_t> lookup;
    std::size_t row = 1;
    while (std::getline(in, line))
    {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto cells = split_csv(line);
        const std::string where = name + " row " + std::to_string(row);
        if (cells.size() != expected.size())
            throw ParseError(where + ": expected 6 columns, found " + std::to_string(cells.size()));
        if (cells[0].empty() || cells[1].empty())
            throw ParseError(where + ": empty tx_id or rx_id");
        const Vec3 pos{parse_number(cells[2], where), parse_number(cells[3], where), parse_number(cells[4], where)};
        const double sample = parse_number(cells[5], where);
        const auto key = std::make_pair(cells[0], cells[1]);
        auto it = lookup.find(key);
        if (it == lookup.end())
        {
            it = lookup.emplace(key, traces.size()).first;
            RawTrace t;
            t.tx_id = cells[0];
            t.rx_id = cells[1];
            t.position = pos;
            t.first_row = row;
            traces.push_back(std::move(t));
        }
        RawTrace &t = traces[it->second];
        if (distance(t.position, pos) > 1e-6)
            throw ParseError(where + ": position of rx '" + t.rx_id + "' changes within its trace");
        t.samples.push_back(sample);
    }
    return traces;
}

std::vector<RawTrace> read_measurements_csv(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    return read_measurements_csv(in, path);
}

void write_measurements_csv(std::ostream &out, const std::vector<RawTrace> &traces)
{
    out << "tx_id,rx_id,x_m,y_m,z_m,sample_dbm\n";
    for (const auto &t : traces)
        for (double s : t.samples)
            out << t.tx_id << ',' << t.rx_id << ',' << fmt(t.position.x) << ',' << fmt(t.position.y) << ','
                << fmt(t.position.z) << ',' << fmt(s) << '\n';
}

void write_processed_csv(std::ostream &out, const std::vector<ProcessedSample> &samples)
{
    out << "tx_id,rx_id,x_m,y_m,z_m,rxp_avg_dbm,valid\n";
    for (const auto &s : samples)
        out << s.tx_id << ',' << s.rx_id << ',' << fmt(s.position.x) << ',' << fmt(s.position.y) << ','
            << fmt(s.position.z) << ',' << (s.valid ? fmt(s.rxp_avg_dbm) : std::string()) << ','
            << (s.valid ? 1 : 0) << '\n';
}

} // namespace rfplan
