// SPDX-License-Identifier: Apache-2.0

#include "rfplan/inf.hpp"

#include "rfplan/error.hpp"
#include "rfplan/parallel.hpp"
#include "rfplan/random.hpp"

#include <cmath>
#include <random>

namespace rfplan
{

namespace
{

void check_domain(double d3d_m, double fc_ghz)
{
    if (!(d3d_m >= 1.0))
        throw DomainError("InF path loss: d3d below 1 m is outside the model validity");
    if (!(fc_ghz > 0.0))
        throw DomainError("InF path loss: frequency must be positive");
}

} // namespace

void InfModelParams::validate() const
{
    if (!(sigma_sf_los > 0.0) || !(sigma_sf_nlos > 0.0))
        throw ValidationError("inf: shadow-fading sigma must be positive");
    if (!(los_slope > 0.0) || !(nlos_slope > 0.0))
        throw ValidationError("inf: distance slopes must be positive");
    if (scenario == InfScenario::inf_sh && !(*this == InfModelParams{}))
        throw ValidationError("inf: InF-SH preset coefficients cannot be overridden; use scenario 'custom'");
}

double pl_los(double d3d_m, double fc_ghz, const InfModelParams &p)
{
    check_domain(d3d_m, fc_ghz);
    return p.los_intercept + p.los_slope * std::log10(d3d_m) + p.los_freq_coef * std::log10(fc_ghz);
}

double pl_nlos(double d3d_m, double fc_ghz, const InfModelParams &p)
{
    check_domain(d3d_m, fc_ghz);
    const double nlos = p.nlos_intercept + p.nlos_slope * std::log10(d3d_m) + p.nlos_freq_coef * std::log10(fc_ghz);
    return std::max(nlos, pl_los(d3d_m, fc_ghz, p));
}

double pl_inf(double d3d_m, double fc_ghz, bool los, const InfModelParams &p)
{
    return los ? pl_los(d3d_m, fc_ghz, p) : pl_nlos(d3d_m, fc_ghz, p);
}

std::vector<double> sample_shadow_fading(const std::vector<SfPoint> &points, double fc_ghz,
                                         const InfModelParams &params, const SfSampler &sampler)
{
    if (sampler.duplicates_per_point < 1)
        throw ValidationError("sf sampler: duplicates_per_point must be at least 1");
    const std::size_t dup = sampler.duplicates_per_point;
    std::vector<double> out(points.size() * dup);
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        const double mean = pl_inf(points[i].d3d_m, fc_ghz, points[i].los, params);
        const double sigma = points[i].los ? params.sigma_sf_los : params.sigma_sf_nlos;
        std::mt19937_64 rng(stream_seed(sampler.seed, i));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t k = 0; k < dup; ++k)
            out[i * dup + k] = mean + sigma * normal(rng);
    }
    return out;
}

std::vector<double> predict_inf_gain(const Geometry &geometry, const Vec3 &tx, const std::vector<Vec3> &receivers,
                                     double fc_ghz, const InfModelParams &params, unsigned threads)
{
    std::vector<double> out(receivers.size());
    parallel_for(receivers.size(), threads, [&](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t i = begin; i < end; ++i)
        {
            const double d = std::max(1.0, distance(tx, receivers[i]));
            const bool los = distance(tx, receivers[i]) < 1e-12 || is_los(geometry, tx, receivers[i]);
            out[i] = -pl_inf(d, fc_ghz, los, params);
        }
    });
    return out;
}

CoverageGrid predict_grid_with_visibility(const Geometry &geometry, const Vec3 &tx, const GridSpec &grid,
                                          double fc_ghz, const InfModelParams &params, unsigned threads)
{
    CoverageGrid out(grid);
    out.values = predict_inf_gain(geometry, tx, out.points(), fc_ghz, params, threads);
    return out;
}

} // namespace rfplan
