// SPDX-License-Identifier: Apache-2.0
//
// 3GPP TR 38.901 indoor-factory path loss with deterministic LoS classification.

#ifndef RFPLAN_INF_HPP
#define RFPLAN_INF_HPP

#include "rfplan/geometry.hpp"
#include "rfplan/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rfplan
{

enum class InfScenario
{
    inf_sh,
    custom
};

struct InfModelParams
{
    InfScenario scenario = InfScenario::inf_sh;
    double los_intercept = 31.84;
    double los_slope = 21.5;
    double los_freq_coef = 19.0;
    double nlos_intercept = 32.4;
    double nlos_slope = 23.0;
    double nlos_freq_coef = 20.0;
    double sigma_sf_los = 4.3;
    double sigma_sf_nlos = 5.9;

    static InfModelParams inf_sh() { return {}; }
    void validate() const;

    bool operator==(const InfModelParams &) const = default;
};

double pl_los(double d3d_m, double fc_ghz, const InfModelParams &params = {});
double pl_nlos(double d3d_m, double fc_ghz, const InfModelParams &params = {});
double pl_inf(double d3d_m, double fc_ghz, bool los, const InfModelParams &params = {});

struct SfSampler
{
    std::uint64_t seed = 42;
    std::size_t duplicates_per_point = 100;
};

struct SfPoint
{
    double d3d_m = 1.0;
    bool los = true;
};

// Point-major: samples for point i occupy [i * duplicates, (i + 1) * duplicates). Each point has its own stream.
std::vector<double> sample_shadow_fading(const std::vector<SfPoint> &points, double fc_ghz,
                                         const InfModelParams &params, const SfSampler &sampler);

// Mean channel gain -PL per receiver, LoS decided by the geometry. Distances below 1 m are clamped to 1 m.
std::vector<double> predict_inf_gain(const Geometry &geometry, const Vec3 &tx, const std::vector<Vec3> &receivers,
                                     double fc_ghz, const InfModelParams &params, unsigned threads = 1);

CoverageGrid predict_grid_with_visibility(const Geometry &geometry, const Vec3 &tx, const GridSpec &grid,
                                          double fc_ghz, const InfModelParams &params, unsigned threads = 1);

} // namespace rfplan

#endif
