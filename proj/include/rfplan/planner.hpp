// SPDX-License-Identifier: Apache-2.0
//
// SS-RSRP link budget, coverage rates and minimum-cardinality access-point selection.

#ifndef RFPLAN_PLANNER_HPP
#define RFPLAN_PLANNER_HPP

#include "rfplan/geometry.hpp"
#include "rfplan/grid.hpp"
#include "rfplan/inf.hpp"
#include "rfplan/rt.hpp"
#include "rfplan/scene.hpp"

#include <map>
#include <string>
#include <vector>

namespace rfplan
{

struct LinkBudget
{
    double total_tx_power_dbm = 30.0;
    int n_prb = 152;
    int scs_khz = 30;

    double epre() const;
};

// Total power spread over 12 subcarriers per PRB.
double compute_epre(const LinkBudget &budget);

// One-sided Gaussian margin z(confidence) * std_dev.
double confidence_margin(double std_dev, double confidence);

// Fraction of masked pixels with value >= threshold.
double coverage_rate(const CoverageGrid &grid, double threshold);

CoverageGrid with_margin(const CoverageGrid &grid, double margin_db);

enum class Backend
{
    rt,
    inf_sh
};

std::string to_string(Backend backend);
Backend parse_backend(const std::string &name);

struct BackendConfig
{
    Backend kind = Backend::rt;
    RtConfig rt;
    TuningParams tuning;
    InfModelParams inf;
    double frequency_ghz = 3.7;
    unsigned threads = 1;
};

struct PlanConfig
{
    double rsrp_threshold = -100.0;
    double coverage_target = 0.95;
    double confidence_level = 0.95;
    double model_std_dev = 6.81;
    double rx_height = 1.5;
    double grid_resolution = 0.5;

    void validate() const;
};

// Pixels inside the xy polygon (all pixels when it is empty), optionally excluding those inside solids.
std::vector<std::uint8_t> target_mask(const GridSpec &grid, const std::vector<Vec3> &polygon,
                                      const Geometry *exclude_solids = nullptr);

// Per-pixel RSRP in dBm: EPRE + tx gain + channel gain + rx gain.
CoverageGrid rsrp_grid(const Geometry &geometry, const Node &site, const LinkBudget &budget,
                       const BackendConfig &backend, const GridSpec &grid, const AntennaPattern &rx_antenna);

struct Deployment
{
    std::vector<std::string> selected; // in order of selection
    std::map<std::string, CoverageGrid> per_site_grids;
    CoverageGrid best_server_grid; // without margin
    double achieved_coverage = 0.0; // with margin
    double margin_db = 0.0;
    bool feasible = false;
    std::vector<double> coverage_history; // achieved coverage after each greedy step
};

// Pixel-wise maximum. All grids must share the spec; the mask is taken from the first.
CoverageGrid best_server(const std::vector<const CoverageGrid *> &grids);

using SiteGrids = std::map<std::string, CoverageGrid>;

SiteGrids compute_site_grids(const Geometry &geometry, const std::vector<Node> &candidates,
                             const LinkBudget &budget, const BackendConfig &backend, const GridSpec &grid,
                             const std::vector<std::uint8_t> &mask, const AntennaPattern &rx_antenna);

// Greedy: add the site covering the most new pixels (lowest id on ties) until the target is met.
Deployment select_from_grids(const SiteGrids &grids, const PlanConfig &cfg);

// Smallest feasible subset, lexicographic on site ids within a cardinality. At most 12 candidates.
Deployment brute_force_from_grids(const SiteGrids &grids, const PlanConfig &cfg);

Deployment select_aps(const Geometry &geometry, const std::vector<Node> &candidates, const LinkBudget &budget,
                      const PlanConfig &cfg, const BackendConfig &backend, const GridSpec &grid,
                      const std::vector<std::uint8_t> &mask, const AntennaPattern &rx_antenna);

Deployment brute_force_select(const Geometry &geometry, const std::vector<Node> &candidates,
                              const LinkBudget &budget, const PlanConfig &cfg, const BackendConfig &backend,
                              const GridSpec &grid, const std::vector<std::uint8_t> &mask,
                              const AntennaPattern &rx_antenna);

} // namespace rfplan

#endif
