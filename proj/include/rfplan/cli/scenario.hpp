// SPDX-License-Identifier: Apache-2.0
//
// Scenario document: a scene plus propagation, grid, planning and measurement settings.

#ifndef RFPLAN_CLI_SCENARIO_HPP
#define RFPLAN_CLI_SCENARIO_HPP

#include "rfplan/calibration.hpp"
#include "rfplan/grid.hpp"
#include "rfplan/inf.hpp"
#include "rfplan/planner.hpp"
#include "rfplan/rt.hpp"
#include "rfplan/scene.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rfplan
{

struct MaterialSwap
{
    std::string tag;      // solids carrying this tag
    std::string material; // catalog name
};

struct PlanningSettings
{
    PlanConfig config;
    LinkBudget budget;
    AntennaPattern rx_antenna{AntennaModel::half_wave_dipole, kHalfWaveDipoleGainDbi};
    std::vector<Vec3> target_area; // xy polygon, empty = whole grid
    bool exclude_solids = true;     // drop pixels inside solids from the target area
    double occupancy = 1.0;         // rack occupancy for planning runs
};

struct MeasurementSettings
{
    double tx_power_dbm = 20.0;
    AntennaPattern rx_antenna;
    FastFadingFilter filter;
    std::optional<double> occupancy; // rack occupancy during the campaign, default as in the scene
};

struct MonteCarloSettings
{
    std::vector<SfPoint> points;   // explicit points; empty = grid pixels seen from `tx`
    std::string tx;
    std::size_t duplicates = 100;
};

struct Scenario
{
    std::filesystem::path path;
    Scene scene; // racks not yet expanded
    std::vector<MaterialSwap> material_swaps;
    Backend model = Backend::rt;
    RtConfig rt;
    TuningParams tuning;
    InfModelParams inf;
    std::optional<GridSpec> grid;
    PlanningSettings planning;
    MeasurementSettings measurement;
    MonteCarloSettings montecarlo;
};

Scenario parse_scenario(const nlohmann::json &doc, const std::filesystem::path &base_dir = {});
Scenario load_scenario(const std::filesystem::path &path);

TuningParams parse_tuning(const nlohmann::json &j);
TuningParams load_tuning(const std::filesystem::path &path);
nlohmann::json tuning_to_json(const TuningParams &t);

// Rack fill seeds derived from the run seed, every rack at the given occupancy (unchanged when empty),
// racks expanded and material swaps applied.
Scene prepare_scene(const Scenario &scenario, std::optional<double> occupancy, std::uint64_t seed);

} // namespace rfplan

#endif
