// SPDX-License-Identifier: Apache-2.0

#include "rfplan/cli/scenario.hpp"

#include "rfplan/error.hpp"
#include "rfplan/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>

namespace rfplan
{

namespace
{

using nlohmann::json;

void check_keys(const json &j, std::initializer_list<const char *> allowed, const std::string &ctx)
{
    if (!j.is_object())
        throw ParseError(ctx + ": expected an object");
    for (const auto &[key, value] : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; }))
            throw ParseError(ctx + ": unknown key '" + key + "'");
}

double number_or(const json &j, const char *key, double fallback, const std::string &ctx)
{
    if (!j.contains(key))
        return fallback;
    const json &v = j.at(key);
    if (!v.is_number())
        throw ParseError(ctx + ": '" + key + "' must be a number");
    return v.get<double>();
}

template <typename Int>
Int integer_or(const json &j, const char *key, Int fallback, const std::string &ctx)
{
    if (!j.contains(key))
        return fallback;
    const json &v = j.at(key);
    if (!v.is_number_integer() || (std::is_unsigned_v<Int> && v.get<long long>() < 0))
        throw ParseError(ctx + ": '" + key + "' must be a " +
                         (std::is_unsigned_v<Int> ? "non-negative " : "") + "integer");
    return v.get<Int>();
}

std::pair<double, double> pair_of(const json &v, const std::string &ctx)
{
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ParseError(ctx + ": expected a 2-element number array");
    return {v[0].get<double>(), v[1].get<double>()};
}

RtConfig parse_rt(const json &j, RtConfig cfg)
{
    const std::string ctx = "propagation.rt";
    check_keys(j,
               {"max_reflections", "max_diffractions", "launch_count", "reception_sphere_alpha",
                "discovery_loss_cap_db", "diffraction_launch_count", "diffraction_prune_db"},
               ctx);
    cfg.max_reflections = integer_or(j, "max_reflections", cfg.max_reflections, ctx);
    cfg.max_diffractions = integer_or(j, "max_diffractions", cfg.max_diffractions, ctx);
    cfg.launch_count = integer_or(j, "launch_count", cfg.launch_count, ctx);
    cfg.reception_sphere_alpha = number_or(j, "reception_sphere_alpha", cfg.reception_sphere_alpha, ctx);
    cfg.discovery_loss_cap_db = number_or(j, "discovery_loss_cap_db", cfg.discovery_loss_cap_db, ctx);
    cfg.diffraction_launch_count = integer_or(j, "diffraction_launch_count", cfg.diffraction_launch_count, ctx);
    cfg.diffraction_prune_db = number_or(j, "diffraction_prune_db", cfg.diffraction_prune_db, ctx);
    return cfg;
}

InfModelParams parse_inf(const json &j)
{
    const std::string ctx = "propagation.inf";
    check_keys(j,
               {"scenario", "los_intercept", "los_slope", "los_freq_coef", "nlos_intercept", "nlos_slope",
                "nlos_freq_coef", "sigma_sf_los", "sigma_sf_nlos"},
               ctx);
    InfModelParams p;
    const std::string scenario = j.value("scenario", std::string("inf-sh"));
    if (scenario == "inf-sh")
        p.scenario = InfScenario::inf_sh;
    else if (scenario == "custom")
        p.scenario = InfScenario::custom;
    else
        throw ParseError(ctx + ": unknown scenario '" + scenario + "'");
    p.los_intercept = number_or(j, "los_intercept", p.los_intercept, ctx);
    p.los_slope = number_or(j, "los_slope", p.los_slope, ctx);
    p.los_freq_coef = number_or(j, "los_freq_coef", p.los_freq_coef, ctx);
    p.nlos_intercept = number_or(j, "nlos_intercept", p.nlos_intercept, ctx);
    p.nlos_slope = number_or(j, "nlos_slope", p.nlos_slope, ctx);
    p.nlos_freq_coef = number_or(j, "nlos_freq_coef", p.nlos_freq_coef, ctx);
    p.sigma_sf_los = number_or(j, "sigma_sf_los", p.sigma_sf_los, ctx);
    p.sigma_sf_nlos = number_or(j, "sigma_sf_nlos", p.sigma_sf_nlos, ctx);
    p.validate();
    return p;
}

GridSpec parse_grid(const json &j)
{
    const std::string ctx = "grid";
    check_keys(j, {"origin", "size", "resolution", "height"}, ctx);
    if (!j.contains("origin") || !j.contains("size"))
        throw ParseError(ctx + ": 'origin' and 'size' are required");
    GridSpec g;
    std::tie(g.x0, g.y0) = pair_of(j.at("origin"), ctx + ".origin");
    std::tie(g.width, g.depth) = pair_of(j.at("size"), ctx + ".size");
    g.resolution = number_or(j, "resolution", g.resolution, ctx);
    g.height = number_or(j, "height", g.height, ctx);
    g.validate();
    return g;
}

PlanningSettings parse_planning(const json &j)
{
    const std::string ctx = "planning";
    check_keys(j,
               {"threshold_dbm", "coverage_target", "confidence", "model_std_dev", "rx_height", "grid_resolution",
                "budget", "rx_antenna", "target_area", "exclude_solids", "occupancy"},
               ctx);
    PlanningSettings s;
    PlanConfig &c = s.config;
    c.rsrp_threshold = number_or(j, "threshold_dbm", c.rsrp_threshold, ctx);
    c.coverage_target = number_or(j, "coverage_target", c.coverage_target, ctx);
    c.confidence_level = number_or(j, "confidence", c.confidence_level, ctx);
    c.model_std_dev = number_or(j, "model_std_dev", c.model_std_dev, ctx);
    c.rx_height = number_or(j, "rx_height", c.rx_height, ctx);
    c.grid_resolution = number_or(j, "grid_resolution", c.grid_resolution, ctx);
    if (j.contains("budget"))
    {
        const json &b = j.at("budget");
        check_keys(b, {"total_tx_power_dbm", "n_prb", "scs_khz"}, ctx + ".budget");
        s.budget.total_tx_power_dbm = number_or(b, "total_tx_power_dbm", s.budget.total_tx_power_dbm, ctx);
        s.budget.n_prb = integer_or(b, "n_prb", s.budget.n_prb, ctx + ".budget");
        s.budget.scs_khz = integer_or(b, "scs_khz", s.budget.scs_khz, ctx + ".budget");
        if (s.budget.n_prb < 1)
            throw ValidationError(ctx + ".budget: n_prb must be >= 1");
    }
    if (j.contains("rx_antenna"))
        s.rx_antenna = parse_antenna(j.at("rx_antenna"));
    if (j.contains("target_area"))
    {
        const json &poly = j.at("target_area");
        if (!poly.is_array())
            throw ParseError(ctx + ".target_area: expected a list of [x, y] points");
        for (const auto &v : poly)
        {
            const auto [x, y] = pair_of(v, ctx + ".target_area");
            s.target_area.push_back({x, y, 0.0});
        }
        if (s.target_area.size() < 3)
            throw ValidationError(ctx + ".target_area: polygon needs at least 3 points");
    }
    s.exclude_solids = j.value("exclude_solids", s.exclude_solids);
    s.occupancy = number_or(j, "occupancy", s.occupancy, ctx);
    if (!(s.occupancy >= 0.0 && s.occupancy <= 1.0))
        throw ValidationError(ctx + ": occupancy must be in [0, 1]");
    c.validate();
    return s;
}

MeasurementSettings parse_measurement(const json &j)
{
    const std::string ctx = "measurement";
    check_keys(j, {"tx_power_dbm", "rx_antenna", "min_samples", "min_span_db", "max_span_db", "occupancy"}, ctx);
    MeasurementSettings s;
    s.tx_power_dbm = number_or(j, "tx_power_dbm", s.tx_power_dbm, ctx);
    if (j.contains("rx_antenna"))
        s.rx_antenna = parse_antenna(j.at("rx_antenna"));
    s.filter.min_samples = integer_or(j, "min_samples", s.filter.min_samples, ctx);
    s.filter.min_span_db = number_or(j, "min_span_db", s.filter.min_span_db, ctx);
    s.filter.max_span_db = number_or(j, "max_span_db", s.filter.max_span_db, ctx);
    if (!(s.filter.min_span_db <= s.filter.max_span_db))
        throw ValidationError(ctx + ": min_span_db exceeds max_span_db");
    if (j.contains("occupancy"))
    {
        s.occupancy = number_or(j, "occupancy", 0.0, ctx);
        if (!(*s.occupancy >= 0.0 && *s.occupancy <= 1.0))
            throw ValidationError(ctx + ": occupancy must be in [0, 1]");
    }
    return s;
}

MonteCarloSettings parse_montecarlo(const json &j)
{
    const std::string ctx = "montecarlo";
    check_keys(j, {"points", "tx", "duplicates"}, ctx);
    MonteCarloSettings s;
    if (j.contains("points"))
    {
        for (const auto &p : j.at("points"))
        {
            check_keys(p, {"d3d_m", "los"}, ctx + ".points");
            SfPoint pt;
            pt.d3d_m = number_or(p, "d3d_m", pt.d3d_m, ctx + ".points");
            pt.los = p.value("los", pt.los);
            if (!(pt.d3d_m >= 1.0))
                throw ValidationError(ctx + ".points: d3d_m must be >= 1");
            s.points.push_back(pt);
        }
    }
    s.tx = j.value("tx", s.tx);
    s.duplicates = integer_or(j, "duplicates", s.duplicates, ctx);
    if (s.duplicates < 1)
        throw ValidationError(ctx + ": duplicates must be >= 1");
    return s;
}

} // namespace

TuningParams parse_tuning(const json &j)
{
    check_keys(j, {"A", "B"}, "tuning");
    TuningParams t;
    t.A = number_or(j, "A", t.A, "tuning");
    t.B = number_or(j, "B", t.B, "tuning");
    if (!std::isfinite(t.A) || !std::isfinite(t.B))
        throw ValidationError("tuning: A and B must be finite");
    return t;
}

TuningParams load_tuning(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open tuning file " + path.string());
    try
    {
        const json doc = json::parse(in);
        return parse_tuning(doc.contains("tuning") ? doc.at("tuning") : doc);
    }
    catch (const json::exception &e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

json tuning_to_json(const TuningParams &t)
{
    return {{"A", t.A}, {"B", t.B}};
}

Scenario parse_scenario(const json &doc, const std::filesystem::path &base_dir)
{
    Scenario s;
    s.scene = parse_scene(doc, base_dir);
    s.rt.frequency_ghz = s.scene.frequency_ghz;
    try
    {
        if (doc.contains("material_swaps"))
        {
            for (const auto &entry : doc.at("material_swaps"))
            {
                check_keys(entry, {"tag", "material"}, "material_swaps");
                MaterialSwap swap{entry.at("tag").get<std::string>(), entry.at("material").get<std::string>()};
                if (!s.scene.materials.count(swap.material))
                    throw ValidationError("material_swaps: unknown material '" + swap.material + "'");
                const bool matched = std::any_of(s.scene.solids.begin(), s.scene.solids.end(),
                                                 [&](const Solid &solid) { return solid.has_tag(swap.tag); });
                if (!matched)
                    throw ValidationError("material_swaps: no solid tagged '" + swap.tag + "'");
                s.material_swaps.push_back(swap);
            }
        }
        if (doc.contains("propagation"))
        {
            const json &p = doc.at("propagation");
            check_keys(p, {"model", "rt", "tuning", "inf"}, "propagation");
            if (p.contains("model"))
                s.model = parse_backend(p.at("model").get<std::string>());
            if (p.contains("rt"))
                s.rt = parse_rt(p.at("rt"), s.rt);
            if (p.contains("tuning"))
                s.tuning = parse_tuning(p.at("tuning"));
            if (p.contains("inf"))
                s.inf = parse_inf(p.at("inf"));
        }
        s.rt.validate();
        if (doc.contains("grid"))
            s.grid = parse_grid(doc.at("grid"));
        if (doc.contains("planning"))
            s.planning = parse_planning(doc.at("planning"));
        if (doc.contains("measurement"))
            s.measurement = parse_measurement(doc.at("measurement"));
        if (doc.contains("montecarlo"))
            s.montecarlo = parse_montecarlo(doc.at("montecarlo"));
    }
    catch (const json::exception &e)
    {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open scenario file " + path.string());
    json doc;
    try
    {
        doc = json::parse(in);
    }
    catch (const json::parse_error &e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
    Scenario s = parse_scenario(doc, path.parent_path());
    s.path = path;
    return s;
}

Scene prepare_scene(const Scenario &scenario, std::optional<double> occupancy, std::uint64_t seed)
{
    Scene scene = scenario.scene;
    if (occupancy && !(*occupancy >= 0.0 && *occupancy <= 1.0))
        throw ValidationError("occupancy must be in [0, 1]");
    for (auto &r : scene.racks)
    {
        r.fill_seed = stream_seed(seed, r.fill_seed);
        if (occupancy)
            r.occupancy = *occupancy;
    }
    scene = expand_racks(scene);
    for (const auto &swap : scenario.material_swaps)
        scene = swap_material(
            scene, [&](const Solid &s) { return s.has_tag(swap.tag); }, scene.material(swap.material));
    return scene;
}

} // namespace rfplan
