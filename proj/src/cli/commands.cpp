// SPDX-License-Identifier: Apache-2.0

#include "rfplan/cli/commands.hpp"

#include "rfplan/calibration.hpp"
#include "rfplan/cli/scenario.hpp"
#include "rfplan/error.hpp"
#include "rfplan/geometry.hpp"
#include "rfplan/inf.hpp"
#include "rfplan/parallel.hpp"
#include "rfplan/planner.hpp"
#include "rfplan/random.hpp"
#include "rfplan/raster_io.hpp"
#include "rfplan/rt.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

namespace rfplan
{

namespace
{

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kTableThresholds[] = {-100.0, -90.0, -80.0, -70.0};

struct Options
{
    std::string scenario;
    std::string out;
    std::uint64_t seed = 42;
    unsigned threads = default_thread_count();
    std::string backend;
    double grid_res = 0.0;
    double rx_height = 0.0;
    double occupancy = 0.0;
    std::string tuning;

    // Subcommand specific.
    std::string tx;
    std::string rx;
    std::string quantity = "channel_gain";
    std::string measurements;
    std::size_t duplicates = 0;
    double true_a = -7.7;
    double true_b = 26.0;
    double noise_db = 2.0;
    std::size_t samples_per_trace = 50;
};

// Flags given explicitly on the command line, recorded in the manifest.
json explicit_overrides(const CLI::App &cmd)
{
    json out = json::object();
    for (const CLI::Option *opt : cmd.get_options())
    {
        if (opt->get_name() == "--help" || opt->count() == 0)
            continue;
        const auto values = opt->results();
        std::string name = opt->get_name();
        while (!name.empty() && name.front() == '-')
            name.erase(name.begin());
        out[name] = values.size() == 1 ? json(values.front()) : json(values);
    }
    out.erase("scenario");
    out.erase("out");
    out.erase("seed");
    return out;
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void ensure_dir(const std::string &dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory '" + dir + "'");
}

void write_text(const fs::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path &path, const json &doc)
{
    write_text(path, doc.dump(2) + "\n");
}

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json stats_json(const ErrorStats &s)
{
    return {{"rmse_db", s.rmse},
            {"mean_error_db", s.mean_error},
            {"std_dev_db", s.std_dev},
            {"correlation", number_or_null(s.correlation)},
            {"n", s.n}};
}

class Command
{
public:
    Command(const Options &opt, const CLI::App &app) : opt_(opt), app_(app) {}

    bool given(const std::string &flag) const
    {
        const CLI::Option *o = app_.get_option_no_throw(flag);
        return o && o->count() > 0;
    }

    const Scenario &scenario()
    {
        if (!scenario_)
        {
            if (opt_.scenario.empty())
                throw ValidationError("--scenario is required");
            scenario_ = load_scenario(opt_.scenario);
        }
        return *scenario_;
    }

    Backend backend()
    {
        return opt_.backend.empty() ? scenario().model : parse_backend(opt_.backend);
    }

    std::optional<double> occupancy_override(std::optional<double> fallback) const
    {
        if (given("--occupancy"))
            return opt_.occupancy;
        return fallback;
    }

    TuningParams tuning()
    {
        return opt_.tuning.empty() ? scenario().tuning : load_tuning(opt_.tuning);
    }

    RtConfig rt_config()
    {
        RtConfig cfg = scenario().rt;
        cfg.threads = opt_.threads;
        return cfg;
    }

    BackendConfig backend_config(Backend kind)
    {
        BackendConfig b;
        b.kind = kind;
        b.rt = rt_config();
        b.tuning = tuning();
        b.inf = scenario().inf;
        b.frequency_ghz = scenario().scene.frequency_ghz;
        b.threads = opt_.threads;
        return b;
    }

    // Grid section of the scenario; resolution and height fall back to the section's own values.
    GridSpec grid(std::optional<double> resolution = std::nullopt, std::optional<double> height = std::nullopt)
    {
        if (!scenario().grid)
            throw ValidationError("scenario has no 'grid' section");
        GridSpec g = *scenario().grid;
        g.resolution = given("--grid-res") ? opt_.grid_res : resolution.value_or(g.resolution);
        g.height = given("--rx-height") ? opt_.rx_height : height.value_or(g.height);
        g.validate();
        return g;
    }

    const Node &node(const Scene &scene, const std::string &id, const char *what)
    {
        try
        {
            return scene.node(id);
        }
        catch (const Error &)
        {
            throw ValidationError(std::string("unknown ") + what + " node '" + id + "'");
        }
    }

    const Node &tx_node(const Scene &scene)
    {
        if (!opt_.tx.empty())
            return node(scene, opt_.tx, "tx");
        const auto txs = scene.nodes_with_role(NodeRole::tx);
        if (txs.empty())
            throw ValidationError("scenario has no tx node; pass --tx");
        return *txs.front();
    }

    std::string out_dir()
    {
        if (opt_.out.empty())
            throw ValidationError("--out is required");
        ensure_dir(opt_.out);
        return opt_.out;
    }

    void write_manifest(const std::string &dir, const std::string &command, const json &extra = json::object())
    {
        json m;
        m["command"] = command;
        m["scenario_path"] = opt_.scenario;
        m["overrides"] = explicit_overrides(app_);
        m["seed"] = opt_.seed;
        m["tool_version"] = tool_version();
        m["timestamp"] = utc_timestamp();
        for (const auto &[k, v] : extra.items())
            m[k] = v;
        write_json(fs::path(dir) / "manifest.json", m);
    }

private:
    const Options &opt_;
    const CLI::App &app_;
    std::optional<Scenario> scenario_;
};

int cmd_validate(Command &c, const Options &opt, std::ostream &out)
{
    const Scenario &s = c.scenario();
    const Scene scene = prepare_scene(s, c.occupancy_override(std::nullopt), opt.seed);
    const Geometry geometry(scene);
    std::size_t slot_boxes = 0;
    for (const auto &r : s.scene.racks)
        slot_boxes += static_cast<std::size_t>(r.filled_count());
    out << "scenario " << opt.scenario << ": valid\n";
    out << "solids " << s.scene.solids.size() << ", racks " << s.scene.racks.size() << " (" << slot_boxes
        << " slot boxes)\n";
    out << "facets " << geometry.facets().size() << "\n";
    out << "wedges " << geometry.wedges().size() << "\n";
    out << "nodes tx " << s.scene.nodes_with_role(NodeRole::tx).size() << ", rx "
        << s.scene.nodes_with_role(NodeRole::rx).size() << ", candidate-site "
        << s.scene.nodes_with_role(NodeRole::candidate_site).size() << "\n";
    return kExitOk;
}

int cmd_trace(Command &c, const Options &opt, std::ostream &out)
{
    const Scenario &s = c.scenario();
    const Scene scene = prepare_scene(s, c.occupancy_override(std::nullopt), opt.seed);
    if (opt.rx.empty())
        throw ValidationError("--rx is required");
    const Node &tx = c.tx_node(scene);
    const Node &rx = c.node(scene, opt.rx, "rx");
    const Geometry geometry(scene);
    const RtConfig cfg = c.rt_config();
    const auto paths = trace_paths(geometry, tx.position, rx.position, cfg);

    json doc;
    doc["tx"] = tx.id;
    doc["rx"] = rx.id;
    doc["frequency_ghz"] = cfg.frequency_ghz;
    doc["distance_m"] = distance(tx.position, rx.position);
    doc["channel_gain_db"] = number_or_null(aggregate_gain(paths));
    doc["path_count"] = paths.size();
    doc["paths"] = paths_to_json(paths, geometry);
    if (opt.out.empty())
    {
        out << doc.dump(2) << "\n";
        return kExitOk;
    }
    const std::string dir = c.out_dir();
    write_json(fs::path(dir) / "trace.json", doc);
    c.write_manifest(dir, "trace");
    out << "traced " << paths.size() << " paths " << tx.id << " -> " << rx.id << "\n";
    return kExitOk;
}

int cmd_coverage(Command &c, const Options &opt, std::ostream &out)
{
    if (opt.quantity != "channel_gain" && opt.quantity != "rsrp")
        throw ValidationError("--quantity must be channel_gain or rsrp");
    const Scenario &s = c.scenario();
    const Backend kind = c.backend();
    const Scene scene = prepare_scene(s, c.occupancy_override(std::nullopt), opt.seed);
    const Node &tx = c.tx_node(scene);
    const GridSpec spec = c.grid();
    const Geometry geometry(scene);
    const BackendConfig backend = c.backend_config(kind);
    const std::string dir = c.out_dir();

    CoverageGrid grid;
    if (opt.quantity == "rsrp")
        grid = rsrp_grid(geometry, tx, s.planning.budget, backend, spec, s.planning.rx_antenna);
    else if (kind == Backend::rt)
        grid = predict_grid(geometry, tx.position, spec, backend.rt, backend.tuning);
    else
        grid = predict_grid_with_visibility(geometry, tx.position, spec, backend.frequency_ghz, backend.inf,
                                            backend.threads);

    grid.mask = target_mask(spec, {}, &geometry);
    const std::string stem = opt.quantity + "_" + tx.id + "_" + to_string(kind);
    write_raster_set(dir, stem, grid, opt.quantity);
    c.write_manifest(dir, "coverage", {{"outputs", {stem + ".csv", stem + ".pgm", stem + ".json"}}});
    std::size_t covered = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        covered += grid.mask[i] && std::isfinite(grid.values[i]) ? 1 : 0;
    out << "coverage " << to_string(kind) << " " << tx.id << ": " << grid.spec.nx() << "x" << grid.spec.ny()
        << " pixels, " << grid.masked_count() << " outside solids, " << covered << " with a prediction -> "
        << stem << ".pgm\n";
    return kExitOk;
}

ErrorStats safe_stats(const std::vector<double> &predicted, const std::vector<double> &measured)
{
    if (predicted.size() < 2)
        return ErrorStats{std::nan(""), std::nan(""), std::nan(""), std::nan(""), predicted.size()};
    return compute_error_stats(predicted, measured);
}

json safe_stats_json(const std::vector<double> &predicted, const std::vector<double> &measured)
{
    if (predicted.size() < 2)
        return {{"n", predicted.size()}};
    return stats_json(compute_error_stats(predicted, measured));
}

int cmd_calibrate(Command &c, const Options &opt, std::ostream &out)
{
    if (opt.measurements.empty())
        throw ValidationError("--measurements is required");
    const Scenario &s = c.scenario();
    const MeasurementSettings &ms = s.measurement;
    const Scene scene = prepare_scene(s, c.occupancy_override(ms.occupancy), opt.seed);
    const Geometry geometry(scene);
    const RtConfig cfg = c.rt_config();
    const std::vector<RawTrace> traces = read_measurements_csv(opt.measurements);
    const std::string csv_name = fs::path(opt.measurements).filename().string();

    std::vector<ProcessedSample> processed;
    processed.reserve(traces.size());
    for (const auto &t : traces)
    {
        const Node &tx = [&]() -> const Node & {
            try
            {
                return scene.node(t.tx_id);
            }
            catch (const Error &)
            {
                throw ValidationError(csv_name + " row " + std::to_string(t.first_row) + ": unknown tx '" +
                                      t.tx_id + "'");
            }
        }();
        ProcessedSample p = filter_fast_fading(t, ms.filter);
        p.d3d = distance(tx.position, t.position);
        if (!(p.d3d > 0.0))
            throw ValidationError(csv_name + " row " + std::to_string(t.first_row) + ": rx '" + t.rx_id +
                                  "' coincides with tx '" + t.tx_id + "'");
        processed.push_back(p);
    }

    // Untuned RT and InF-SH predictions per transmitter.
    std::map<std::string, std::vector<std::size_t>> by_tx;
    for (std::size_t i = 0; i < processed.size(); ++i)
        if (processed[i].valid)
            by_tx[processed[i].tx_id].push_back(i);
    std::vector<double> rt_untuned(processed.size(), kNoCoverage);
    std::vector<double> inf_pred(processed.size(), kNoCoverage);
    for (const auto &[tx_id, idx] : by_tx)
    {
        const Node &tx = scene.node(tx_id);
        std::vector<Vec3> rx;
        for (std::size_t i : idx)
            rx.push_back(processed[i].position);
        spdlog::info("calibrate: tracing {} receivers from {}", rx.size(), tx_id);
        const auto rt = predict_rx_power(geometry, tx.position, rx, cfg, TuningParams{},
                                         RadioLink{tx.antenna, ms.rx_antenna, ms.tx_power_dbm});
        const auto gains = predict_inf_gain(geometry, tx.position, rx, scene.frequency_ghz, s.inf, opt.threads);
        for (std::size_t k = 0; k < idx.size(); ++k)
        {
            rt_untuned[idx[k]] = rt[k];
            const Vec3 u = normalized(rx[k] - tx.position);
            inf_pred[idx[k]] =
                ms.tx_power_dbm + antenna_gain(tx.antenna, u) + gains[k] + antenna_gain(ms.rx_antenna, -u);
        }
    }

    std::vector<TuningSample> fit_samples;
    std::vector<std::size_t> used;
    std::size_t no_path = 0;
    for (std::size_t i = 0; i < processed.size(); ++i)
    {
        if (!processed[i].valid)
            continue;
        if (!std::isfinite(rt_untuned[i]))
        {
            ++no_path;
            continue;
        }
        fit_samples.push_back({processed[i].d3d, processed[i].rxp_avg_dbm, rt_untuned[i]});
        used.push_back(i);
    }
    if (fit_samples.size() < 2)
        throw ValidationError("calibrate: fewer than 2 usable measurement points");
    const TuningFit fit = fit_tuning(fit_samples);
    for (const auto &w : fit.warnings)
        spdlog::warn("calibrate: {}", w);

    struct Columns
    {
        std::vector<double> measured, untuned, tuned, inf;
    };
    std::map<std::string, Columns> per_tx;
    Columns all;
    for (std::size_t i : used)
    {
        const ProcessedSample &p = processed[i];
        const double tuned = apply_tuning(rt_untuned[i], p.d3d, fit.params);
        for (Columns *col : {&per_tx[p.tx_id], &all})
        {
            col->measured.push_back(p.rxp_avg_dbm);
            col->untuned.push_back(rt_untuned[i]);
            col->tuned.push_back(tuned);
            col->inf.push_back(inf_pred[i]);
        }
    }
    auto block = [](const Columns &col) {
        return json{{"rt_untuned", safe_stats_json(col.untuned, col.measured)},
                    {"rt_calibrated", safe_stats_json(col.tuned, col.measured)},
                    {"inf_sh", safe_stats_json(col.inf, col.measured)}};
    };
    json stats;
    stats["global"] = block(all);
    stats["per_tx"] = json::object();
    for (const auto &[tx_id, col] : per_tx)
        stats["per_tx"][tx_id] = block(col);
    std::size_t rejected = 0;
    for (const auto &p : processed)
        rejected += p.valid ? 0 : 1;
    stats["samples"] = {{"traces", processed.size()}, {"rejected_by_filter", rejected},
                        {"without_rt_path", no_path}, {"used", used.size()}};

    json tuning;
    tuning["tuning"] = tuning_to_json(fit.params);
    tuning["fit"] = {{"std_dev_initial_db", fit.std_dev_initial},
                     {"std_dev_final_db", fit.std_dev_final},
                     {"steps", fit.steps},
                     {"warnings", fit.warnings}};

    const std::string dir = c.out_dir();
    write_json(fs::path(dir) / "tuning.json", tuning);
    write_json(fs::path(dir) / "stats.json", stats);
    std::ostringstream csv;
    write_processed_csv(csv, processed);
    write_text(fs::path(dir) / "processed.csv", csv.str());
    c.write_manifest(dir, "calibrate", {{"measurements_path", opt.measurements}});

    const ErrorStats before = safe_stats(all.untuned, all.measured);
    const ErrorStats after = safe_stats(all.tuned, all.measured);
    out << "calibrated on " << used.size() << " points: A = " << format_number(fit.params.A)
        << " dB, B = " << format_number(fit.params.B) << " dB/dec\n";
    out << "RMSE " << format_number(before.rmse) << " -> " << format_number(after.rmse) << " dB, std dev "
        << format_number(before.std_dev) << " -> " << format_number(after.std_dev) << " dB\n";
    return kExitOk;
}

std::vector<double> rate_row(const CoverageGrid &grid)
{
    std::vector<double> row;
    for (double t : kTableThresholds)
        row.push_back(coverage_rate(grid, t));
    return row;
}

json deployment_json(const Deployment &d)
{
    return {{"selected", d.selected},
            {"feasible", d.feasible},
            {"achieved_coverage", d.achieved_coverage},
            {"coverage_history", d.coverage_history}};
}

int cmd_plan(Command &c, const Options &opt, std::ostream &out)
{
    const Scenario &s = c.scenario();
    const PlanningSettings &ps = s.planning;
    const Backend primary = c.backend();
    const Backend other = primary == Backend::rt ? Backend::inf_sh : Backend::rt;
    const Scene scene = prepare_scene(s, c.occupancy_override(ps.occupancy), opt.seed);
    const Geometry geometry(scene);
    const GridSpec spec = c.grid(ps.config.grid_resolution, ps.config.rx_height);
    PlanConfig cfg = ps.config;
    cfg.grid_resolution = spec.resolution;
    cfg.rx_height = spec.height;
    cfg.validate();

    std::vector<Node> candidates;
    for (const Node *n : scene.nodes_with_role(NodeRole::candidate_site))
        candidates.push_back(*n);
    if (candidates.empty())
        throw ValidationError("plan: scenario has no candidate-site nodes");
    const auto mask = target_mask(spec, ps.target_area, ps.exclude_solids ? &geometry : nullptr);
    if (std::count(mask.begin(), mask.end(), std::uint8_t{1}) == 0)
        throw ValidationError("plan: target area contains no grid pixels");

    std::map<Backend, SiteGrids> grids;
    for (Backend b : {primary, other})
    {
        spdlog::info("plan: {} site grids for {} candidates", to_string(b), candidates.size());
        grids[b] = compute_site_grids(geometry, candidates, ps.budget, c.backend_config(b), spec, mask,
                                      ps.rx_antenna);
    }
    const Deployment dep = select_from_grids(grids[primary], cfg);
    const Deployment alt = select_from_grids(grids[other], cfg);

    const std::string dir = c.out_dir();
    json report;
    report["backend"] = to_string(primary);
    report["candidates"] = json::array();
    for (const auto &n : candidates)
        report["candidates"].push_back(n.id);
    report["threshold_dbm"] = cfg.rsrp_threshold;
    report["coverage_target"] = cfg.coverage_target;
    report["confidence"] = cfg.confidence_level;
    report["model_std_dev_db"] = cfg.model_std_dev;
    report["margin_db"] = dep.margin_db;
    report["epre_dbm"] = compute_epre(ps.budget);
    report["target_pixels"] = std::count(mask.begin(), mask.end(), std::uint8_t{1});
    report["grid"] = {{"origin", {spec.x0, spec.y0}},
                      {"size", {spec.width, spec.depth}},
                      {"resolution", spec.resolution},
                      {"height", spec.height}};
    report["deployment"] = deployment_json(dep);
    if (candidates.size() <= 12)
        report["exhaustive"] = deployment_json(brute_force_from_grids(grids[primary], cfg));
    report["alternative"] = deployment_json(alt);
    report["alternative"]["backend"] = to_string(other);

    // Coverage-rate table for the selected deployment under both backends.
    json table;
    table["thresholds_dbm"] = std::vector<double>(std::begin(kTableThresholds), std::end(kTableThresholds));
    std::map<Backend, std::vector<double>> with_margin_rows;
    std::vector<std::string> outputs;
    for (Backend b : {primary, other})
    {
        std::vector<const CoverageGrid *> selected;
        for (const auto &id : dep.selected)
            selected.push_back(&grids[b].at(id));
        if (selected.empty())
            continue;
        const CoverageGrid best = best_server(selected);
        const CoverageGrid margined = with_margin(best, dep.margin_db);
        with_margin_rows[b] = rate_row(margined);
        table["with_margin"][to_string(b)] = with_margin_rows[b];
        table["without_margin"][to_string(b)] = rate_row(best);
        const std::string stem = "rsrp_margin_" + to_string(b);
        write_raster_set(dir, stem, margined, "rsrp");
        outputs.push_back(stem + ".pgm");
    }
    report["coverage_rates"] = table;
    if (with_margin_rows.size() == 2)
    {
        std::vector<double> gaps;
        std::size_t widest = 0;
        for (std::size_t i = 0; i < std::size(kTableThresholds); ++i)
        {
            gaps.push_back(with_margin_rows[Backend::rt][i] - with_margin_rows[Backend::inf_sh][i]);
            if (std::abs(gaps[i]) > std::abs(gaps[widest]))
                widest = i;
        }
        report["divergence"] = {{"rt_minus_inf_sh", gaps},
                                {"largest_at_threshold_dbm", kTableThresholds[widest]},
                                {"largest_at_highest_threshold", widest + 1 == std::size(kTableThresholds)}};
    }
    write_json(fs::path(dir) / "plan.json", report);

    std::ostringstream csv;
    csv << "backend";
    for (double t : kTableThresholds)
        csv << "," << format_number(t);
    csv << "\n";
    for (const auto &[b, row] : with_margin_rows)
    {
        csv << to_string(b);
        for (double v : row)
            csv << "," << format_number(v);
        csv << "\n";
    }
    write_text(fs::path(dir) / "coverage_rates.csv", csv.str());
    c.write_manifest(dir, "plan", {{"outputs", outputs}});

    out << "plan " << to_string(primary) << ": " << dep.selected.size() << " of " << candidates.size()
        << " sites (";
    for (std::size_t i = 0; i < dep.selected.size(); ++i)
        out << (i ? " " : "") << dep.selected[i];
    out << "), coverage " << format_number(100.0 * dep.achieved_coverage) << "% with margin "
        << format_number(dep.margin_db) << " dB\n";
    if (!dep.feasible)
    {
        out << "infeasible: target " << format_number(100.0 * cfg.coverage_target)
            << "% not reachable with all candidates\n";
        return kExitInfeasible;
    }
    return kExitOk;
}

int cmd_montecarlo(Command &c, const Options &opt, std::ostream &out)
{
    const Scenario &s = c.scenario();
    const MonteCarloSettings &mc = s.montecarlo;
    std::vector<SfPoint> points = mc.points;
    std::string source = "points";
    if (points.empty())
    {
        const Scene scene = prepare_scene(s, c.occupancy_override(std::nullopt), opt.seed);
        const Geometry geometry(scene);
        const std::string tx_id = opt.tx.empty() ? mc.tx : opt.tx;
        const Node &tx = tx_id.empty() ? c.tx_node(scene) : c.node(scene, tx_id, "tx");
        const GridSpec spec = c.grid();
        const CoverageGrid g(spec);
        for (const auto &p : g.points())
            points.push_back({std::max(1.0, distance(tx.position, p)), is_los(geometry, tx.position, p)});
        source = "grid from " + tx.id;
    }
    SfSampler sampler;
    sampler.seed = opt.seed;
    sampler.duplicates_per_point = c.given("--duplicates") ? opt.duplicates : mc.duplicates;
    const auto samples = sample_shadow_fading(points, s.scene.frequency_ghz, s.inf, sampler);
    const EmpiricalCdf cdf = empirical_cdf(samples);

    std::vector<double> los_samples, nlos_samples;
    for (std::size_t i = 0; i < samples.size(); ++i)
        (points[i / sampler.duplicates_per_point].los ? los_samples : nlos_samples).push_back(samples[i]);
    auto fit = [](const std::vector<double> &v) {
        if (v.empty())
            return json{{"n", 0}};
        const EmpiricalCdf e = empirical_cdf(v);
        return json{{"n", v.size()}, {"mean_db", e.mean}, {"sigma_db", e.sigma}};
    };

    const std::string dir = c.out_dir();
    std::ostringstream csv;
    csv << "pl_db,probability\n";
    for (const auto &p : cdf.steps)
        csv << format_number(p.value) << "," << format_number(p.probability) << "\n";
    write_text(fs::path(dir) / "cdf.csv", csv.str());
    write_json(fs::path(dir) / "fit.json", {{"source", source},
                                            {"points", points.size()},
                                            {"duplicates_per_point", sampler.duplicates_per_point},
                                            {"all", fit(samples)},
                                            {"los", fit(los_samples)},
                                            {"nlos", fit(nlos_samples)}});
    c.write_manifest(dir, "montecarlo");
    out << "montecarlo: " << samples.size() << " draws, mean " << format_number(cdf.mean) << " dB, sigma "
        << format_number(cdf.sigma) << " dB\n";
    return kExitOk;
}

int cmd_synth(Command &c, const Options &opt, std::ostream &out)
{
    if (!(opt.noise_db >= 0.0))
        throw ValidationError("--noise-db must be non-negative");
    if (opt.samples_per_trace < 1)
        throw ValidationError("--samples must be at least 1");
    const Scenario &s = c.scenario();
    const MeasurementSettings &ms = s.measurement;
    const Scene scene = prepare_scene(s, c.occupancy_override(ms.occupancy), opt.seed);
    const Geometry geometry(scene);
    const RtConfig cfg = c.rt_config();
    const TuningParams truth{opt.true_a, opt.true_b};

    std::vector<const Node *> txs;
    if (!opt.tx.empty())
        txs.push_back(&c.node(scene, opt.tx, "tx"));
    else
        txs = scene.nodes_with_role(NodeRole::tx);
    const auto rxs = scene.nodes_with_role(NodeRole::rx);
    if (txs.empty() || rxs.empty())
        throw ValidationError("synth: scenario needs tx and rx nodes");

    std::vector<RawTrace> traces;
    std::uint64_t stream = 0;
    for (const Node *tx : txs)
    {
        std::vector<Vec3> positions;
        for (const Node *rx : rxs)
            positions.push_back(rx->position);
        spdlog::info("synth: tracing {} receivers from {}", positions.size(), tx->id);
        const auto rxp = predict_rx_power(geometry, tx->position, positions, cfg, truth,
                                          RadioLink{tx->antenna, ms.rx_antenna, ms.tx_power_dbm});
        for (std::size_t k = 0; k < rxs.size(); ++k, ++stream)
        {
            if (!std::isfinite(rxp[k]))
                continue;
            std::mt19937_64 rng(stream_seed(opt.seed, stream));
            std::normal_distribution<double> noise(0.0, 1.0);
            std::exponential_distribution<double> fading(1.0);
            const double mean_dbm = rxp[k] + opt.noise_db * noise(rng);
            // Rayleigh power fading, clipped at 25 dB below the mean and renormalised to unit linear mean.
            std::vector<double> power(opt.samples_per_trace);
            double sum = 0.0;
            for (double &p : power)
            {
                p = std::max(fading(rng), std::pow(10.0, -2.5));
                sum += p;
            }
            RawTrace t;
            t.tx_id = tx->id;
            t.rx_id = rxs[k]->id;
            t.position = rxs[k]->position;
            for (double p : power)
                t.samples.push_back(mean_dbm + 10.0 * std::log10(p * static_cast<double>(power.size()) / sum));
            traces.push_back(std::move(t));
        }
    }

    const std::string dir = c.out_dir();
    std::ostringstream csv;
    write_measurements_csv(csv, traces);
    write_text(fs::path(dir) / "measurements.csv", csv.str());
    c.write_manifest(dir, "synth", {{"truth", tuning_to_json(truth)}, {"noise_db", opt.noise_db}});
    out << "synth: " << traces.size() << " traces from " << txs.size() << " transmitters\n";
    return kExitOk;
}

void setup_logging()
{
    auto logger = spdlog::get("rfplan");
    if (!logger)
    {
        logger = spdlog::stderr_logger_mt("rfplan");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
    }
    const char *level = std::getenv("RFPLAN_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

void add_common(CLI::App *cmd, Options &opt)
{
    cmd->add_option("--scenario", opt.scenario, "Scenario JSON file")->required();
    cmd->add_option("--out", opt.out, "Output directory");
    cmd->add_option("--seed", opt.seed, "Seed for every random choice");
    cmd->add_option("--threads", opt.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--occupancy", opt.occupancy, "Rack occupancy override")->check(CLI::Range(0.0, 1.0));
}

void add_propagation(CLI::App *cmd, Options &opt)
{
    cmd->add_option("--backend", opt.backend, "Propagation backend")->check(CLI::IsMember({"rt", "inf-sh"}));
    cmd->add_option("--tuning", opt.tuning, "Tuning JSON written by calibrate");
}

void add_grid(CLI::App *cmd, Options &opt)
{
    cmd->add_option("--grid-res", opt.grid_res, "Grid resolution (m)")->check(CLI::PositiveNumber);
    cmd->add_option("--rx-height", opt.rx_height, "Receiver height (m)");
}

} // namespace

std::string tool_version()
{
    return RFPLAN_VERSION;
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    setup_logging();
    Options opt;
    CLI::App app{"Indoor radio propagation and access-point planning"};
    app.name("rfplan");
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    auto *validate = app.add_subcommand("validate", "Load and validate a scenario");
    add_common(validate, opt);

    auto *trace = app.add_subcommand("trace", "Dump the propagation paths between two nodes");
    add_common(trace, opt);
    trace->add_option("--tx", opt.tx, "Transmitter node id");
    trace->add_option("--rx", opt.rx, "Receiver node id")->required();

    auto *coverage = app.add_subcommand("coverage", "Channel gain or RSRP raster for one transmitter");
    add_common(coverage, opt);
    add_propagation(coverage, opt);
    add_grid(coverage, opt);
    coverage->add_option("--tx", opt.tx, "Transmitter node id");
    coverage->add_option("--quantity", opt.quantity, "channel_gain or rsrp")
        ->check(CLI::IsMember({"channel_gain", "rsrp"}));

    auto *calibrate = app.add_subcommand("calibrate", "Fit the (A, B) tuning to measurements");
    add_common(calibrate, opt);
    calibrate->add_option("--measurements", opt.measurements, "Measurement CSV")->required();

    auto *plan = app.add_subcommand("plan", "Select access points from the candidate sites");
    add_common(plan, opt);
    add_propagation(plan, opt);
    add_grid(plan, opt);

    auto *montecarlo = app.add_subcommand("montecarlo", "Shadow-fading path loss distribution");
    add_common(montecarlo, opt);
    add_grid(montecarlo, opt);
    montecarlo->add_option("--tx", opt.tx, "Transmitter node id for grid points");
    montecarlo->add_option("--duplicates", opt.duplicates, "Draws per point")->check(CLI::PositiveNumber);

    auto *synth = app.add_subcommand("synth", "Synthetic measurements from the tuned RT model");
    add_common(synth, opt);
    synth->add_option("--tx", opt.tx, "Only this transmitter");
    synth->add_option("--a-offset", opt.true_a, "Tuning offset A used to generate (dB)");
    synth->add_option("--b-slope", opt.true_b, "Tuning slope B used to generate (dB/dec)");
    synth->add_option("--noise-db", opt.noise_db, "Gaussian noise on each point mean (dB)");
    synth->add_option("--samples", opt.samples_per_trace, "Fast-fading samples per point");

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp &)
    {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::CallForVersion &)
    {
        out << tool_version() << "\n";
        return kExitOk;
    }
    catch (const CLI::ParseError &e)
    {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    const std::map<CLI::App *, int (*)(Command &, const Options &, std::ostream &)> handlers{
        {validate, cmd_validate},   {trace, cmd_trace}, {coverage, cmd_coverage},    {calibrate, cmd_calibrate},
        {plan, cmd_plan},           {synth, cmd_synth}, {montecarlo, cmd_montecarlo}};
    for (const auto &[sub, handler] : handlers)
    {
        if (!sub->parsed())
            continue;
        try
        {
            Command command(opt, *sub);
            return handler(command, opt, out);
        }
        catch (const IoError &e)
        {
            err << "error: " << e.what() << "\n";
            return kExitIo;
        }
        catch (const Error &e)
        {
            err << "error: " << e.what() << "\n";
            return kExitValidation;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << "\n";
            return kExitValidation;
        }
    }
    return kExitValidation;
}

int run_cli(int argc, char **argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace rfplan
