// SPDX-License-Identifier: Apache-2.0

#include "rfplan/planner.hpp"

#include "rfplan/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace rfplan
{

namespace
{

constexpr std::size_t kBruteForceLimit = 12;

bool inside_polygon_xy(const std::vector<Vec3> &poly, double x, double y)
{
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
    {
        if ((poly[i].y > y) != (poly[j].y > y))
        {
            const double cx = (poly[j].x - poly[i].x) * (y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x;
            if (x < cx)
                inside = !inside;
        }
    }
    return inside;
}

std::vector<std::uint8_t> covered_pixels(const CoverageGrid &grid, double threshold)
{
    std::vector<std::uint8_t> out(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        out[i] = grid.mask[i] && grid.values[i] >= threshold;
    return out;
}

void check_grids(const SiteGrids &grids)
{
    if (grids.empty())
        throw ValidationError("planner: no candidate sites");
    const CoverageGrid &first = grids.begin()->second;
    for (const auto &[id, g] : grids)
        if (!(g.spec == first.spec) || g.mask != first.mask)
            throw ValidationError("planner: site '" + id + "' grid does not match the others");
    if (first.masked_count() == 0)
        throw ValidationError("planner: target area contains no pixels");
}

Deployment finish(const SiteGrids &grids, const std::vector<std::string> &selected, double margin,
                  const PlanConfig &cfg)
{
    Deployment d;
    d.selected = selected;
    d.margin_db = margin;
    std::vector<const CoverageGrid *> chosen;
    for (const auto &id : selected)
    {
        chosen.push_back(&grids.at(id));
        d.per_site_grids.emplace(id, grids.at(id));
    }
    if (chosen.empty())
    {
        d.best_server_grid = CoverageGrid(grids.begin()->second.spec);
        d.best_server_grid.mask = grids.begin()->second.mask;
    }
    else
        d.best_server_grid = best_server(chosen);
    d.achieved_coverage = coverage_rate(d.best_server_grid, cfg.rsrp_threshold + margin);
    d.feasible = d.achieved_coverage >= cfg.coverage_target - 1e-12;
    return d;
}

} // namespace

double LinkBudget::epre() const
{
    return compute_epre(*this);
}

double compute_epre(const LinkBudget &budget)
{
    if (budget.n_prb < 1)
        throw DomainError("epre: n_prb must be at least 1");
    return budget.total_tx_power_dbm - 10.0 * std::log10(12.0 * budget.n_prb);
}

double confidence_margin(double std_dev, double confidence)
{
    if (!(confidence > 0.5 && confidence < 1.0))
        throw DomainError("confidence_margin: confidence must lie in (0.5, 1)");
    if (!(std_dev >= 0.0))
        throw DomainError("confidence_margin: std_dev must be non-negative");
    return boost::math::quantile(boost::math::normal_distribution<double>(), confidence) * std_dev;
}

double coverage_rate(const CoverageGrid &grid, double threshold)
{
    std::size_t masked = 0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        if (!grid.mask[i])
            continue;
        ++masked;
        covered += grid.values[i] >= threshold;
    }
    if (masked == 0)
        throw DomainError("coverage_rate: empty mask");
    return static_cast<double>(covered) / static_cast<double>(masked);
}

CoverageGrid with_margin(const CoverageGrid &grid, double margin_db)
{
    CoverageGrid out = grid;
    for (double &v : out.values)
        v -= margin_db;
    return out;
}

std::string to_string(Backend backend)
{
    return backend == Backend::rt ? "rt" : "inf-sh";
}

Backend parse_backend(const std::string &name)
{
    if (name == "rt")
        return Backend::rt;
    if (name == "inf-sh")
        return Backend::inf_sh;
    throw ValidationError("unknown backend '" + name + "' (expected rt or inf-sh)");
}

void PlanConfig::validate() const
{
    if (!std::isfinite(rsrp_threshold))
        throw ValidationError("planning: threshold must be finite");
    if (!(coverage_target > 0.0 && coverage_target < 1.0))
        throw ValidationError("planning: target must lie in (0, 1)");
    if (!(confidence_level > 0.0 && confidence_level < 1.0))
        throw ValidationError("planning: confidence must lie in (0, 1)");
    if (!(model_std_dev >= 0.0))
        throw ValidationError("planning: model_std_dev must be non-negative");
    if (!(grid_resolution > 0.0))
        throw ValidationError("planning: grid resolution must be positive");
}

std::vector<std::uint8_t> target_mask(const GridSpec &grid, const std::vector<Vec3> &polygon,
                                      const Geometry *exclude_solids)
{
    grid.validate();
    if (!polygon.empty() && polygon.size() < 3)
        throw ValidationError("target area polygon needs at least 3 vertices");
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    std::vector<std::uint8_t> mask(nx * ny, 1);
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix)
        {
            const Vec3 p = grid.point(ix, iy);
            bool keep = polygon.empty() || inside_polygon_xy(polygon, p.x, p.y);
            if (keep && exclude_solids)
                keep = !exclude_solids->solid_containing(p).has_value();
            mask[iy * nx + ix] = keep;
        }
    return mask;
}

CoverageGrid rsrp_grid(const Geometry &geometry, const Node &site, const LinkBudget &budget,
                       const BackendConfig &backend, const GridSpec &grid, const AntennaPattern &rx_antenna)
{
    CoverageGrid out(grid);
    const double epre = compute_epre(budget);
    const auto points = out.points();
    if (backend.kind == Backend::rt)
    {
        RtConfig cfg = backend.rt;
        cfg.frequency_ghz = backend.frequency_ghz;
        cfg.threads = backend.threads;
        out.values = predict_rx_power(geometry, site.position, points, cfg, backend.tuning,
                                      RadioLink{site.antenna, rx_antenna, epre});
        return out;
    }
    const auto gains = predict_inf_gain(geometry, site.position, points, backend.frequency_ghz, backend.inf,
                                        backend.threads);
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        const Vec3 dir = points[i] - site.position;
        if (norm(dir) < 1e-12)
        {
            out.values[i] = epre + site.antenna.peak_gain + gains[i] + rx_antenna.peak_gain;
            continue;
        }
        const Vec3 u = normalized(dir);
        out.values[i] = epre + antenna_gain(site.antenna, u) + gains[i] + antenna_gain(rx_antenna, -u);
    }
    return out;
}

CoverageGrid best_server(const std::vector<const CoverageGrid *> &grids)
{
    if (grids.empty())
        throw DomainError("best_server: no grids");
    CoverageGrid out = *grids.front();
    for (std::size_t g = 1; g < grids.size(); ++g)
    {
        if (!(grids[g]->spec == out.spec))
            throw DomainError("best_server: grid specs differ");
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values[i] = std::max(out.values[i], grids[g]->values[i]);
    }
    return out;
}

SiteGrids compute_site_grids(const Geometry &geometry, const std::vector<Node> &candidates,
                             const LinkBudget &budget, const BackendConfig &backend, const GridSpec &grid,
                             const std::vector<std::uint8_t> &mask, const AntennaPattern &rx_antenna)
{
    if (candidates.empty())
        throw ValidationError("planner: no candidate sites");
    SiteGrids grids;
    for (const auto &site : candidates)
    {
        CoverageGrid g = rsrp_grid(geometry, site, budget, backend, grid, rx_antenna);
        if (mask.size() != g.size())
            throw ValidationError("planner: mask does not match the grid");
        g.mask = mask;
        if (!grids.emplace(site.id, std::move(g)).second)
            throw ValidationError("planner: duplicate candidate '" + site.id + "'");
    }
    return grids;
}

Deployment select_from_grids(const SiteGrids &grids, const PlanConfig &cfg)
{
    cfg.validate();
    check_grids(grids);
    const double margin = confidence_margin(cfg.model_std_dev, cfg.confidence_level);
    const double level = cfg.rsrp_threshold + margin;
    const std::size_t masked = grids.begin()->second.masked_count();

    std::map<std::string, std::vector<std::uint8_t>> reach;
    for (const auto &[id, g] : grids)
        reach.emplace(id, covered_pixels(g, level));

    std::vector<std::uint8_t> covered(grids.begin()->second.size(), 0);
    std::size_t covered_count = 0;
    std::vector<std::string> selected;
    std::vector<double> history;
    while (selected.size() < grids.size())
    {
        if (static_cast<double>(covered_count) / static_cast<double>(masked) >= cfg.coverage_target - 1e-12)
            break;
        std::string best;
        std::size_t best_gain = 0;
        for (const auto &[id, r] : reach)
        {
            if (std::find(selected.begin(), selected.end(), id) != selected.end())
                continue;
            std::size_t gain = 0;
            for (std::size_t i = 0; i < r.size(); ++i)
                gain += r[i] && !covered[i];
            if (gain > best_gain)
            {
                best_gain = gain;
                best = id;
            }
        }
        if (best_gain == 0)
            break; // no remaining site adds coverage: the target is out of reach
        selected.push_back(best);
        const auto &r = reach.at(best);
        for (std::size_t i = 0; i < r.size(); ++i)
            if (r[i] && !covered[i])
            {
                covered[i] = 1;
                ++covered_count;
            }
        history.push_back(static_cast<double>(covered_count) / static_cast<double>(masked));
    }
    Deployment d = finish(grids, selected, margin, cfg);
    d.coverage_history = std::move(history);
    return d;
}

Deployment brute_force_from_grids(const SiteGrids &grids, const PlanConfig &cfg)
{
    cfg.validate();
    check_grids(grids);
    if (grids.size() > kBruteForceLimit)
        throw DomainError("brute_force_select: at most 12 candidates");
    const double margin = confidence_margin(cfg.model_std_dev, cfg.confidence_level);
    const double level = cfg.rsrp_threshold + margin;
    const std::size_t masked = grids.begin()->second.masked_count();

    std::vector<std::string> ids;
    std::vector<std::vector<std::uint8_t>> reach;
    for (const auto &[id, g] : grids)
    {
        ids.push_back(id);
        reach.push_back(covered_pixels(g, level));
    }
    const std::size_t n = ids.size();
    const std::size_t pixels = reach.front().size();

    for (std::size_t k = 1; k <= n; ++k)
    {
        // Combinations of k indices in lexicographic order.
        std::vector<std::size_t> idx(k);
        for (std::size_t i = 0; i < k; ++i)
            idx[i] = i;
        while (true)
        {
            std::size_t count = 0;
            for (std::size_t p = 0; p < pixels; ++p)
            {
                bool hit = false;
                for (std::size_t i : idx)
                    hit = hit || reach[i][p];
                count += hit;
            }
            if (static_cast<double>(count) / static_cast<double>(masked) >= cfg.coverage_target - 1e-12)
            {
                std::vector<std::string> chosen;
                for (std::size_t i : idx)
                    chosen.push_back(ids[i]);
                return finish(grids, chosen, margin, cfg);
            }
            std::size_t pos = k;
            while (pos > 0 && idx[pos - 1] == n - k + pos - 1)
                --pos;
            if (pos == 0)
                break;
            ++idx[pos - 1];
            for (std::size_t i = pos; i < k; ++i)
                idx[i] = idx[i - 1] + 1;
        }
    }
    return finish(grids, ids, margin, cfg);
}

Deployment select_aps(const Geometry &geometry, const std::vector<Node> &candidates, const LinkBudget &budget,
                      const PlanConfig &cfg, const BackendConfig &backend, const GridSpec &grid,
                      const std::vector<std::uint8_t> &mask, const AntennaPattern &rx_antenna)
{
    return select_from_grids(compute_site_grids(geometry, candidates, budget, backend, grid, mask, rx_antenna), cfg);
}

Deployment brute_force_select(const Geometry &geometry, const std::vector<Node> &candidates,
                              const LinkBudget &budget, const PlanConfig &cfg, const BackendConfig &backend,
                              const GridSpec &grid, const std::vector<std::uint8_t> &mask,
                              const AntennaPattern &rx_antenna)
{
    if (candidates.size() > kBruteForceLimit)
        throw DomainError("brute_force_select: at most 12 candidates");
    return brute_force_from_grids(compute_site_grids(geometry, candidates, budget, backend, grid, mask, rx_antenna),
                                  cfg);
}

} // namespace rfplan
