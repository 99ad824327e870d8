// SPDX-License-Identifier: Apache-2.0

#include "rfplan/raster_io.hpp"

#include "rfplan/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

namespace rfplan
{

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

GrayMapping auto_mapping(const CoverageGrid &grid)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        if (!grid.mask[i] || !std::isfinite(grid.values[i]))
            continue;
        lo = std::min(lo, grid.values[i]);
        hi = std::max(hi, grid.values[i]);
    }
    if (!std::isfinite(lo))
        return {-1.0, 1.0};
    if (hi - lo < 1e-9)
        return {lo - 1.0, hi + 1.0};
    return {lo, hi};
}

void write_grid_csv(std::ostream &out, const CoverageGrid &grid)
{
    out << "x_m,y_m,value\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        if (!grid.mask[i])
            continue;
        const Vec3 p = grid.point(i);
        out << format_number(p.x) << ',' << format_number(p.y) << ',' << format_number(grid.values[i]) << '\n';
    }
}

void write_grid_pgm(std::ostream &out, const CoverageGrid &grid, const GrayMapping &mapping)
{
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    out << "P5\n" << nx << ' ' << ny << "\n255\n";
    std::vector<unsigned char> row(nx);
    const double span = mapping.hi_db - mapping.lo_db;
    for (std::size_t r = 0; r < ny; ++r)
    {
        const std::size_t iy = ny - 1 - r;
        for (std::size_t ix = 0; ix < nx; ++ix)
        {
            const std::size_t i = grid.index(ix, iy);
            if (!grid.mask[i])
            {
                row[ix] = 0;
                continue;
            }
            const double v = grid.values[i];
            double t = std::isfinite(v) ? (v - mapping.lo_db) / span : (v > 0 ? 1.0 : 0.0);
            t = std::clamp(t, 0.0, 1.0);
            row[ix] = static_cast<unsigned char>(1 + std::lround(t * 254.0));
        }
        out.write(reinterpret_cast<const char *>(row.data()), static_cast<std::streamsize>(row.size()));
    }
}

nlohmann::json grid_sidecar(const CoverageGrid &grid, const GrayMapping &mapping, const std::string &quantity)
{
    nlohmann::json j;
    j["quantity"] = quantity;
    j["unit"] = quantity == "channel_gain" ? "dB" : "dBm";
    j["origin"] = {grid.spec.x0, grid.spec.y0};
    j["resolution_m"] = grid.spec.resolution;
    j["height_m"] = grid.spec.height;
    j["width_px"] = grid.nx();
    j["height_px"] = grid.ny();
    j["row_order"] = "top row is the largest y";
    j["gray"] = {{"unmasked", 0}, {"min", 1}, {"max", 255}};
    j["db_range"] = {mapping.lo_db, mapping.hi_db};
    j["masked_pixels"] = grid.masked_count();
    return j;
}

void write_raster_set(const std::string &dir, const std::string &stem, const CoverageGrid &grid,
                      const std::string &quantity)
{
    namespace fs = std::filesystem;
    const fs::path base(dir);
    const GrayMapping mapping = auto_mapping(grid);
    auto open = [&](const std::string &ext, std::ios::openmode mode) {
        std::ofstream f(base / (stem + ext), mode);
        if (!f)
            throw IoError("cannot write '" + (base / (stem + ext)).string() + "'");
        return f;
    };
    {
        auto f = open(".csv", std::ios::out);
        write_grid_csv(f, grid);
    }
    {
        auto f = open(".pgm", std::ios::out | std::ios::binary);
        write_grid_pgm(f, grid, mapping);
    }
    {
        auto f = open(".json", std::ios::out);
        f << grid_sidecar(grid, mapping, quantity).dump(2) << '\n';
    }
}

} // namespace rfplan
