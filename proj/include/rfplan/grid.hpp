// SPDX-License-Identifier: Apache-2.0

#ifndef RFPLAN_GRID_HPP
#define RFPLAN_GRID_HPP

#include "rfplan/vec3.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace rfplan
{

// "No coverage" sentinel, below any threshold.
inline constexpr double kNoCoverage = -std::numeric_limits<double>::infinity();

// Horizontal raster of receiver points at a fixed height. Pixel (ix, iy) sits at its cell centre.
struct GridSpec
{
    double x0 = 0.0;
    double y0 = 0.0;
    double width = 0.0;
    double depth = 0.0;
    double resolution = 1.0;
    double height = 1.5;

    std::size_t nx() const;
    std::size_t ny() const;
    Vec3 point(std::size_t ix, std::size_t iy) const;
    void validate() const; // throws ValidationError for an empty or degenerate grid

    bool operator==(const GridSpec &) const = default;
};

// Row-major raster (iy outer). Unmasked pixels are excluded from statistics.
struct CoverageGrid
{
    GridSpec spec;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    CoverageGrid() = default;
    explicit CoverageGrid(const GridSpec &spec, double fill = kNoCoverage);

    std::size_t nx() const { return spec.nx(); }
    std::size_t ny() const { return spec.ny(); }
    std::size_t size() const { return values.size(); }
    std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx() + ix; }
    double &at(std::size_t ix, std::size_t iy) { return values[index(ix, iy)]; }
    double at(std::size_t ix, std::size_t iy) const { return values[index(ix, iy)]; }
    Vec3 point(std::size_t i) const { return spec.point(i % nx(), i / nx()); }
    std::vector<Vec3> points() const;
    std::size_t masked_count() const;
};

} // namespace rfplan

#endif
