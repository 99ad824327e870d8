// SPDX-License-Identifier: Apache-2.0

#include "rfplan/grid.hpp"

#include "rfplan/error.hpp"

#include <cmath>
#include <algorithm>

namespace rfplan
{

std::size_t GridSpec::nx() const
{
    if (!(resolution > 0.0) || !(width > 0.0))
        return 0;
    return static_cast<std::size_t>(std::floor(width / resolution + 1e-9));
}

std::size_t GridSpec::ny() const
{
    if (!(resolution > 0.0) || !(depth > 0.0))
        return 0;
    return static_cast<std::size_t>(std::floor(depth / resolution + 1e-9));
}

Vec3 GridSpec::point(std::size_t ix, std::size_t iy) const
{
    return {x0 + (static_cast<double>(ix) + 0.5) * resolution, y0 + (static_cast<double>(iy) + 0.5) * resolution,
            height};
}

void GridSpec::validate() const
{
    if (!(resolution > 0.0) || !std::isfinite(resolution))
        throw ValidationError("grid: resolution must be positive");
    if (nx() == 0 || ny() == 0)
        throw ValidationError("grid: empty grid");
}

CoverageGrid::CoverageGrid(const GridSpec &s, double fill) : spec(s)
{
    spec.validate();
    values.assign(nx() * ny(), fill);
    mask.assign(values.size(), 1);
}

std::vector<Vec3> CoverageGrid::points() const
{
    std::vector<Vec3> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
        out.push_back(point(i));
    return out;
}

std::size_t CoverageGrid::masked_count() const
{
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

} // namespace rfplan
