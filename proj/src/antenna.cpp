// SPDX-License-Identifier: Apache-2.0

#include "rfplan/error.hpp"
#include "rfplan/scene.hpp"

#include <cmath>

namespace rfplan
{

namespace
{

constexpr double kUnitTolerance = 1e-9;
constexpr double kDipoleFloorDb = 40.0;

} // namespace

double antenna_gain(const AntennaPattern &pattern, const Vec3 &direction)
{
    if (std::abs(norm(direction) - 1.0) > kUnitTolerance)
        throw GeometryError("antenna_gain: direction is not a unit vector");

    switch (pattern.model)
    {
    case AntennaModel::isotropic:
        return pattern.peak_gain;
    case AntennaModel::gaussian_vertical:
    {
        // Parabolic-in-dB elevation cut around the tilted boresight cone; no azimuth dependence.
        const double elevation = std::asin(std::clamp(direction.z, -1.0, 1.0)) * 180.0 / M_PI;
        const double offset = (elevation + pattern.downtilt) / pattern.vertical_beamwidth;
        return pattern.peak_gain - std::min(12.0 * offset * offset, pattern.front_to_back);
    }
    case AntennaModel::half_wave_dipole:
    {
        // Vertical dipole, theta measured from the z axis.
        const double cos_t = std::clamp(direction.z, -1.0, 1.0);
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        if (sin_t < 1e-12)
            return pattern.peak_gain - kDipoleFloorDb;
        const double field = std::cos(0.5 * M_PI * cos_t) / sin_t;
        const double rel = 20.0 * std::log10(std::max(std::abs(field), 1e-300));
        return pattern.peak_gain + std::max(rel, -kDipoleFloorDb);
    }
    }
    return pattern.peak_gain;
}

} // namespace rfplan
