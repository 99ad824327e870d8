// SPDX-License-Identifier: Apache-2.0

#ifndef RFPLAN_RASTER_IO_HPP
#define RFPLAN_RASTER_IO_HPP

#include "rfplan/grid.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace rfplan
{

struct GrayMapping
{
    double lo_db = 0.0; // maps to gray 1
    double hi_db = 0.0; // maps to gray 255
};

// Range of finite masked values; a flat range is widened by 1 dB on each side.
GrayMapping auto_mapping(const CoverageGrid &grid);

// x_m,y_m,value for masked pixels, row-major.
void write_grid_csv(std::ostream &out, const CoverageGrid &grid);

// Binary P5, row 0 at the top (largest y). Unmasked pixels are 0, masked pixels 1..255 linear in dB.
void write_grid_pgm(std::ostream &out, const CoverageGrid &grid, const GrayMapping &mapping);

nlohmann::json grid_sidecar(const CoverageGrid &grid, const GrayMapping &mapping, const std::string &quantity);

// Writes <stem>.csv, <stem>.pgm and <stem>.json into dir.
void write_raster_set(const std::string &dir, const std::string &stem, const CoverageGrid &grid,
                      const std::string &quantity);

std::string format_number(double v);

} // namespace rfplan

#endif
