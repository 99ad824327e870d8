// SPDX-License-Identifier: Apache-2.0
//
// Ray launching with exact image-method path refinement, and the incoherent link budget on top.

#ifndef RFPLAN_RT_HPP
#define RFPLAN_RT_HPP

#include "rfplan/geometry.hpp"
#include "rfplan/grid.hpp"
#include "rfplan/scene.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace rfplan
{

struct RtConfig
{
    int max_reflections = 2;
    int max_diffractions = 1;
    std::size_t launch_count = 100000;
    double reception_sphere_alpha = 1.0;
    double frequency_ghz = 3.7;

    // Launch rays stop spawning reflections once the transmission loss they have accumulated exceeds this.
    double discovery_loss_cap_db = 30.0;
    // Rays launched from each diffraction point to discover reflections after the edge.
    std::size_t diffraction_launch_count = 500;
    // Diffracted candidates weaker than the receiver's non-diffracted total by more than this are dropped.
    double diffraction_prune_db = std::numeric_limits<double>::infinity();
    unsigned threads = 1;

    void validate() const;
};

enum class InteractionKind
{
    reflection,
    diffraction,
    transmission
};

std::string to_string(InteractionKind kind);

struct Interaction
{
    InteractionKind kind = InteractionKind::reflection;
    std::uint32_t id = 0; // facet id for reflection and transmission, wedge id for diffraction
    Vec3 point;           // transmission: entry point
    double loss_db = 0.0;
    double chord_m = 0.0; // transmission only
};

struct PropagationPath
{
    std::vector<Interaction> interactions;
    double length = 0.0;
    Vec3 departure;
    Vec3 arrival; // from the receiver towards the last interaction (or the transmitter)
    double gain_db = 0.0;

    // Reflection and diffraction events only, e.g. "R12 D3".
    std::string signature() const;
    int reflection_count() const;
    int diffraction_count() const;
};

struct TuningParams
{
    double A = 0.0;
    double B = 20.0;

    bool operator==(const TuningParams &) const = default;
};

struct RadioLink
{
    AntennaPattern tx_antenna;
    AntennaPattern rx_antenna;
    double tx_power_dbm = 0.0;
};

double fspl_db(double distance_m, double frequency_ghz);

// -FSPL(length) minus the summed interaction losses.
double path_gain(const PropagationPath &path, double frequency_ghz);

// Incoherent sum in mW. Returns kNoCoverage for an empty list.
double aggregate_rx_power(const std::vector<PropagationPath> &paths, const AntennaPattern &tx_antenna,
                          const AntennaPattern &rx_antenna, double tx_power_dbm);

// Channel gain of the incoherent sum, antennas excluded.
double aggregate_gain(const std::vector<PropagationPath> &paths);

double apply_tuning(double rxp_untuned_dbm, double d3d_m, const TuningParams &tuning);

// Paths between tx and every receiver. The geometry must outlive the call; receivers may share positions.
std::vector<std::vector<PropagationPath>> trace_many(const Geometry &geometry, const Vec3 &tx,
                                                     const std::vector<Vec3> &receivers, const RtConfig &cfg);

std::vector<PropagationPath> trace_paths(const Geometry &geometry, const Vec3 &tx, const Vec3 &rx,
                                         const RtConfig &cfg);
std::vector<PropagationPath> trace_paths(const Scene &scene, const Node &tx, const Node &rx, const RtConfig &cfg);

// Tuned received power per receiver, antennas included.
std::vector<double> predict_rx_power(const Geometry &geometry, const Vec3 &tx, const std::vector<Vec3> &receivers,
                                     const RtConfig &cfg, const TuningParams &tuning, const RadioLink &link);

// Tuned channel gain per pixel.
CoverageGrid predict_grid(const Geometry &geometry, const Vec3 &tx, const GridSpec &grid, const RtConfig &cfg,
                          const TuningParams &tuning);
CoverageGrid predict_grid(const Scene &scene, const Node &tx, const GridSpec &grid, const RtConfig &cfg,
                          const TuningParams &tuning);

nlohmann::json paths_to_json(const std::vector<PropagationPath> &paths, const Geometry &geometry);

} // namespace rfplan

#endif
