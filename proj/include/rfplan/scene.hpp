// SPDX-License-Identifier: Apache-2.0
//
// Digital model of the site: materials, solids, storage racks and radio nodes.

#ifndef RFPLAN_SCENE_HPP
#define RFPLAN_SCENE_HPP

#include "rfplan/vec3.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace rfplan
{

struct Material
{
    std::string name;
    double eps_real = 1.0;               // relative permittivity, real part
    double eps_imag = 0.0;               // loss part, rel. permittivity = eps_real - j eps_imag
    double conductivity = 0.0;           // S/m, folded into the loss part at the carrier
    double transmission_loss_rate = 0.0; // dB/m through the solid volume
    bool perfect_conductor = false;      // reflection coefficients exactly -1 (TE) / +1 (TM)

    // Complex relative permittivity eps' - j(eps'' + sigma / (2 pi f eps0)).
    std::complex<double> relative_permittivity(double frequency_ghz) const;

    bool operator==(const Material &) const = default;
};

using MaterialCatalog = std::map<std::string, Material>;

// Concrete, metal, glass, plasterboard, wood, cardboard-goods and the equivalent material used
// for glass-panelled vertical lifts. Identical to data/materials.json.
MaterialCatalog default_material_catalog();

enum class SolidKind
{
    box,
    planar_slab
};

struct Solid
{
    std::string id;
    SolidKind kind = SolidKind::box;
    Vec3 origin;                 // box: minimum corner
    Vec3 size;                   // box: extents along x, y, z
    std::vector<Vec3> vertices;  // planar slab: polygon outline
    double thickness = 0.0;      // planar slab: extrusion along the polygon normal, 0 = thin sheet
    std::string material;
    std::vector<std::string> tags;

    bool has_tag(const std::string &tag) const;
    bool operator==(const Solid &) const = default;
};

struct Rack
{
    std::string id;
    Vec3 origin; // minimum corner of the frame
    Vec3 size;
    std::array<int, 3> slots{1, 1, 1}; // columns (x), rows (y), levels (z)
    double occupancy = 0.5;
    std::uint64_t fill_seed = 0;
    std::string frame_material = "metal";
    std::string box_material = "cardboard-goods";
    double frame_thickness = 0.05; // base plate height
    double slot_fill = 0.9;        // fraction of a slot cell taken by its box, per axis

    int slot_count() const { return slots[0] * slots[1] * slots[2]; }
    int filled_count() const;
    bool operator==(const Rack &) const = default;
};

enum class AntennaModel
{
    isotropic,
    gaussian_vertical,
    half_wave_dipole
};

// Vertically polarised, omnidirectional in azimuth.
struct AntennaPattern
{
    AntennaModel model = AntennaModel::isotropic;
    double peak_gain = 0.0;              // dBi
    double vertical_beamwidth = 90.0;    // degrees, 3 dB
    double downtilt = 0.0;               // degrees below horizon
    double front_to_back = 25.0;         // dB floor below peak for the gaussian model

    bool operator==(const AntennaPattern &) const = default;
};

// Directivity of the half-wave dipole, 10 log10(1.6409224).
inline constexpr double kHalfWaveDipoleGainDbi = 2.1508804;

// Gain in dBi towards direction (unit vector, as seen from the antenna).
double antenna_gain(const AntennaPattern &pattern, const Vec3 &direction);

enum class NodeRole
{
    tx,
    rx,
    candidate_site
};

struct Node
{
    std::string id;
    Vec3 position;
    AntennaPattern antenna;
    NodeRole role = NodeRole::tx;

    bool operator==(const Node &) const = default;
};

struct Scene
{
    std::vector<Solid> solids;
    std::vector<Rack> racks;
    std::vector<Node> nodes;
    Aabb bounds;
    MaterialCatalog materials;
    double frequency_ghz = 3.7;

    const Material &material(const std::string &name) const;
    const Node &node(const std::string &id) const;
    std::vector<const Node *> nodes_with_role(NodeRole role) const;

    bool operator==(const Scene &) const = default;
};

// Parses and validates a scene document. base_dir resolves a relative "material_catalog" path.
Scene parse_scene(const nlohmann::json &doc, const std::filesystem::path &base_dir = {});
Scene load_scene(const std::filesystem::path &path);

MaterialCatalog parse_material_catalog(const nlohmann::json &doc);
MaterialCatalog load_material_catalog(const std::filesystem::path &path);

nlohmann::json material_to_json(const Material &m);
AntennaPattern parse_antenna(const nlohmann::json &j);

// Throws ValidationError naming the first entity that breaks an invariant.
void validate_scene(const Scene &scene);

// Boxes generated for the filled slots of one rack, in slot index order.
std::vector<Solid> expand_rack(const Rack &rack);

// Replaces every rack by its base-plate frame plus one box per filled slot.
Scene expand_racks(const Scene &scene);

// Returns a copy with the selected solids switched to new_material. Racks are untouched;
// expand them first to re-material slot boxes.
Scene swap_material(const Scene &scene, const std::function<bool(const Solid &)> &selector,
                    const Material &new_material);

// Number of planar facets the scene decomposes into after rack expansion.
std::size_t facet_count(const Scene &scene);

std::string to_string(NodeRole role);
std::string to_string(AntennaModel model);

} // namespace rfplan

#endif
