// SPDX-License-Identifier: Apache-2.0

#include "rfplan/scene.hpp"

#include "rfplan/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace rfplan
{

namespace
{

constexpr double kCoplanarTolerance = 1e-6;
constexpr double kBoundsTolerance = 1e-9;

using nlohmann::json;

const json &require(const json &j, const char *key, const std::string &context)
{
    if (!j.is_object() || !j.contains(key))
        throw ParseError(context + ": missing key '" + key + "'");
    return j.at(key);
}

double number(const json &j, const char *key, const std::string &context)
{
    const json &v = require(j, key, context);
    if (!v.is_number())
        throw ParseError(context + ": '" + key + "' must be a number");
    return v.get<double>();
}

double number_or(const json &j, const char *key, double fallback, const std::string &context)
{
    if (!j.contains(key))
        return fallback;
    return number(j, key, context);
}

std::string text(const json &j, const char *key, const std::string &context)
{
    const json &v = require(j, key, context);
    if (!v.is_string())
        throw ParseError(context + ": '" + key + "' must be a string");
    return v.get<std::string>();
}

Vec3 point(const json &v, const std::string &context)
{
    if (!v.is_array() || v.size() != 3)
        throw ParseError(context + ": expected a 3-element coordinate array");
    for (const auto &c : v)
        if (!c.is_number())
            throw ParseError(context + ": coordinates must be numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Material parse_material(const json &j)
{
    if (!j.is_object())
        throw ParseError("material entry must be an object");
    const std::string ctx = "material '" + (j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : std::string("?")) + "'";
    Material m;
    m.name = text(j, "name", ctx);
    m.perfect_conductor = j.value("perfect_conductor", false);
    m.eps_real = number_or(j, "eps_real", 1.0, ctx);
    m.eps_imag = number_or(j, "eps_imag", 0.0, ctx);
    m.conductivity = number_or(j, "conductivity", 0.0, ctx);
    m.transmission_loss_rate = number_or(j, "transmission_loss_rate", 0.0, ctx);
    return m;
}

Solid parse_solid(const json &j, std::size_t index)
{
    std::string ctx = "solid #" + std::to_string(index);
    Solid s;
    s.id = text(j, "id", ctx);
    ctx = "solid '" + s.id + "'";
    const std::string kind = j.value("kind", std::string("box"));
    if (kind == "box")
    {
        s.kind = SolidKind::box;
        s.origin = point(require(j, "origin", ctx), ctx);
        s.size = point(require(j, "size", ctx), ctx);
    }
    else if (kind == "planar-slab")
    {
        s.kind = SolidKind::planar_slab;
        const json &verts = require(j, "vertices", ctx);
        if (!verts.is_array())
            throw ParseError(ctx + ": 'vertices' must be an array");
        for (const auto &v : verts)
            s.vertices.push_back(point(v, ctx));
        s.thickness = number_or(j, "thickness", 0.0, ctx);
    }
    else
        throw ParseError(ctx + ": unknown kind '" + kind + "'");
    s.material = text(j, "material", ctx);
    if (j.contains("tags"))
        s.tags = j.at("tags").get<std::vector<std::string>>();
    return s;
}

Rack parse_rack(const json &j, std::size_t index)
{
    std::string ctx = "rack #" + std::to_string(index);
    Rack r;
    r.id = text(j, "id", ctx);
    ctx = "rack '" + r.id + "'";
    r.origin = point(require(j, "origin", ctx), ctx);
    r.size = point(require(j, "size", ctx), ctx);
    const json &slots = require(j, "slots", ctx);
    if (!slots.is_array() || slots.size() != 3)
        throw ParseError(ctx + ": 'slots' must be [columns, rows, levels]");
    for (int a = 0; a < 3; ++a)
        r.slots[a] = slots[a].get<int>();
    r.occupancy = number_or(j, "occupancy", r.occupancy, ctx);
    r.fill_seed = j.value("fill_seed", std::uint64_t{0});
    r.frame_material = j.value("frame_material", r.frame_material);
    r.box_material = j.value("box_material", r.box_material);
    r.frame_thickness = number_or(j, "frame_thickness", r.frame_thickness, ctx);
    r.slot_fill = number_or(j, "slot_fill", r.slot_fill, ctx);
    return r;
}

NodeRole parse_role(const std::string &role, const std::string &ctx)
{
    if (role == "tx")
        return NodeRole::tx;
    if (role == "rx")
        return NodeRole::rx;
    if (role == "candidate-site")
        return NodeRole::candidate_site;
    throw ParseError(ctx + ": unknown role '" + role + "'");
}

Node parse_node(const json &j, std::size_t index)
{
    std::string ctx = "node #" + std::to_string(index);
    Node n;
    n.id = text(j, "id", ctx);
    ctx = "node '" + n.id + "'";
    n.role = parse_role(j.value("role", std::string("tx")), ctx);
    n.position = point(require(j, "position", ctx), ctx);
    if (j.contains("antenna"))
        n.antenna = parse_antenna(j.at("antenna"));
    return n;
}

void validate_material(const Material &m)
{
    const std::string ctx = "material '" + m.name + "'";
    if (m.name.empty())
        throw ValidationError("material with empty name");
    if (!(m.eps_real >= 1.0))
        throw ValidationError(ctx + ": eps_real must be >= 1");
    if (!(m.eps_imag >= 0.0))
        throw ValidationError(ctx + ": eps_imag must be >= 0");
    if (!(m.conductivity >= 0.0))
        throw ValidationError(ctx + ": conductivity must be >= 0");
    if (!(m.transmission_loss_rate >= 0.0))
        throw ValidationError(ctx + ": transmission_loss_rate must be >= 0");
}

void validate_antenna(const AntennaPattern &a, const std::string &ctx)
{
    if (!std::isfinite(a.peak_gain))
        throw ValidationError(ctx + ": antenna peak gain must be finite");
    if (a.model == AntennaModel::gaussian_vertical)
    {
        if (!(a.vertical_beamwidth > 0.0 && a.vertical_beamwidth <= 180.0))
            throw ValidationError(ctx + ": vertical beamwidth must be in (0, 180] degrees");
        if (!(a.front_to_back >= 0.0))
            throw ValidationError(ctx + ": front-to-back limit must be >= 0 dB");
        if (!(std::abs(a.downtilt) <= 90.0))
            throw ValidationError(ctx + ": downtilt must be within [-90, 90] degrees");
    }
}

// Newell normal of a polygon; its length is twice the polygon area.
Vec3 newell(const std::vector<Vec3> &v)
{
    Vec3 n;
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        const Vec3 &a = v[i];
        const Vec3 &b = v[(i + 1) % v.size()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    return n;
}

void check_material_ref(const Scene &scene, const std::string &name, const std::string &ctx)
{
    if (!scene.materials.contains(name))
        throw ValidationError(ctx + ": unknown material '" + name + "'");
}

Solid make_box(std::string id, Vec3 origin, Vec3 size, std::string material, std::vector<std::string> tags)
{
    Solid s;
    s.id = std::move(id);
    s.kind = SolidKind::box;
    s.origin = origin;
    s.size = size;
    s.material = std::move(material);
    s.tags = std::move(tags);
    return s;
}

} // namespace

std::complex<double> Material::relative_permittivity(double frequency_ghz) const
{
    // sigma / (2 pi f eps0) with f in GHz
    constexpr double kEps0 = 8.8541878128e-12;
    const double cond_term = conductivity > 0.0 ? conductivity / (2.0 * M_PI * frequency_ghz * 1e9 * kEps0) : 0.0;
    return {eps_real, -(eps_imag + cond_term)};
}

MaterialCatalog default_material_catalog()
{
    // ITU-R P.2040 style parameters evaluated at 3.7 GHz where frequency-dependent;
    // loss rates follow the plane-wave attenuation of each dielectric.
    const std::vector<Material> list = {
        {"concrete", 5.24, 0.0, 0.1286, 92.0, false},
        {"metal", 1.0, 0.0, 1.0e7, 1000.0, false},
        {"glass", 6.27, 0.0, 0.0205, 13.4, false},
        {"plasterboard", 2.73, 0.0, 0.0291, 28.7, false},
        {"wood", 1.99, 0.0, 0.0191, 22.2, false},
        {"cardboard-goods", 2.5, 0.2, 0.0, 20.0, false},
        {"lift-equivalent", 5.31, 0.44, 0.0, 8.0, false},
    };
    MaterialCatalog catalog;
    for (const auto &m : list)
        catalog.emplace(m.name, m);
    return catalog;
}

bool Solid::has_tag(const std::string &tag) const
{
    return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

int Rack::filled_count() const
{
    return static_cast<int>(std::lround(occupancy * slot_count()));
}

const Material &Scene::material(const std::string &name) const
{
    const auto it = materials.find(name);
    if (it == materials.end())
        throw ValidationError("unknown material '" + name + "'");
    return it->second;
}

const Node &Scene::node(const std::string &id) const
{
    for (const auto &n : nodes)
        if (n.id == id)
            return n;
    throw ValidationError("unknown node '" + id + "'");
}

std::vector<const Node *> Scene::nodes_with_role(NodeRole role) const
{
    std::vector<const Node *> out;
    for (const auto &n : nodes)
        if (n.role == role)
            out.push_back(&n);
    return out;
}

AntennaPattern parse_antenna(const json &j)
{
    const std::string ctx = "antenna";
    if (!j.is_object())
        throw ParseError("antenna must be an object");
    AntennaPattern a;
    const std::string model = j.value("model", std::string("isotropic"));
    if (model == "isotropic")
        a.model = AntennaModel::isotropic;
    else if (model == "gaussian-vertical")
        a.model = AntennaModel::gaussian_vertical;
    else if (model == "half-wave-dipole")
    {
        a.model = AntennaModel::half_wave_dipole;
        a.peak_gain = kHalfWaveDipoleGainDbi;
    }
    else
        throw ParseError("unknown antenna model '" + model + "'");
    const std::string horizontal = j.value("horizontal", std::string("omni"));
    if (horizontal != "omni")
        throw ParseError("unsupported horizontal pattern '" + horizontal + "'");
    a.peak_gain = number_or(j, "peak_gain_dbi", a.peak_gain, ctx);
    a.vertical_beamwidth = number_or(j, "vertical_beamwidth_deg", a.vertical_beamwidth, ctx);
    a.downtilt = number_or(j, "downtilt_deg", a.downtilt, ctx);
    a.front_to_back = number_or(j, "front_to_back_db", a.front_to_back, ctx);
    return a;
}

MaterialCatalog parse_material_catalog(const json &doc)
{
    if (!doc.is_array())
        throw ParseError("material catalog must be a JSON list");
    MaterialCatalog catalog;
    for (const auto &entry : doc)
    {
        Material m = parse_material(entry);
        validate_material(m);
        catalog[m.name] = m;
    }
    return catalog;
}

MaterialCatalog load_material_catalog(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open material catalog " + path.string());
    json doc;
    try
    {
        doc = json::parse(in);
    }
    catch (const json::parse_error &e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
    return parse_material_catalog(doc);
}

json material_to_json(const Material &m)
{
    json j = {{"name", m.name},
              {"eps_real", m.eps_real},
              {"eps_imag", m.eps_imag},
              {"conductivity", m.conductivity},
              {"transmission_loss_rate", m.transmission_loss_rate}};
    if (m.perfect_conductor)
        j["perfect_conductor"] = true;
    return j;
}

Scene parse_scene(const json &doc, const std::filesystem::path &base_dir)
{
    if (!doc.is_object())
        throw ParseError("scene document must be a JSON object");
    Scene scene;
    try
    {
        scene.frequency_ghz = number_or(doc, "frequency_ghz", scene.frequency_ghz, "scene");
        const json &bounds = require(doc, "bounds", "scene");
        scene.bounds.min = point(require(bounds, "min", "bounds"), "bounds.min");
        scene.bounds.max = point(require(bounds, "max", "bounds"), "bounds.max");

        scene.materials = default_material_catalog();
        if (doc.contains("material_catalog"))
        {
            std::filesystem::path p = doc.at("material_catalog").get<std::string>();
            if (p.is_relative())
                p = base_dir / p;
            scene.materials = load_material_catalog(p);
        }
        if (doc.contains("materials"))
        {
            const json &list = doc.at("materials");
            if (!list.is_array())
                throw ParseError("scene: 'materials' must be a list");
            for (const auto &entry : list)
            {
                Material m = parse_material(entry);
                scene.materials[m.name] = m;
            }
        }
        if (doc.contains("solids"))
        {
            std::size_t i = 0;
            for (const auto &entry : doc.at("solids"))
                scene.solids.push_back(parse_solid(entry, i++));
        }
        if (doc.contains("racks"))
        {
            std::size_t i = 0;
            for (const auto &entry : doc.at("racks"))
                scene.racks.push_back(parse_rack(entry, i++));
        }
        if (doc.contains("nodes"))
        {
            std::size_t i = 0;
            for (const auto &entry : doc.at("nodes"))
                scene.nodes.push_back(parse_node(entry, i++));
        }
    }
    catch (const json::exception &e)
    {
        throw ParseError(std::string("scene: ") + e.what());
    }
    validate_scene(scene);
    return scene;
}

Scene load_scene(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open scene file " + path.string());
    json doc;
    try
    {
        doc = json::parse(in);
    }
    catch (const json::parse_error &e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
    return parse_scene(doc, path.parent_path());
}

void validate_scene(const Scene &scene)
{
    if (!(scene.frequency_ghz > 0.0))
        throw ValidationError("scene: frequency_ghz must be > 0");
    for (int a = 0; a < 3; ++a)
        if (!(scene.bounds.max[a] > scene.bounds.min[a]))
            throw ValidationError("scene: bounds must have positive extent on every axis");

    for (const auto &[name, m] : scene.materials)
    {
        if (name != m.name)
            throw ValidationError("material catalog key '" + name + "' does not match material name");
        validate_material(m);
    }

    std::set<std::string> ids;
    for (const auto &s : scene.solids)
    {
        const std::string ctx = "solid '" + s.id + "'";
        if (s.id.empty())
            throw ValidationError("solid with empty id");
        if (!ids.insert(s.id).second)
            throw ValidationError(ctx + ": duplicate id");
        check_material_ref(scene, s.material, ctx);
        if (s.kind == SolidKind::box)
        {
            if (!(s.size.x > 0.0 && s.size.y > 0.0 && s.size.z > 0.0))
                throw ValidationError(ctx + ": box extents must be strictly positive");
        }
        else
        {
            if (s.vertices.size() < 3)
                throw ValidationError(ctx + ": polygon needs at least 3 vertices");
            const Vec3 n = newell(s.vertices);
            if (norm(n) < 1e-12)
                throw ValidationError(ctx + ": polygon has zero area");
            const Vec3 unit = normalized(n);
            Vec3 centroid;
            for (const auto &v : s.vertices)
                centroid += v;
            centroid = centroid / static_cast<double>(s.vertices.size());
            for (const auto &v : s.vertices)
                if (std::abs(dot(v - centroid, unit)) > kCoplanarTolerance)
                    throw ValidationError(ctx + ": polygon vertices are not coplanar");
            if (!(s.thickness >= 0.0))
                throw ValidationError(ctx + ": slab thickness must be >= 0");
        }
    }
    for (const auto &r : scene.racks)
    {
        const std::string ctx = "rack '" + r.id + "'";
        if (r.id.empty())
            throw ValidationError("rack with empty id");
        if (!ids.insert(r.id).second)
            throw ValidationError(ctx + ": duplicate id");
        if (!(r.size.x > 0.0 && r.size.y > 0.0 && r.size.z > 0.0))
            throw ValidationError(ctx + ": frame extents must be strictly positive");
        for (int a = 0; a < 3; ++a)
            if (r.slots[a] < 1)
                throw ValidationError(ctx + ": slot grid dimensions must be >= 1");
        if (!(r.occupancy >= 0.0 && r.occupancy <= 1.0))
            throw ValidationError(ctx + ": occupancy must be in [0, 1]");
        if (!(r.slot_fill > 0.0 && r.slot_fill <= 1.0))
            throw ValidationError(ctx + ": slot_fill must be in (0, 1]");
        if (!(r.frame_thickness > 0.0 && r.frame_thickness < r.size.z))
            throw ValidationError(ctx + ": frame_thickness must be in (0, height)");
        check_material_ref(scene, r.frame_material, ctx);
        check_material_ref(scene, r.box_material, ctx);
    }
    std::set<std::string> node_ids;
    for (const auto &n : scene.nodes)
    {
        const std::string ctx = "node '" + n.id + "'";
        if (n.id.empty())
            throw ValidationError("node with empty id");
        if (!node_ids.insert(n.id).second)
            throw ValidationError(ctx + ": duplicate id");
        if (!scene.bounds.contains(n.position, kBoundsTolerance))
            throw ValidationError(ctx + ": position outside scene bounds");
        validate_antenna(n.antenna, ctx);
    }
}

std::vector<Solid> expand_rack(const Rack &rack)
{
    const int count = rack.slot_count();
    const int filled = rack.filled_count();

    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(rack.fill_seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(static_cast<std::size_t>(filled));
    std::sort(order.begin(), order.end());

    const Vec3 cell{rack.size.x / rack.slots[0], rack.size.y / rack.slots[1],
                    (rack.size.z - rack.frame_thickness) / rack.slots[2]};
    const Vec3 box = cell * rack.slot_fill;
    const Vec3 inset = (cell - box) * 0.5;

    std::vector<Solid> out;
    out.reserve(order.size());
    for (int index : order)
    {
        const int ix = index % rack.slots[0];
        const int iy = (index / rack.slots[0]) % rack.slots[1];
        const int iz = index / (rack.slots[0] * rack.slots[1]);
        const Vec3 corner{rack.origin.x + ix * cell.x, rack.origin.y + iy * cell.y,
                          rack.origin.z + rack.frame_thickness + iz * cell.z};
        std::ostringstream id;
        id << rack.id << "/slot-" << ix << '-' << iy << '-' << iz;
        out.push_back(make_box(id.str(), corner + inset, box, rack.box_material, {"rack-box", rack.id}));
    }
    return out;
}

Scene expand_racks(const Scene &scene)
{
    Scene out = scene;
    out.racks.clear();
    for (const auto &rack : scene.racks)
    {
        out.solids.push_back(make_box(rack.id + "/frame", rack.origin,
                                      {rack.size.x, rack.size.y, rack.frame_thickness}, rack.frame_material,
                                      {"rack-frame", rack.id}));
        for (auto &box : expand_rack(rack))
            out.solids.push_back(std::move(box));
    }
    return out;
}

Scene swap_material(const Scene &scene, const std::function<bool(const Solid &)> &selector,
                    const Material &new_material)
{
    validate_material(new_material);
    const auto existing = scene.materials.find(new_material.name);
    if (existing != scene.materials.end() && !(existing->second == new_material))
        throw ValidationError("material '" + new_material.name +
                              "' already exists in the catalog with different properties");
    Scene out = scene;
    std::size_t matched = 0;
    for (auto &s : out.solids)
    {
        if (selector(s))
        {
            s.material = new_material.name;
            ++matched;
        }
    }
    if (matched == 0)
        throw ValidationError("material swap selector matched no solid");
    out.materials[new_material.name] = new_material;
    return out;
}

std::size_t facet_count(const Scene &scene)
{
    std::size_t n = 0;
    for (const auto &s : scene.solids)
    {
        if (s.kind == SolidKind::box)
            n += 6;
        else
            n += s.thickness > 0.0 ? 2 + s.vertices.size() : 1;
    }
    for (const auto &r : scene.racks)
        n += 6 * (1 + static_cast<std::size_t>(r.filled_count()));
    return n;
}

std::string to_string(NodeRole role)
{
    switch (role)
    {
    case NodeRole::tx:
        return "tx";
    case NodeRole::rx:
        return "rx";
    case NodeRole::candidate_site:
        return "candidate-site";
    }
    return "?";
}

std::string to_string(AntennaModel model)
{
    switch (model)
    {
    case AntennaModel::isotropic:
        return "isotropic";
    case AntennaModel::gaussian_vertical:
        return "gaussian-vertical";
    case AntennaModel::half_wave_dipole:
        return "half-wave-dipole";
    }
    return "?";
}

} // namespace rfplan
