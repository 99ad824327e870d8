// SPDX-License-Identifier: Apache-2.0
//
// Scene builders and filesystem helpers shared by the unit tests and the acceptance runner.

#ifndef RFPLAN_TESTS_SUPPORT_HPP
#define RFPLAN_TESTS_SUPPORT_HPP

#include "oracles/oracles.hpp"
#include "rfplan/scene.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace testing
{

inline rfplan::Scene empty_scene(const rfplan::Vec3 &lo, const rfplan::Vec3 &hi)
{
    rfplan::Scene s;
    s.materials = rfplan::default_material_catalog();
    s.bounds.expand(lo);
    s.bounds.expand(hi);
    return s;
}

inline void add_box(rfplan::Scene &s, const std::string &id, const rfplan::Vec3 &origin, const rfplan::Vec3 &size,
                    const std::string &material = "concrete")
{
    rfplan::Solid b;
    b.id = id;
    b.kind = rfplan::SolidKind::box;
    b.origin = origin;
    b.size = size;
    b.material = material;
    s.solids.push_back(b);
}

// Thin rectangular sheet corner, corner + u, corner + u + v, corner + v.
inline void add_sheet(rfplan::Scene &s, const std::string &id, const rfplan::Vec3 &corner, const rfplan::Vec3 &u,
                      const rfplan::Vec3 &v, const std::string &material = "metal")
{
    rfplan::Solid p;
    p.id = id;
    p.kind = rfplan::SolidKind::planar_slab;
    p.vertices = {corner, corner + u, corner + u + v, corner + v};
    p.thickness = 0.0;
    p.material = material;
    s.solids.push_back(p);
}

inline oracle::P3 p3(const rfplan::Vec3 &v) { return {v.x, v.y, v.z}; }

inline oracle::Plate plate(const rfplan::Vec3 &corner, const rfplan::Vec3 &u, const rfplan::Vec3 &v)
{
    return {p3(corner), p3(u), p3(v)};
}

inline rfplan::Node node(const std::string &id, const rfplan::Vec3 &pos, rfplan::NodeRole role)
{
    rfplan::Node n;
    n.id = id;
    n.position = pos;
    n.role = role;
    return n;
}

inline std::string slurp(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh empty directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string &name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("rfplan-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing

#endif
