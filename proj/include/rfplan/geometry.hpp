// SPDX-License-Identifier: Apache-2.0
//
// Exact segment queries against the facetised scene.

#ifndef RFPLAN_GEOMETRY_HPP
#define RFPLAN_GEOMETRY_HPP

#include "rfplan/scene.hpp"
#include "rfplan/vec3.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rfplan
{

using FacetId = std::uint32_t;
using WedgeId = std::uint32_t;

// Inclusive tie rule: a crossing within this distance of a facet boundary counts as a hit.
inline constexpr double kGrazingTolerance = 1e-9;

// Offset applied to secondary ray origins to avoid re-hitting the spawning facet.
inline constexpr double kSelfIntersectionOffset = 1e-6;

// One planar convex-or-not polygon of a solid. Normals point out of closed solids.
struct Facet
{
    FacetId id = 0;
    std::uint32_t solid = 0; // index into Geometry::solids()
    std::vector<Vec3> vertices;
    Vec3 normal;
    double offset = 0.0; // plane: dot(normal, p) == offset
    Aabb box;
    bool two_sided = false; // thin sheet: reflects on both sides, opaque to transmission

    Vec3 centroid() const;
    // Point-in-polygon for a point on the facet plane, boundary inclusive within eps.
    bool contains(const Vec3 &p, double eps = kGrazingTolerance) const;
};

struct SolidInfo
{
    std::string id;
    std::uint32_t material = 0; // index into Geometry::materials()
    bool closed = true;
    bool axis_aligned_box = false;
    Aabb box;
    std::vector<std::string> tags;
    std::vector<FacetId> facets;
};

enum class Crossing
{
    entering,
    exiting
};

struct Hit
{
    FacetId facet_id = 0;
    double distance = 0.0; // metres from the segment start
    Crossing entry_exit = Crossing::entering;
    Vec3 normal;
};

struct Wedge
{
    WedgeId id = 0;
    Vec3 start;
    Vec3 end;
    Vec3 direction;   // unit, start -> end
    FacetId face_a = 0;
    FacetId face_b = 0;
    Vec3 face_a_tangent; // in face a, perpendicular to the edge, pointing into the face
    Vec3 face_a_normal;  // outward normal of face a
    double exterior_angle = 0.0; // radians, (pi, 2pi]
    std::array<Material, 2> materials;
    std::uint32_t solid = 0;

    double length() const { return distance(start, end); }
    double n() const { return exterior_angle / M_PI; }
};

struct GeometryOptions
{
    bool accelerate = true; // bounding volume hierarchy; results are identical either way
};

// Immutable facetised view of a scene. Racks are expanded on construction.
class Geometry
{
  public:
    explicit Geometry(const Scene &scene, GeometryOptions options = {});

    const std::vector<Facet> &facets() const { return facets_; }
    const std::vector<SolidInfo> &solids() const { return solids_; }
    const std::vector<Material> &materials() const { return materials_; }
    const std::vector<Wedge> &wedges() const { return wedges_; }
    const Facet &facet(FacetId id) const { return facets_[id]; }
    const Wedge &wedge(WedgeId id) const { return wedges_[id]; }
    const Material &facet_material(FacetId id) const { return materials_[solids_[facets_[id].solid].material]; }
    const Aabb &bounds() const { return bounds_; }
    double frequency_ghz() const { return frequency_ghz_; }
    const GeometryOptions &options() const { return options_; }

    // Wedges whose edge runs along an edge of the given facet.
    std::span<const WedgeId> wedges_of_facet(FacetId id) const;

    // Facets whose bounding box overlaps the query box.
    std::vector<FacetId> facets_overlapping(const Aabb &box) const;

    // Appends raw crossings of the segment a + t (b - a), t in (t_min, t_max) scaled to metres.
    void collect_hits(const Vec3 &a, const Vec3 &b, double endpoint_tolerance, std::vector<Hit> &out) const;

    // True if any facet is crossed strictly between the endpoint tolerances.
    bool segment_blocked(const Vec3 &a, const Vec3 &b, double endpoint_tolerance) const;

    // Nearest crossing, ties to the lowest facet id; the first element of segment_hits.
    std::optional<Hit> first_hit(const Vec3 &a, const Vec3 &b, double endpoint_tolerance) const;

    // Parity test against the closed solids; returns the solid index containing p, if any.
    std::optional<std::uint32_t> solid_containing(const Vec3 &p) const;

  private:
    struct BvhNode
    {
        Aabb box;
        std::uint32_t first = 0; // leaf: first facet in order_, inner: right child index
        std::uint32_t count = 0; // 0 for inner nodes
    };

    void add_box(const Solid &s, std::uint32_t solid_index);
    void add_slab(const Solid &s, std::uint32_t solid_index);
    void add_facet(std::vector<Vec3> vertices, const Vec3 &normal, std::uint32_t solid_index, bool two_sided);
    void build_bvh();
    std::uint32_t build_node(std::uint32_t begin, std::uint32_t end, int depth);
    void find_wedges();
    template <typename Fn>
    void walk(const Vec3 &a, const Vec3 &b, double endpoint_tolerance, Fn &&on_hit) const;

    GeometryOptions options_;
    std::vector<Facet> facets_;
    std::vector<SolidInfo> solids_;
    std::vector<Material> materials_;
    std::vector<Wedge> wedges_;
    std::vector<std::vector<WedgeId>> facet_wedges_;
    std::vector<BvhNode> nodes_;
    std::vector<FacetId> order_;
    Aabb bounds_;
    double frequency_ghz_ = 3.7;
};

// All facet crossings strictly between a and b, ascending by distance. Coincident crossings of
// the same solid with the same direction collapse to the lowest facet id.
std::vector<Hit> segment_hits(const Geometry &geometry, const Vec3 &a, const Vec3 &b,
                              double endpoint_tolerance = kGrazingTolerance);

bool is_los(const Geometry &geometry, const Vec3 &a, const Vec3 &b);

// Convex exterior edges of every solid, plus the rim of every thin sheet as half-planes.
const std::vector<Wedge> &enumerate_wedges(const Geometry &geometry);

Vec3 mirror_point(const Vec3 &p, const Facet &facet);

// Summary of the volume crossings along one segment.
struct SegmentTransmission
{
    struct Chord
    {
        std::uint32_t solid = 0;
        FacetId facet = 0;
        Vec3 entry;
        double length = 0.0;
        double loss_db = 0.0;
    };
    bool blocked = false; // crossed a thin sheet
    double loss_db = 0.0;
    std::vector<Chord> chords;
};

SegmentTransmission segment_transmission(const Geometry &geometry, const Vec3 &a, const Vec3 &b,
                                         double endpoint_tolerance = kSelfIntersectionOffset);

} // namespace rfplan

#endif
