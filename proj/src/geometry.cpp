// SPDX-License-Identifier: Apache-2.0

#include "rfplan/geometry.hpp"

#include "rfplan/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

namespace rfplan
{

namespace
{

constexpr std::uint32_t kLeafSize = 4;
constexpr double kEdgeQuantum = 1e-7;

Vec3 newell_normal(const std::vector<Vec3> &v)
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
    return normalized(n);
}

double point_segment_distance(const Vec3 &p, const Vec3 &a, const Vec3 &b)
{
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + ab * t);
}

using EdgeKey = std::tuple<long long, long long, long long, long long, long long, long long>;

std::array<long long, 3> quantize(const Vec3 &p)
{
    return {std::llround(p.x / kEdgeQuantum), std::llround(p.y / kEdgeQuantum), std::llround(p.z / kEdgeQuantum)};
}

EdgeKey edge_key(const Vec3 &a, const Vec3 &b)
{
    auto qa = quantize(a);
    auto qb = quantize(b);
    if (qb < qa)
        std::swap(qa, qb);
    return {qa[0], qa[1], qa[2], qb[0], qb[1], qb[2]};
}

} // namespace

Vec3 Facet::centroid() const
{
    Vec3 c;
    for (const auto &v : vertices)
        c += v;
    return c / static_cast<double>(vertices.size());
}

bool Facet::contains(const Vec3 &p, double eps) const
{
    // Drop the dominant normal axis and run a crossing-number test in 2D.
    int drop = 0;
    if (std::abs(normal.y) > std::abs(normal[drop]))
        drop = 1;
    if (std::abs(normal.z) > std::abs(normal[drop]))
        drop = 2;
    const int u = (drop + 1) % 3;
    const int w = (drop + 2) % 3;

    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    {
        const double ui = vertices[i][u], wi = vertices[i][w];
        const double uj = vertices[j][u], wj = vertices[j][w];
        if ((wi > p[w]) != (wj > p[w]))
        {
            const double cross_u = (uj - ui) * (p[w] - wi) / (wj - wi) + ui;
            if (p[u] < cross_u)
                inside = !inside;
        }
    }
    if (inside)
        return true;
    for (std::size_t i = 0; i < n; ++i)
        if (point_segment_distance(p, vertices[i], vertices[(i + 1) % n]) <= eps)
            return true;
    return false;
}

Geometry::Geometry(const Scene &input, GeometryOptions options) : options_(options)
{
    const Scene scene = input.racks.empty() ? input : expand_racks(input);
    frequency_ghz_ = scene.frequency_ghz;
    bounds_ = scene.bounds;

    std::map<std::string, std::uint32_t> material_index;
    for (const auto &[name, m] : scene.materials)
    {
        material_index[name] = static_cast<std::uint32_t>(materials_.size());
        materials_.push_back(m);
    }

    for (const auto &s : scene.solids)
    {
        const auto it = material_index.find(s.material);
        if (it == material_index.end())
            throw ValidationError("solid '" + s.id + "': unknown material '" + s.material + "'");
        SolidInfo info;
        info.id = s.id;
        info.material = it->second;
        info.tags = s.tags;
        const auto index = static_cast<std::uint32_t>(solids_.size());
        solids_.push_back(std::move(info));
        if (s.kind == SolidKind::box)
            add_box(s, index);
        else
            add_slab(s, index);
        for (FacetId f : solids_[index].facets)
            solids_[index].box.expand(facets_[f].box);
    }

    build_bvh();
    find_wedges();
}

void Geometry::add_facet(std::vector<Vec3> vertices, const Vec3 &normal, std::uint32_t solid_index, bool two_sided)
{
    Facet f;
    f.id = static_cast<FacetId>(facets_.size());
    f.solid = solid_index;
    f.normal = normalized(normal);
    // Keep the vertex winding counter-clockwise about the outward normal.
    if (dot(newell_normal(vertices), f.normal) < 0.0)
        std::reverse(vertices.begin(), vertices.end());
    f.vertices = std::move(vertices);
    f.offset = dot(f.normal, f.centroid());
    for (const auto &v : f.vertices)
        f.box.expand(v);
    f.two_sided = two_sided;
    solids_[solid_index].facets.push_back(f.id);
    facets_.push_back(std::move(f));
}

void Geometry::add_box(const Solid &s, std::uint32_t solid_index)
{
    const Vec3 lo = s.origin;
    const Vec3 hi = s.origin + s.size;
    solids_[solid_index].closed = true;
    solids_[solid_index].axis_aligned_box = true;
    // -x, +x, -y, +y, -z, +z
    add_facet({{lo.x, lo.y, lo.z}, {lo.x, lo.y, hi.z}, {lo.x, hi.y, hi.z}, {lo.x, hi.y, lo.z}}, {-1, 0, 0}, solid_index, false);
    add_facet({{hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {hi.x, hi.y, hi.z}, {hi.x, lo.y, hi.z}}, {1, 0, 0}, solid_index, false);
    add_facet({{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, lo.y, hi.z}, {lo.x, lo.y, hi.z}}, {0, -1, 0}, solid_index, false);
    add_facet({{lo.x, hi.y, lo.z}, {lo.x, hi.y, hi.z}, {hi.x, hi.y, hi.z}, {hi.x, hi.y, lo.z}}, {0, 1, 0}, solid_index, false);
    add_facet({{lo.x, lo.y, lo.z}, {lo.x, hi.y, lo.z}, {hi.x, hi.y, lo.z}, {hi.x, lo.y, lo.z}}, {0, 0, -1}, solid_index, false);
    add_facet({{lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}}, {0, 0, 1}, solid_index, false);
}

void Geometry::add_slab(const Solid &s, std::uint32_t solid_index)
{
    const Vec3 n = newell_normal(s.vertices);
    if (s.thickness <= 0.0)
    {
        solids_[solid_index].closed = false;
        add_facet(s.vertices, n, solid_index, true);
        return;
    }
    solids_[solid_index].closed = true;
    std::vector<Vec3> ccw = s.vertices; // counter-clockwise about n
    const Vec3 shift = n * s.thickness;
    std::vector<Vec3> top;
    for (const auto &v : ccw)
        top.push_back(v + shift);
    add_facet(ccw, -n, solid_index, false);
    add_facet(top, n, solid_index, false);
    for (std::size_t i = 0; i < ccw.size(); ++i)
    {
        const Vec3 &a = ccw[i];
        const Vec3 &b = ccw[(i + 1) % ccw.size()];
        const Vec3 outward = cross(b - a, n);
        add_facet({a, b, b + shift, a + shift}, outward, solid_index, false);
    }
}

void Geometry::build_bvh()
{
    order_.resize(facets_.size());
    std::iota(order_.begin(), order_.end(), FacetId{0});
    nodes_.clear();
    if (!facets_.empty())
    {
        nodes_.reserve(2 * facets_.size());
        build_node(0, static_cast<std::uint32_t>(facets_.size()), 0);
    }
}

std::uint32_t Geometry::build_node(std::uint32_t begin, std::uint32_t end, int depth)
{
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    Aabb centroids;
    for (std::uint32_t i = begin; i < end; ++i)
    {
        box.expand(facets_[order_[i]].box);
        centroids.expand(facets_[order_[i]].box.center());
    }
    nodes_[index].box = box;
    if (end - begin <= kLeafSize || depth > 48)
    {
        nodes_[index].first = begin;
        nodes_[index].count = end - begin;
        return index;
    }
    const int axis = centroids.longest_axis();
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](FacetId l, FacetId r) {
                         const double cl = facets_[l].box.center()[axis];
                         const double cr = facets_[r].box.center()[axis];
                         return cl < cr || (cl == cr && l < r);
                     });
    build_node(begin, mid, depth + 1);
    const std::uint32_t right = build_node(mid, end, depth + 1);
    nodes_[index].first = right;
    nodes_[index].count = 0;
    return index;
}

std::vector<FacetId> Geometry::facets_overlapping(const Aabb &box) const
{
    std::vector<FacetId> out;
    if (nodes_.empty())
        return out;
    if (!options_.accelerate)
    {
        for (const auto &f : facets_)
            if (f.box.overlaps(box))
                out.push_back(f.id);
        return out;
    }
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty())
    {
        const std::uint32_t ni = stack.back();
        stack.pop_back();
        const BvhNode &node = nodes_[ni];
        if (!node.box.overlaps(box))
            continue;
        if (node.count > 0)
        {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
                if (facets_[order_[i]].box.overlaps(box))
                    out.push_back(order_[i]);
        }
        else
        {
            stack.push_back(node.first);
            stack.push_back(ni + 1);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Visits crossings in traversal order. on_hit returns the segment fraction still of interest: 1 keeps
// everything, a smaller value skips farther nodes, a negative value stops.
template <typename Fn>
void Geometry::walk(const Vec3 &a, const Vec3 &b, double endpoint_tolerance, Fn &&on_hit) const
{
    const Vec3 d = b - a;
    const double length = norm(d);
    if (length <= 0.0 || facets_.empty())
        return;

    double t_max = 1.0;
    auto test = [&](const Facet &f) {
        const double denom = dot(f.normal, d);
        if (std::abs(denom) <= 1e-15 * length)
            return false;
        const double t = (f.offset - dot(f.normal, a)) / denom;
        const double dist = t * length;
        if (!(dist > endpoint_tolerance && dist < length - endpoint_tolerance))
            return false;
        const Vec3 p = a + d * t;
        if (!f.contains(p))
            return false;
        t_max = std::min(t_max, on_hit(Hit{f.id, dist, denom < 0.0 ? Crossing::entering : Crossing::exiting,
                                           f.normal}));
        return t_max < 0.0;
    };

    if (!options_.accelerate)
    {
        for (const auto &f : facets_)
            if (test(f))
                return;
        return;
    }

    const Vec3 inv{1.0 / d.x, 1.0 / d.y, 1.0 / d.z};
    auto entry = [&](std::uint32_t ni, double &t0) {
        t0 = 0.0;
        double t1 = t_max;
        return nodes_[ni].box.inflated(kGrazingTolerance).clip(a, inv, t0, t1);
    };
    // Front-to-back: the nearer child is popped first so a shrinking t_max prunes the farther one.
    struct Pending
    {
        std::uint32_t node;
        double t0;
    };
    Pending stack[128];
    int top = 0;
    double t_root = 0.0;
    if (!entry(0, t_root))
        return;
    stack[top++] = {0, t_root};
    while (top > 0)
    {
        const Pending item = stack[--top];
        if (item.t0 > t_max)
            continue;
        const BvhNode &node = nodes_[item.node];
        if (node.count > 0)
        {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
                if (test(facets_[order_[i]]))
                    return;
            continue;
        }
        const std::uint32_t left = item.node + 1;
        const std::uint32_t right = node.first;
        double tl = 0.0;
        double tr = 0.0;
        const bool hit_l = entry(left, tl);
        const bool hit_r = entry(right, tr);
        if (hit_l && hit_r)
        {
            if (tl <= tr)
            {
                stack[top++] = {right, tr};
                stack[top++] = {left, tl};
            }
            else
            {
                stack[top++] = {left, tl};
                stack[top++] = {right, tr};
            }
        }
        else if (hit_l)
            stack[top++] = {left, tl};
        else if (hit_r)
            stack[top++] = {right, tr};
    }
}

void Geometry::collect_hits(const Vec3 &a, const Vec3 &b, double endpoint_tolerance, std::vector<Hit> &out) const
{
    walk(a, b, endpoint_tolerance, [&](const Hit &h) {
        out.push_back(h);
        return 1.0;
    });
}

bool Geometry::segment_blocked(const Vec3 &a, const Vec3 &b, double endpoint_tolerance) const
{
    bool blocked = false;
    walk(a, b, endpoint_tolerance, [&](const Hit &) {
        blocked = true;
        return -1.0;
    });
    return blocked;
}

std::optional<Hit> Geometry::first_hit(const Vec3 &a, const Vec3 &b, double endpoint_tolerance) const
{
    std::optional<Hit> best;
    const double length = distance(a, b);
    walk(a, b, endpoint_tolerance, [&](const Hit &h) {
        if (!best || h.distance < best->distance || (h.distance == best->distance && h.facet_id < best->facet_id))
            best = h;
        return std::min(1.0, (best->distance + kGrazingTolerance) / length);
    });
    return best;
}

std::span<const WedgeId> Geometry::wedges_of_facet(FacetId id) const
{
    return facet_wedges_[id];
}

std::optional<std::uint32_t> Geometry::solid_containing(const Vec3 &p) const
{
    const Vec3 dir = normalized(Vec3{0.5773502, 0.5773519, 0.5773490});
    const double reach = 2.0 * norm(bounds_.extent()) + 2.0 * norm(p - bounds_.center()) + 1.0;
    std::vector<Hit> hits;
    bool ray_cast = false;
    for (std::uint32_t s = 0; s < solids_.size(); ++s)
    {
        const SolidInfo &info = solids_[s];
        if (!info.closed || !info.box.contains(p))
            continue;
        if (info.axis_aligned_box)
            return s;
        if (!ray_cast)
        {
            collect_hits(p, p + dir * reach, 0.0, hits);
            ray_cast = true;
        }
        std::size_t count = 0;
        for (const auto &h : hits)
            if (facets_[h.facet_id].solid == s)
                ++count;
        if (count % 2 == 1)
            return s;
    }
    return std::nullopt;
}

void Geometry::find_wedges()
{
    std::map<EdgeKey, std::vector<std::pair<FacetId, std::size_t>>> edges;
    for (const auto &f : facets_)
        for (std::size_t i = 0; i < f.vertices.size(); ++i)
            edges[edge_key(f.vertices[i], f.vertices[(i + 1) % f.vertices.size()])].push_back({f.id, i});

    facet_wedges_.assign(facets_.size(), {});

    auto tangent_into = [](const Facet &f, const Vec3 &mid, const Vec3 &dir) {
        Vec3 t = normalized(cross(f.normal, dir));
        if (dot(f.centroid() - mid, t) < 0.0)
            t = -t;
        return t;
    };

    auto on_foreign_facet = [&](const Vec3 &a, const Vec3 &b, std::uint32_t solid) {
        Aabb box;
        box.expand(a);
        box.expand(b);
        const Vec3 mid = (a + b) * 0.5;
        for (FacetId id : facets_overlapping(box.inflated(kEdgeQuantum)))
        {
            const Facet &g = facets_[id];
            if (g.solid == solid)
                continue;
            if (std::abs(dot(g.normal, a) - g.offset) > kEdgeQuantum ||
                std::abs(dot(g.normal, b) - g.offset) > kEdgeQuantum)
                continue;
            if (g.contains(a, kEdgeQuantum) && g.contains(b, kEdgeQuantum) && g.contains(mid, kEdgeQuantum))
                return true;
        }
        return false;
    };

    for (const auto &[key, users] : edges)
    {
        const Facet &fa = facets_[users.front().first];
        const Vec3 a = fa.vertices[users.front().second];
        const Vec3 b = fa.vertices[(users.front().second + 1) % fa.vertices.size()];
        const Vec3 dir = normalized(b - a);
        const Vec3 mid = (a + b) * 0.5;

        Wedge w;
        if (users.size() == 1 && fa.two_sided)
        {
            w.face_a = w.face_b = fa.id;
            w.face_a_normal = fa.normal;
            w.face_a_tangent = tangent_into(fa, mid, dir);
            w.exterior_angle = 2.0 * M_PI;
        }
        else if (users.size() == 2 && facets_[users[0].first].solid == facets_[users[1].first].solid)
        {
            const Facet &f0 = facets_[std::min(users[0].first, users[1].first)];
            const Facet &f1 = facets_[std::max(users[0].first, users[1].first)];
            const Vec3 t0 = tangent_into(f0, mid, dir);
            const Vec3 t1 = tangent_into(f1, mid, dir);
            if (!(dot(t1, f0.normal) < -1e-12))
                continue; // flat or concave
            w.face_a = f0.id;
            w.face_b = f1.id;
            w.face_a_normal = f0.normal;
            w.face_a_tangent = t0;
            w.exterior_angle = M_PI + std::acos(std::clamp(dot(f0.normal, f1.normal), -1.0, 1.0));
        }
        else
            continue;

        w.solid = facets_[w.face_a].solid;
        if (on_foreign_facet(a, b, w.solid))
            continue;
        w.start = a;
        w.end = b;
        w.direction = dir;
        const Material &m = materials_[solids_[w.solid].material];
        w.materials = {m, m};
        w.id = static_cast<WedgeId>(wedges_.size());
        facet_wedges_[w.face_a].push_back(w.id);
        if (w.face_b != w.face_a)
            facet_wedges_[w.face_b].push_back(w.id);
        wedges_.push_back(std::move(w));
    }
}

std::vector<Hit> segment_hits(const Geometry &geometry, const Vec3 &a, const Vec3 &b, double endpoint_tolerance)
{
    if (distance(a, b) < 1e-12)
        throw GeometryError("segment_hits: degenerate segment");
    std::vector<Hit> hits;
    geometry.collect_hits(a, b, endpoint_tolerance, hits);
    std::sort(hits.begin(), hits.end(), [](const Hit &l, const Hit &r) {
        return l.distance < r.distance || (l.distance == r.distance && l.facet_id < r.facet_id);
    });
    // A crossing exactly through an edge meets two facets of the same solid at once.
    std::vector<Hit> out;
    out.reserve(hits.size());
    for (const auto &h : hits)
    {
        bool duplicate = false;
        for (auto it = out.rbegin(); it != out.rend() && h.distance - it->distance <= kGrazingTolerance; ++it)
        {
            if (geometry.facet(it->facet_id).solid == geometry.facet(h.facet_id).solid && it->entry_exit == h.entry_exit)
            {
                duplicate = true;
                break;
            }
        }
        if (!duplicate)
            out.push_back(h);
    }
    return out;
}

bool is_los(const Geometry &geometry, const Vec3 &a, const Vec3 &b)
{
    return segment_hits(geometry, a, b).empty();
}

const std::vector<Wedge> &enumerate_wedges(const Geometry &geometry)
{
    return geometry.wedges();
}

Vec3 mirror_point(const Vec3 &p, const Facet &facet)
{
    const double signed_distance = dot(facet.normal, p) - facet.offset;
    return p - facet.normal * (2.0 * signed_distance);
}

SegmentTransmission segment_transmission(const Geometry &geometry, const Vec3 &a, const Vec3 &b,
                                         double endpoint_tolerance)
{
    SegmentTransmission out;
    const double length = distance(a, b);
    if (length < 1e-12)
        return out;
    const Vec3 dir = (b - a) / length;

    struct Open
    {
        std::uint32_t solid;
        FacetId facet;
        double entry;
    };
    std::vector<Open> open;
    auto close = [&](const Open &o, double exit) {
        SegmentTransmission::Chord c;
        c.solid = o.solid;
        c.facet = o.facet;
        c.entry = a + dir * o.entry;
        c.length = exit - o.entry;
        c.loss_db = geometry.materials()[geometry.solids()[o.solid].material].transmission_loss_rate * c.length;
        out.loss_db += c.loss_db;
        out.chords.push_back(c);
    };

    for (const auto &h : segment_hits(geometry, a, b, endpoint_tolerance))
    {
        const Facet &f = geometry.facet(h.facet_id);
        if (f.two_sided)
        {
            out.blocked = true;
            return out;
        }
        auto it = std::find_if(open.begin(), open.end(), [&](const Open &o) { return o.solid == f.solid; });
        if (h.entry_exit == Crossing::entering)
        {
            if (it == open.end())
                open.push_back({f.solid, f.id, h.distance});
        }
        else if (it != open.end())
        {
            close(*it, h.distance);
            open.erase(it);
        }
        else
        {
            close({f.solid, f.id, 0.0}, h.distance); // segment started inside
        }
    }
    for (const auto &o : open)
        close(o, length);
    std::sort(out.chords.begin(), out.chords.end(),
              [&](const auto &l, const auto &r) { return distance(a, l.entry) < distance(a, r.entry); });
    return out;
}

} // namespace rfplan
