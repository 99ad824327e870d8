// SPDX-License-Identifier: Apache-2.0

#ifndef RFPLAN_VEC3_HPP
#define RFPLAN_VEC3_HPP

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfplan
{

struct Vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    constexpr double &operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 &operator+=(const Vec3 &o)
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Vec3 &operator-=(const Vec3 &o)
    {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }

    bool operator==(const Vec3 &) const = default;
};

constexpr Vec3 operator*(double s, const Vec3 &v) { return v * s; }

constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3 &a, const Vec3 &b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }

inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }

// Zero vectors are returned unchanged.
inline Vec3 normalized(const Vec3 &v)
{
    const double n = norm(v);
    return n > 0.0 ? v / n : v;
}

// Axis-aligned bounding box. Default-constructed boxes are empty.
struct Aabb
{
    Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
    Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};

    bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }

    void expand(const Vec3 &p)
    {
        for (int a = 0; a < 3; ++a)
        {
            min[a] = std::min(min[a], p[a]);
            max[a] = std::max(max[a], p[a]);
        }
    }

    void expand(const Aabb &b)
    {
        if (b.empty())
            return;
        expand(b.min);
        expand(b.max);
    }

    Aabb inflated(double margin) const
    {
        Aabb r = *this;
        r.min = r.min - Vec3{margin, margin, margin};
        r.max = r.max + Vec3{margin, margin, margin};
        return r;
    }

    bool contains(const Vec3 &p, double eps = 0.0) const
    {
        for (int a = 0; a < 3; ++a)
            if (p[a] < min[a] - eps || p[a] > max[a] + eps)
                return false;
        return true;
    }

    bool overlaps(const Aabb &b) const
    {
        for (int a = 0; a < 3; ++a)
            if (b.max[a] < min[a] || b.min[a] > max[a])
                return false;
        return true;
    }

    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extent() const { return max - min; }

    int longest_axis() const
    {
        const Vec3 e = extent();
        if (e.x >= e.y && e.x >= e.z)
            return 0;
        return e.y >= e.z ? 1 : 2;
    }

    // Slab test of the ray origin + t * dir against the box, t restricted to [t_lo, t_hi].
    // inv_dir components may be infinite for axis-parallel rays.
    bool clip(const Vec3 &origin, const Vec3 &inv_dir, double &t_lo, double &t_hi) const
    {
        for (int a = 0; a < 3; ++a)
        {
            double t0 = (min[a] - origin[a]) * inv_dir[a];
            double t1 = (max[a] - origin[a]) * inv_dir[a];
            if (std::isnan(t0) || std::isnan(t1))
            {
                // origin lies on a slab plane of a degenerate axis
                if (origin[a] < min[a] || origin[a] > max[a])
                    return false;
                continue;
            }
            if (t0 > t1)
                std::swap(t0, t1);
            t_lo = std::max(t_lo, t0);
            t_hi = std::min(t_hi, t1);
            if (t_lo > t_hi)
                return false;
        }
        return true;
    }

    bool operator==(const Aabb &) const = default;
};

} // namespace rfplan

#endif
