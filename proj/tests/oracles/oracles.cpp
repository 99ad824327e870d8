// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracle
{
namespace
{

constexpr double kPi = std::numbers::pi;
constexpr double kC = 299792458.0;

P3 sub(const P3 &a, const P3 &b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
P3 add(const P3 &a, const P3 &b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
P3 scale(const P3 &a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot3(const P3 &a, const P3 &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
P3 cross3(const P3 &a, const P3 &b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double len(const P3 &a) { return std::sqrt(dot3(a, a)); }

// Composite Simpson rule on [lo, hi] with an even number of intervals.
template <typename F>
auto simpson(F &&f, double lo, double hi, int intervals)
{
    const double h = (hi - lo) / intervals;
    auto sum = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i)
        sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * (h / 3.0);
}

struct Plane
{
    P3 normal;
    double offset;
};

Plane plane_of(const Plate &p)
{
    const P3 n = cross3(p.u, p.v);
    const P3 unit = scale(n, 1.0 / len(n));
    return {unit, dot3(unit, p.corner)};
}

P3 mirror(const P3 &x, const Plate &p)
{
    const Plane pl = plane_of(p);
    return sub(x, scale(pl.normal, 2.0 * (dot3(pl.normal, x) - pl.offset)));
}

// Crossing of segment a -> b with the plate, parameter t strictly inside (t_eps, 1 - t_eps).
bool crosses(const P3 &a, const P3 &b, const Plate &p, double t_eps, P3 *where = nullptr)
{
    const Plane pl = plane_of(p);
    const P3 ab = sub(b, a);
    const double denom = dot3(pl.normal, ab);
    if (std::abs(denom) < 1e-15)
        return false;
    const double t = (pl.offset - dot3(pl.normal, a)) / denom;
    if (t <= t_eps || t >= 1.0 - t_eps)
        return false;
    const P3 q = add(a, scale(ab, t));
    const P3 r = sub(q, p.corner);
    // Solve r = s u + w v in the least-squares sense (exact for points on the plane).
    const double uu = dot3(p.u, p.u), uv = dot3(p.u, p.v), vv = dot3(p.v, p.v);
    const double ru = dot3(r, p.u), rv = dot3(r, p.v);
    const double det = uu * vv - uv * uv;
    const double s = (ru * vv - rv * uv) / det;
    const double w = (rv * uu - ru * uv) / det;
    if (s < 0.0 || s > 1.0 || w < 0.0 || w > 1.0)
        return false;
    if (where)
        *where = q;
    return true;
}

bool leg_clear(const P3 &a, const P3 &b, const std::vector<Plate> &plates)
{
    const double t_eps = 1e-9 / std::max(len(sub(b, a)), 1e-30);
    for (const auto &p : plates)
        if (crosses(a, b, p, t_eps))
            return false;
    return true;
}

void enumerate(const std::vector<Plate> &plates, const P3 &tx, const P3 &rx, std::vector<int> &seq,
               int max_reflections, std::vector<SpecularPath> &out)
{
    // Images of the transmitter through the sequence.
    std::vector<P3> images{tx};
    for (int id : seq)
        images.push_back(mirror(images.back(), plates[static_cast<std::size_t>(id)]));

    std::vector<P3> points{rx};
    bool ok = true;
    for (std::size_t j = seq.size(); j-- > 0 && ok;)
    {
        P3 q;
        ok = crosses(points.back(), images[j + 1], plates[static_cast<std::size_t>(seq[j])], 0.0, &q);
        if (ok)
            points.push_back(q);
    }
    if (ok)
    {
        points.push_back(tx);
        for (std::size_t i = 0; i + 1 < points.size() && ok; ++i)
            ok = leg_clear(points[i], points[i + 1], plates);
    }
    if (ok)
        out.push_back({seq, len(sub(rx, images.back()))});

    if (static_cast<int>(seq.size()) == max_reflections)
        return;
    for (int id = 0; id < static_cast<int>(plates.size()); ++id)
    {
        if (!seq.empty() && seq.back() == id)
            continue;
        seq.push_back(id);
        enumerate(plates, tx, rx, seq, max_reflections, out);
        seq.pop_back();
    }
}

} // namespace

double fspl_db(double distance_m, double frequency_ghz)
{
    return 20.0 * std::log10(4.0 * kPi * distance_m * frequency_ghz * 1e9 / kC);
}

double normal_quantile(double p)
{
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i)
    {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double half_wave_dipole_directivity_dbi()
{
    auto intensity_sin = [](double theta) {
        const double s = std::sin(theta);
        if (s < 1e-12)
            return 0.0;
        const double f = std::cos(0.5 * kPi * std::cos(theta)) / s;
        return f * f * s;
    };
    const double radiated = 2.0 * kPi * simpson(intensity_sin, 0.0, kPi, 200000);
    return 10.0 * std::log10(4.0 * kPi / radiated);
}

std::complex<double> transition_function(double x)
{
    using cplx = std::complex<double>;
    if (x <= 0.0)
        return {0.0, 0.0};
    const double a = std::sqrt(x);
    // tau = a + r e^{-j pi/4} turns exp(-j tau^2) into a decaying exponential in r.
    const double rate = std::sqrt(2.0) * a;
    const double r_max = (-rate + std::sqrt(rate * rate + 4.0 * 45.0)) / 2.0;
    auto integrand = [&](double r) { return std::exp(cplx(-r * r - rate * r, -rate * r)); };
    const cplx ray = simpson(integrand, 0.0, r_max, 20000);
    const cplx integral = std::exp(cplx(0.0, -x)) * std::exp(cplx(0.0, -kPi / 4.0)) * ray;
    return cplx(0.0, 2.0) * a * std::exp(cplx(0.0, x)) * integral;
}

HalfPlaneCoefficients half_plane_coefficients(double phi_prime, double phi, double distance_parameter, double k)
{
    using cplx = std::complex<double>;
    const cplx pre = -std::exp(cplx(0.0, -kPi / 4.0)) / (2.0 * std::sqrt(2.0 * kPi * k));
    auto term = [&](double beta) {
        const double c = std::cos(beta / 2.0);
        return transition_function(k * distance_parameter * 2.0 * c * c) / c;
    };
    const cplx incident = term(phi - phi_prime);
    const cplx reflected = term(phi + phi_prime);
    return {pre * (incident - reflected), pre * (incident + reflected)};
}

std::vector<SpecularPath> image_method_paths(const std::vector<Plate> &plates, const P3 &tx, const P3 &rx,
                                             int max_reflections)
{
    std::vector<SpecularPath> out;
    std::vector<int> seq;
    enumerate(plates, tx, rx, seq, max_reflections, out);
    std::sort(out.begin(), out.end(), [](const SpecularPath &a, const SpecularPath &b) { return a.length < b.length; });
    return out;
}

} // namespace oracle
