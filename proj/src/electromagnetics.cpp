// SPDX-License-Identifier: Apache-2.0

#include "rfplan/electromagnetics.hpp"

#include "rfplan/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfplan
{

namespace
{

using cplx = std::complex<double>;

constexpr double kAngleTolerance = 1e-9;
constexpr double kSingularity = 1e-6;

double wrap_two_pi(double a)
{
    a = std::fmod(a, 2.0 * M_PI);
    if (a < 0.0)
        a += 2.0 * M_PI;
    return a;
}

// Reflection coefficient for a face seen at grazing angle psi (from the face plane).
cplx face_reflection(const Material &m, double psi, Polarization pol, double frequency_ghz)
{
    psi = std::clamp(psi, 0.0, M_PI / 2);
    const double theta = std::min(M_PI / 2 - psi, std::nextafter(M_PI / 2, 0.0));
    return fresnel_reflection(m, theta, pol, frequency_ghz);
}

// One cot * F term of the wedge coefficient, with the limiting form near its shadow or reflection boundary.
cplx cot_term(double sign, double beta, double n, double kl)
{
    const double big_n = std::round((beta + sign * M_PI) / (2.0 * M_PI * n));
    const double a = 2.0 * std::pow(std::cos((2.0 * n * M_PI * big_n - beta) / 2.0), 2);
    const double eps = M_PI + sign * beta - sign * 2.0 * M_PI * n * big_n;
    if (std::abs(eps) < kSingularity)
    {
        const cplx e4(std::cos(M_PI / 4), std::sin(M_PI / 4));
        const double sgn = eps >= 0.0 ? 1.0 : -1.0;
        return n * (std::sqrt(2.0 * M_PI * kl) * sgn - 2.0 * kl * eps * e4) * e4;
    }
    const double cot = 1.0 / std::tan((M_PI + sign * beta) / (2.0 * n));
    return cot * transition_function(kl * a);
}

} // namespace

double wavenumber(double frequency_ghz)
{
    return 2.0 * M_PI * frequency_ghz * 1e9 / kSpeedOfLight;
}

cplx fresnel_reflection(const Material &material, double incidence_angle, Polarization polarization,
                        double frequency_ghz)
{
    if (!(incidence_angle >= 0.0 && incidence_angle < M_PI / 2))
        throw DomainError("fresnel_reflection: incidence angle outside [0, pi/2)");
    if (material.perfect_conductor)
        return polarization == Polarization::TE ? cplx(-1.0, 0.0) : cplx(1.0, 0.0);
    const cplx eps = material.relative_permittivity(frequency_ghz);
    const double c = std::cos(incidence_angle);
    const double s = std::sin(incidence_angle);
    const cplx root = std::sqrt(eps - s * s);
    if (polarization == Polarization::TE)
        return (c - root) / (c + root);
    return (eps * c - root) / (eps * c + root);
}

void fresnel_integrals(double x, double &c, double &s)
{
    constexpr int kMaxIter = 200;
    constexpr double kEps = 1e-16;
    constexpr double kFpMin = 1e-300;
    constexpr double kSeriesLimit = 1.5;

    const double ax = std::abs(x);
    if (ax < 1e-150)
    {
        c = ax;
        s = 0.0;
    }
    else if (ax <= kSeriesLimit)
    {
        double sum = 0.0;
        double sums = 0.0;
        double sumc = ax;
        double sign = 1.0;
        const double fact = M_PI / 2 * ax * ax;
        bool odd = true;
        double term = ax;
        int n = 3;
        for (int k = 1; k <= kMaxIter; ++k)
        {
            term *= fact / k;
            sum += sign * term / n;
            const double test = std::abs(sum) * kEps;
            if (odd)
            {
                sign = -sign;
                sums = sum;
                sum = sumc;
            }
            else
            {
                sumc = sum;
                sum = sums;
            }
            if (term < test)
                break;
            odd = !odd;
            n += 2;
        }
        s = sums;
        c = sumc;
    }
    else
    {
        // Modified Lentz evaluation of the continued fraction for erfc.
        const double pix2 = M_PI * ax * ax;
        cplx b(1.0, -pix2);
        cplx cc(1.0 / kFpMin, 0.0);
        cplx d = 1.0 / b;
        cplx h = d;
        int n = -1;
        for (int k = 2; k <= kMaxIter; ++k)
        {
            n += 2;
            const double a = -n * (n + 1.0);
            b += 4.0;
            d = 1.0 / (a * d + b);
            cc = b + a / cc;
            const cplx del = cc * d;
            h *= del;
            if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < kEps)
                break;
        }
        h *= cplx(ax, -ax);
        const cplx cs = cplx(0.5, 0.5) * (1.0 - cplx(std::cos(0.5 * pix2), std::sin(0.5 * pix2)) * h);
        c = cs.real();
        s = cs.imag();
    }
    if (x < 0.0)
    {
        c = -c;
        s = -s;
    }
}

cplx transition_function(double x)
{
    if (!(x > 0.0))
        return {0.0, 0.0};
    const double sx = std::sqrt(x);
    double c = 0.0;
    double s = 0.0;
    fresnel_integrals(std::sqrt(2.0 * x / M_PI), c, s);
    const cplx tail = std::sqrt(M_PI / 2) * cplx(0.5 - c, -(0.5 - s));
    return 2.0 * cplx(0.0, 1.0) * sx * std::exp(cplx(0.0, x)) * tail;
}

EdgeCoordinates edge_coordinates(const Wedge &wedge, const Vec3 &source, const Vec3 &edge_point,
                                 const Vec3 &observation)
{
    const Vec3 &e = wedge.direction;
    const Vec3 &t = wedge.face_a_tangent;
    const Vec3 &nrm = wedge.face_a_normal;

    auto angle_of = [&](const Vec3 &p) {
        Vec3 v = p - edge_point;
        v -= e * dot(v, e);
        if (norm(v) < 1e-12)
            throw GeometryError("edge_coordinates: point lies on the edge");
        return wrap_two_pi(std::atan2(dot(v, nrm), dot(v, t)));
    };

    EdgeCoordinates out;
    out.phi_prime = angle_of(source);
    out.phi = angle_of(observation);
    const double limit = wedge.exterior_angle + kAngleTolerance;
    auto fold = [&](double &a) {
        if (a > limit)
        {
            if (a > 2.0 * M_PI - kAngleTolerance)
                a = 0.0; // on face a, approached from below the wrap
            else
                throw GeometryError("edge_coordinates: point inside wedge");
        }
        a = std::min(a, wedge.exterior_angle);
    };
    fold(out.phi_prime);
    fold(out.phi);
    out.s_prime = distance(source, edge_point);
    out.s = distance(edge_point, observation);
    const Vec3 incident = normalized(edge_point - source);
    out.beta0 = std::acos(std::clamp(dot(incident, e), -1.0, 1.0));
    return out;
}

DiffractionCoefficients utd_coefficients(double n, double phi_prime, double phi, double distance_parameter,
                                         double beta0, double k, const std::array<Material, 2> &faces,
                                         double frequency_ghz)
{
    const double sin_b0 = std::sin(beta0);
    if (sin_b0 < 1e-9)
        throw GeometryError("utd_coefficients: propagation along the edge");
    const double kl = k * distance_parameter;
    const double beta_minus = phi - phi_prime;
    const double beta_plus = phi + phi_prime;

    const cplx pre = -std::exp(cplx(0.0, -M_PI / 4)) / (2.0 * n * std::sqrt(2.0 * M_PI * k) * sin_b0);
    const cplx d1 = cot_term(+1.0, beta_minus, n, kl);
    const cplx d2 = cot_term(-1.0, beta_minus, n, kl);
    const cplx d3 = cot_term(+1.0, beta_plus, n, kl); // face n reflection boundary
    const cplx d4 = cot_term(-1.0, beta_plus, n, kl); // face 0 reflection boundary

    const double psi0 = std::min(phi_prime, M_PI - phi_prime);
    const double psin = std::min(n * M_PI - phi, M_PI - (n * M_PI - phi));

    DiffractionCoefficients out;
    for (Polarization pol : {Polarization::TE, Polarization::TM})
    {
        const cplx r0 = face_reflection(faces[0], psi0, pol, frequency_ghz);
        const cplx rn = face_reflection(faces[1], psin, pol, frequency_ghz);
        const cplx d = pre * (d1 + d2 + r0 * d4 + rn * d3);
        (pol == Polarization::TE ? out.soft : out.hard) = d;
    }
    return out;
}

DiffractionCoefficients utd_diffraction(const Wedge &wedge, const Vec3 &source, const Vec3 &edge_point,
                                        const Vec3 &observation, double frequency_ghz)
{
    const EdgeCoordinates c = edge_coordinates(wedge, source, edge_point, observation);
    const double sin_b0 = std::sin(c.beta0);
    const double l = c.s * c.s_prime * sin_b0 * sin_b0 / (c.s + c.s_prime);
    return utd_coefficients(wedge.n(), c.phi_prime, c.phi, l, c.beta0, wavenumber(frequency_ghz), wedge.materials,
                            frequency_ghz);
}

cplx wedge_total_field(double n, double phi_prime, double phi, double s_prime, double s, double frequency_ghz,
                       Polarization polarization, const std::array<Material, 2> &faces)
{
    const double k = wavenumber(frequency_ghz);
    auto polar = [](double r, double a) { return Vec3{r * std::cos(a), r * std::sin(a), 0.0}; };
    const Vec3 src = polar(s_prime, phi_prime);
    const Vec3 obs = polar(s, phi);
    auto spherical = [&](double r) { return std::exp(cplx(0.0, -k * r)) / r; };

    cplx field(0.0, 0.0);
    if (phi < M_PI + phi_prime)
        field += spherical(distance(src, obs));
    if (phi < M_PI - phi_prime)
    {
        const Vec3 image{src.x, -src.y, 0.0};
        const double grazing = std::asin(std::clamp(std::abs(src.y) / s_prime, 0.0, 1.0));
        field += face_reflection(faces[0], grazing, polarization, frequency_ghz) * spherical(distance(image, obs));
    }
    if (phi > (2.0 * n - 1.0) * M_PI - phi_prime)
    {
        // Mirror across face n, which lies at angle n pi.
        const double face = n * M_PI;
        const Vec3 image = polar(s_prime, 2.0 * face - phi_prime);
        const double grazing = std::min(face - phi_prime, M_PI - (face - phi_prime));
        field += face_reflection(faces[1], std::max(grazing, 0.0), polarization, frequency_ghz) *
                 spherical(distance(image, obs));
    }

    const double l = s * s_prime / (s + s_prime);
    const DiffractionCoefficients d = utd_coefficients(n, phi_prime, phi, l, M_PI / 2, k, faces, frequency_ghz);
    const cplx coeff = polarization == Polarization::TE ? d.soft : d.hard;
    field += spherical(s_prime) * coeff * std::sqrt(s_prime / (s * (s + s_prime))) * std::exp(cplx(0.0, -k * s));
    return field;
}

} // namespace rfplan
