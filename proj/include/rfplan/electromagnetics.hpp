// SPDX-License-Identifier: Apache-2.0
//
// Fresnel reflection and Kouyoumjian-Pathak UTD wedge diffraction (Luebbers form for lossy faces).

#ifndef RFPLAN_ELECTROMAGNETICS_HPP
#define RFPLAN_ELECTROMAGNETICS_HPP

#include "rfplan/geometry.hpp"
#include "rfplan/scene.hpp"
#include "rfplan/vec3.hpp"

#include <array>
#include <complex>

namespace rfplan
{

inline constexpr double kSpeedOfLight = 299792458.0;

enum class Polarization
{
    TE, // electric field perpendicular to the plane of incidence
    TM
};

double wavenumber(double frequency_ghz);

// Reflection coefficient for a plane wave at incidence angle theta (from the normal), theta in [0, pi/2).
std::complex<double> fresnel_reflection(const Material &material, double incidence_angle, Polarization polarization,
                                        double frequency_ghz);

// Normalised Fresnel integrals C(x) and S(x) with kernel cos/sin(pi t^2 / 2).
void fresnel_integrals(double x, double &c, double &s);

// UTD transition function F(X) = 2j sqrt(X) e^{jX} int_{sqrt X}^inf e^{-j tau^2} d tau, X >= 0.
std::complex<double> transition_function(double x);

struct DiffractionCoefficients
{
    std::complex<double> soft; // E parallel to the edge
    std::complex<double> hard;
};

// Edge-fixed coordinates of a diffraction event. Angles in radians; phi measured from face a.
struct EdgeCoordinates
{
    double phi_prime = 0.0;
    double phi = 0.0;
    double s_prime = 0.0; // source to edge point
    double s = 0.0;       // edge point to observer
    double beta0 = M_PI / 2;
};

// Throws GeometryError if either point lies inside the wedge.
EdgeCoordinates edge_coordinates(const Wedge &wedge, const Vec3 &source, const Vec3 &edge_point,
                                 const Vec3 &observation);

// Wedge coefficient for exterior angle n*pi. distance_parameter is s s' sin^2(beta0) / (s + s').
DiffractionCoefficients utd_coefficients(double n, double phi_prime, double phi, double distance_parameter,
                                         double beta0, double k, const std::array<Material, 2> &faces,
                                         double frequency_ghz);

DiffractionCoefficients utd_diffraction(const Wedge &wedge, const Vec3 &source, const Vec3 &edge_point,
                                        const Vec3 &observation, double frequency_ghz);

// Coherent GO plus diffracted field around an edge with source and observer in the plane normal to
// the edge, unit source amplitude. Used to study the behaviour across shadow and reflection boundaries.
std::complex<double> wedge_total_field(double n, double phi_prime, double phi, double s_prime, double s,
                                       double frequency_ghz, Polarization polarization,
                                       const std::array<Material, 2> &faces);

} // namespace rfplan

#endif
