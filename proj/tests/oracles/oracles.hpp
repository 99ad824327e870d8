// SPDX-License-Identifier: Apache-2.0
//
// Reference computations used by the tests. Written from first principles, sharing no code with the library.

#ifndef RFPLAN_TESTS_ORACLES_HPP
#define RFPLAN_TESTS_ORACLES_HPP

#include <array>
#include <complex>
#include <vector>

namespace oracle
{

using P3 = std::array<double, 3>;

// Free-space path loss 20 log10(4 pi d f / c).
double fspl_db(double distance_m, double frequency_ghz);

// Standard normal quantile found by bisection on 0.5 erfc(-x / sqrt 2).
double normal_quantile(double p);

// Directivity of a thin half-wave dipole by quadrature of its radiation intensity, dBi.
double half_wave_dipole_directivity_dbi();

// UTD transition function by quadrature along the steepest-descent ray of the Fresnel integral.
std::complex<double> transition_function(double x);

// Soft and hard coefficients of a perfectly conducting half-plane, normal incidence on the edge.
struct HalfPlaneCoefficients
{
    std::complex<double> soft;
    std::complex<double> hard;
};
HalfPlaneCoefficients half_plane_coefficients(double phi_prime, double phi, double distance_parameter, double k);

// Rectangle corner + a u + b v, a and b in [0, 1].
struct Plate
{
    P3 corner;
    P3 u;
    P3 v;
};

struct SpecularPath
{
    std::vector<int> plates; // reflection order
    double length = 0.0;
};

// Every specular path with at most max_reflections bounces off the plates, plates opaque to transmission.
// Includes the direct path when unobstructed. Sorted by length.
std::vector<SpecularPath> image_method_paths(const std::vector<Plate> &plates, const P3 &tx, const P3 &rx,
                                             int max_reflections);

} // namespace oracle

#endif
