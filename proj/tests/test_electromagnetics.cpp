// SPDX-License-Identifier: Apache-2.0

#include "oracles/oracles.hpp"
#include "support.hpp"

#include "rfplan/electromagnetics.hpp"
#include "rfplan/error.hpp"

#include <doctest.h>

#include <random>

using namespace rfplan;

namespace
{

Material lossless(double eps)
{
    Material m;
    m.name = "lossless";
    m.eps_real = eps;
    return m;
}

Material pec()
{
    Material m;
    m.name = "pec";
    m.perfect_conductor = true;
    return m;
}

} // namespace

TEST_SUITE("electromagnetics")
{
    TEST_CASE("wavenumber")
    {
        CHECK(wavenumber(3.7) == doctest::Approx(2.0 * M_PI * 3.7e9 / 299792458.0));
    }

    TEST_CASE("fresnel coefficients at normal incidence")
    {
        for (double eps : {2.0, 5.24, 80.0})
        {
            const double r = (1.0 - std::sqrt(eps)) / (1.0 + std::sqrt(eps));
            const auto te = fresnel_reflection(lossless(eps), 0.0, Polarization::TE, 3.7);
            const auto tm = fresnel_reflection(lossless(eps), 0.0, Polarization::TM, 3.7);
            CHECK(te.real() == doctest::Approx(r));
            CHECK(tm.real() == doctest::Approx(-r));
            CHECK(std::abs(te.imag()) < 1e-15);
        }
    }

    TEST_CASE("TM coefficient vanishes at the Brewster angle")
    {
        const double eps = 6.27;
        const auto tm = fresnel_reflection(lossless(eps), std::atan(std::sqrt(eps)), Polarization::TM, 3.7);
        CHECK(std::abs(tm) < 1e-12);
    }

    TEST_CASE("passive materials reflect at most the incident power")
    {
        for (const auto &[name, m] : default_material_catalog())
            for (int i = 0; i < 90; ++i)
                for (Polarization pol : {Polarization::TE, Polarization::TM})
                    CHECK(std::abs(fresnel_reflection(m, i * M_PI / 180.0, pol, 3.7)) <= 1.0 + 1e-12);
        const auto g = fresnel_reflection(lossless(5.0), M_PI / 2 - 1e-7, Polarization::TE, 3.7);
        CHECK(g.real() == doctest::Approx(-1.0).epsilon(1e-5));
        CHECK(fresnel_reflection(pec(), 0.3, Polarization::TE, 3.7) == std::complex<double>(-1.0, 0.0));
        CHECK(fresnel_reflection(pec(), 0.3, Polarization::TM, 3.7) == std::complex<double>(1.0, 0.0));
        CHECK_THROWS_AS(fresnel_reflection(lossless(5.0), M_PI / 2, Polarization::TE, 3.7), DomainError);
    }

    TEST_CASE("fresnel integrals reference values")
    {
        struct Ref
        {
            double x, c, s;
        };
        for (const Ref r : {Ref{0.5, 0.4923442258714464, 0.0647324328599993},
                            Ref{1.0, 0.7798934003768228, 0.4382591473903548},
                            Ref{2.0, 0.4882534060753408, 0.3434156783636982},
                            Ref{10.0, 0.4998986942055157, 0.4681699785848822}})
        {
            double c = 0.0, s = 0.0;
            fresnel_integrals(r.x, c, s);
            CHECK(c == doctest::Approx(r.c).epsilon(1e-10));
            CHECK(s == doctest::Approx(r.s).epsilon(1e-10));
            double cn = 0.0, sn = 0.0;
            fresnel_integrals(-r.x, cn, sn);
            CHECK(cn == doctest::Approx(-c));
            CHECK(sn == doctest::Approx(-s));
        }
    }

    TEST_CASE("transition function matches contour quadrature")
    {
        for (double x : {1e-4, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0, 300.0})
        {
            const auto got = transition_function(x);
            const auto want = oracle::transition_function(x);
            CHECK(std::abs(got - want) < 1e-7 * std::max(1.0, std::abs(want)));
        }
        CHECK(std::abs(transition_function(1e4) - std::complex<double>(1.0, 0.0)) < 1e-4);
        CHECK(std::abs(transition_function(0.0)) == doctest::Approx(0.0));
    }

    TEST_CASE("half-plane coefficients match the closed form")
    {
        const std::array<Material, 2> faces{pec(), pec()};
        const double k = wavenumber(3.7);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> ang(0.05, 2.0 * M_PI - 0.05), dist(0.5, 30.0);
        int compared = 0;
        while (compared < 200)
        {
            const double phi_p = ang(rng), phi = ang(rng), l = dist(rng);
            if (std::abs(std::cos((phi - phi_p) / 2)) < 0.05 || std::abs(std::cos((phi + phi_p) / 2)) < 0.05)
                continue;
            const auto got = utd_coefficients(2.0, phi_p, phi, l, M_PI / 2, k, faces, 3.7);
            const auto want = oracle::half_plane_coefficients(phi_p, phi, l, k);
            CHECK(std::abs(got.soft - want.soft) < 1e-6 * std::abs(want.soft) + 1e-12);
            CHECK(std::abs(got.hard - want.hard) < 1e-6 * std::abs(want.hard) + 1e-12);
            ++compared;
        }
    }

    TEST_CASE("perfectly conducting wedge coefficients are reciprocal")
    {
        const std::array<Material, 2> faces{pec(), pec()};
        const double k = wavenumber(3.7);
        const double n = 1.5;
        for (double phi_p : {0.3, 1.0, 2.0})
            for (double phi : {0.5, 1.7, 3.9})
            {
                const auto a = utd_coefficients(n, phi_p, phi, 4.0, M_PI / 2, k, faces, 3.7);
                const auto b = utd_coefficients(n, phi, phi_p, 4.0, M_PI / 2, k, faces, 3.7);
                CHECK(std::abs(a.soft - b.soft) < 1e-10 * std::abs(a.soft));
                CHECK(std::abs(a.hard - b.hard) < 1e-10 * std::abs(a.hard));
            }
    }

    TEST_CASE("total field is continuous across the boundaries of a lossy wedge")
    {
        const auto cat = default_material_catalog();
        const std::array<Material, 2> faces{cat.at("concrete"), cat.at("concrete")};
        const double n = 1.5;
        const double phi_p = 50.0 * M_PI / 180.0;
        for (double boundary_deg : {180.0 - 50.0, 180.0 + 50.0})
            for (Polarization pol : {Polarization::TE, Polarization::TM})
            {
                auto level = [&](double deg) {
                    return 20.0 * std::log10(std::abs(
                                      wedge_total_field(n, phi_p, deg * M_PI / 180.0, 8.0, 8.0, 3.7, pol, faces)));
                };
                CHECK(std::abs(level(boundary_deg + 1e-4) - level(boundary_deg - 1e-4)) < 0.05);
            }
    }

    TEST_CASE("edge coordinates on a box edge")
    {
        Scene s = testing::empty_scene({-5, -5, -5}, {5, 5, 5});
        testing::add_box(s, "b", {0, 0, 0}, {1, 1, 1});
        const Geometry g(s);
        // The vertical edge at x = 1, y = 1.
        const Wedge *edge = nullptr;
        for (const auto &w : g.wedges())
            if (std::abs(w.start.x - 1) < 1e-12 && std::abs(w.start.y - 1) < 1e-12 &&
                std::abs(w.end.x - 1) < 1e-12 && std::abs(w.end.y - 1) < 1e-12)
                edge = &w;
        REQUIRE(edge != nullptr);
        const Vec3 q{1, 1, 0.5};
        const auto c = edge_coordinates(*edge, {3, 1.5, 0.5}, q, {1.5, 3, 0.5});
        CHECK(c.s_prime == doctest::Approx(distance(Vec3{3, 1.5, 0.5}, q)));
        CHECK(c.s == doctest::Approx(distance(Vec3{1.5, 3, 0.5}, q)));
        CHECK(c.beta0 == doctest::Approx(M_PI / 2));
        CHECK(c.phi_prime >= 0.0);
        CHECK(c.phi <= edge->exterior_angle + 1e-12);
        CHECK(std::abs(c.phi - c.phi_prime) == doctest::Approx(std::atan(4.0) - std::atan(0.25)).epsilon(1e-9));
        CHECK_THROWS_AS(edge_coordinates(*edge, {0.5, 0.5, 0.5}, q, {1.5, 3, 0.5}), GeometryError);
    }
}

TEST_SUITE("electromagnetics")
{
    TEST_CASE("normal incidence on the lift-equivalent permittivity")
    {
        const auto r = fresnel_reflection(lossless(5.31), 0.0, Polarization::TE, 3.7);
        CHECK(std::abs(r) == doctest::Approx(0.3947).epsilon(1e-4));
        CHECK(20.0 * std::log10(std::abs(r)) == doctest::Approx(-8.07).epsilon(1e-3));
        CHECK(std::abs(fresnel_reflection(lossless(5.31), std::atan(std::sqrt(5.31)), Polarization::TM, 3.7)) < 1e-6);
        for (double angle : {0.0, 0.5, 1.2})
            CHECK(std::abs(fresnel_reflection(lossless(1e9), angle, Polarization::TE, 3.7)) ==
                  doctest::Approx(1.0).epsilon(1e-3));
    }
}
