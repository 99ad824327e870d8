// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "rfplan/error.hpp"
#include "rfplan/inf.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace rfplan;

TEST_SUITE("inf")
{
    TEST_CASE("InF-SH coefficients")
    {
        const double lf = std::log10(3.7);
        for (double d : {1.0, 3.0, 10.0, 47.0, 600.0})
        {
            CHECK(pl_los(d, 3.7) == doctest::Approx(31.84 + 21.5 * std::log10(d) + 19.0 * lf));
            const double nlos = 32.4 + 23.0 * std::log10(d) + 20.0 * lf;
            CHECK(pl_nlos(d, 3.7) == doctest::Approx(std::max(nlos, pl_los(d, 3.7))));
        }
        CHECK(pl_los(1.0, 3.7) == doctest::Approx(42.64).epsilon(1e-4));
        CHECK(pl_los(10.0, 3.7) == doctest::Approx(64.14).epsilon(1e-4));
        CHECK(pl_nlos(10.0, 3.7) == doctest::Approx(66.76).epsilon(1e-4));
    }

    TEST_CASE("NLoS never below LoS and both increase with distance")
    {
        double prev_los = 0.0, prev_nlos = 0.0;
        for (int i = 0; i <= 300; ++i)
        {
            const double d = std::pow(10.0, i / 100.0);
            for (double f : {0.7, 3.7, 28.0})
                CHECK(pl_nlos(d, f) >= pl_los(d, f));
            const double los = pl_los(d, 3.7), nlos = pl_nlos(d, 3.7);
            if (i > 0)
            {
                CHECK(los > prev_los);
                CHECK(nlos >= prev_nlos);
            }
            prev_los = los;
            prev_nlos = nlos;
        }
    }

    TEST_CASE("distances below one metre are outside the model")
    {
        CHECK_THROWS_AS(pl_los(0.5, 3.7), DomainError);
        CHECK_THROWS_AS(pl_nlos(0.99, 3.7), DomainError);
        CHECK_THROWS_AS(pl_los(5.0, 0.0), DomainError);
    }

    TEST_CASE("preset coefficients are fixed, custom ones are free")
    {
        InfModelParams p = InfModelParams::inf_sh();
        CHECK_NOTHROW(p.validate());
        p.los_slope = 20.0;
        CHECK_THROWS_AS(p.validate(), ValidationError);
        p.scenario = InfScenario::custom;
        CHECK_NOTHROW(p.validate());
        CHECK(pl_los(10.0, 3.7, p) == doctest::Approx(31.84 + 20.0 + 19.0 * std::log10(3.7)));
        p.sigma_sf_los = 0.0;
        CHECK_THROWS_AS(p.validate(), ValidationError);
    }

    TEST_CASE("shadow fading is seeded per point")
    {
        SfSampler sampler;
        sampler.seed = 1234;
        sampler.duplicates_per_point = 50;
        const std::vector<SfPoint> pts{{5.0, true}, {12.0, false}, {30.0, true}};
        const auto a = sample_shadow_fading(pts, 3.7, {}, sampler);
        CHECK(a.size() == 150);
        CHECK(sample_shadow_fading(pts, 3.7, {}, sampler) == a);
        // A point's draws do not depend on the points after it.
        const auto prefix = sample_shadow_fading({pts[0]}, 3.7, {}, sampler);
        CHECK(std::equal(prefix.begin(), prefix.end(), a.begin()));
        sampler.seed = 1235;
        CHECK(sample_shadow_fading(pts, 3.7, {}, sampler) != a);
    }

    TEST_CASE("shadow fading moments")
    {
        SfSampler sampler;
        sampler.duplicates_per_point = 40000;
        for (bool los : {true, false})
        {
            const auto v = sample_shadow_fading({{20.0, los}}, 3.7, {}, sampler);
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double var = 0.0;
            for (double x : v)
                var += (x - mean) * (x - mean);
            const double sd = std::sqrt(var / (v.size() - 1));
            const double sigma = los ? 4.3 : 5.9;
            CHECK(mean == doctest::Approx(pl_inf(20.0, 3.7, los)).epsilon(5.0 * sigma / 200.0 / mean));
            CHECK(sd == doctest::Approx(sigma).epsilon(0.02));
        }
        sampler.duplicates_per_point = 0;
        CHECK_THROWS_AS(sample_shadow_fading({{20.0, true}}, 3.7, {}, sampler), ValidationError);
    }

    TEST_CASE("gain prediction classifies line of sight from the geometry")
    {
        Scene s = testing::empty_scene({-1, -6, -1}, {21, 6, 5});
        testing::add_box(s, "wall", {10, -5, 0}, {0.3, 5, 4});
        const Geometry g(s);
        const Vec3 tx{2, -2.5, 1.5};
        const std::vector<Vec3> rx{{15, -2.5, 1.5}, {15, 2.5, 1.5}, {2.3, -2.5, 1.5}};
        const auto gain = predict_inf_gain(g, tx, rx, 3.7, {});
        CHECK(gain[0] == doctest::Approx(-pl_nlos(13.0, 3.7)));
        CHECK(gain[1] == doctest::Approx(-pl_los(distance(tx, rx[1]), 3.7)));
        CHECK(gain[2] == doctest::Approx(-pl_los(1.0, 3.7)));
        CHECK(predict_inf_gain(g, tx, rx, 3.7, {}, 3) == gain);

        GridSpec spec{0, -5, 20, 10, 2, 1.5};
        const CoverageGrid cg = predict_grid_with_visibility(g, tx, spec, 3.7, {});
        CHECK(cg.values == predict_inf_gain(g, tx, cg.points(), 3.7, {}));
    }
}

TEST_SUITE("inf")
{
    TEST_CASE("spot values")
    {
        CHECK(pl_los(100.0, 3.7) == doctest::Approx(85.64).epsilon(1e-4));
        CHECK(pl_nlos(1.0, 3.7) == doctest::Approx(43.76).epsilon(1e-4));
    }

    TEST_CASE("vanishing sigma gives the mean path loss")
    {
        InfModelParams p;
        p.scenario = InfScenario::custom;
        p.sigma_sf_los = 1e-300;
        SfSampler sampler;
        sampler.duplicates_per_point = 20;
        for (double v : sample_shadow_fading({{8.0, true}}, 3.7, p, sampler))
            CHECK(v == doctest::Approx(pl_los(8.0, 3.7)));
    }

    TEST_CASE("empty scene grid is line of sight everywhere")
    {
        const Scene s = testing::empty_scene({-1, -1, -1}, {21, 11, 5});
        const Geometry g(s);
        const Vec3 tx{10.2, 5.3, 3};
        const CoverageGrid cg = predict_grid_with_visibility(g, tx, GridSpec{0, 0, 20, 10, 2, 1.5}, 3.7, {});
        for (std::size_t i = 0; i < cg.size(); ++i)
            CHECK(cg.values[i] == doctest::Approx(-pl_los(std::max(1.0, distance(cg.point(i), tx)), 3.7)));
    }
}
