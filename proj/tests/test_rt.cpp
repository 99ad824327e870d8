// SPDX-License-Identifier: Apache-2.0

#include "oracles/oracles.hpp"
#include "support.hpp"

#include "rfplan/error.hpp"
#include "rfplan/rt.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace rfplan;
using testing::add_box;
using testing::add_sheet;
using testing::empty_scene;

namespace
{

RtConfig small_config()
{
    RtConfig cfg;
    cfg.launch_count = 20000;
    cfg.diffraction_launch_count = 64;
    return cfg;
}

const PropagationPath *find_signature(const std::vector<PropagationPath> &paths, const std::string &sig)
{
    for (const auto &p : paths)
        if (p.signature() == sig)
            return &p;
    return nullptr;
}

} // namespace

TEST_SUITE("rt")
{
    TEST_CASE("free-space path loss closed form")
    {
        CHECK(fspl_db(1.0, 3.7) == doctest::Approx(oracle::fspl_db(1.0, 3.7)).epsilon(1e-14));
        CHECK(fspl_db(100.0, 0.9) == doctest::Approx(oracle::fspl_db(100.0, 0.9)).epsilon(1e-14));
        CHECK(fspl_db(20.0, 3.7) - fspl_db(2.0, 3.7) == doctest::Approx(20.0));
        CHECK_THROWS_AS(fspl_db(0.0, 3.7), DomainError);
    }

    TEST_CASE("empty scene yields the single direct path")
    {
        const Scene s = empty_scene({-1, -1, -1}, {20, 20, 5});
        const Geometry g(s);
        const auto paths = trace_paths(g, {0, 0, 1}, {7, 3, 2}, small_config());
        REQUIRE(paths.size() == 1);
        CHECK(paths[0].signature().empty());
        CHECK(paths[0].length == doctest::Approx(std::sqrt(49.0 + 9.0 + 1.0)));
        CHECK(paths[0].gain_db == doctest::Approx(-oracle::fspl_db(paths[0].length, 3.7)));
        CHECK(norm(paths[0].departure) == doctest::Approx(1.0));
        CHECK(distance(paths[0].departure, -paths[0].arrival) < 1e-12);
    }

    TEST_CASE("metal ground plate adds the image-method reflection")
    {
        Scene s = empty_scene({-10, -10, -2}, {30, 10, 5});
        add_sheet(s, "ground", {-10, -10, 0}, {40, 0, 0}, {0, 20, 0}, "metal");
        const Geometry g(s);
        const Vec3 tx{0, 0, 2}, rx{12, 0, 1.5};
        const auto paths = trace_paths(g, tx, rx, small_config());
        const auto *refl = find_signature(paths, "R0");
        REQUIRE(refl != nullptr);
        CHECK(refl->length == doctest::Approx(distance(Vec3{0, 0, -2}, rx)));
        REQUIRE(refl->interactions.size() == 1);
        const Vec3 p = refl->interactions[0].point;
        CHECK(p.z == doctest::Approx(0.0));
        CHECK(p.x == doctest::Approx(12.0 * 2.0 / 3.5));
        CHECK(refl->interactions[0].loss_db >= 0.0);
        CHECK(refl->interactions[0].loss_db < 0.5);
        CHECK(find_signature(paths, "") != nullptr);
    }

    TEST_CASE("transmission through a concrete wall costs rate times thickness")
    {
        Scene s = empty_scene({-1, -5, -1}, {20, 5, 5});
        add_box(s, "wall", {5, -50, -50}, {0.2, 100, 100});
        const Geometry g(s);
        RtConfig cfg = small_config();
        cfg.max_reflections = 0;
        cfg.max_diffractions = 0;
        const auto paths = trace_paths(g, {0, 0, 1}, {10, 0, 1}, cfg);
        REQUIRE(paths.size() == 1);
        REQUIRE(paths[0].interactions.size() == 1);
        const auto &t = paths[0].interactions[0];
        CHECK(t.kind == InteractionKind::transmission);
        CHECK(t.chord_m == doctest::Approx(0.2));
        CHECK(t.loss_db == doctest::Approx(0.2 * s.material("concrete").transmission_loss_rate));
        CHECK(path_gain(paths[0], 3.7) == doctest::Approx(-fspl_db(10.0, 3.7) - t.loss_db));
    }

    TEST_CASE("edge diffraction finds the shortest path over the edge")
    {
        Scene s = empty_scene({-5, -5, -1}, {15, 5, 8});
        add_sheet(s, "screen", {5, -50, -50}, {0, 100, 0}, {0, 0, 51.5});
        const Geometry g(s);
        RtConfig cfg = small_config();
        cfg.max_reflections = 0;
        const Vec3 tx{0, 0.3, 1.0}, rx{10, -0.4, 0.8};
        const auto paths = trace_paths(g, tx, rx, cfg);
        const PropagationPath *best = nullptr;
        for (const auto &p : paths)
            if (p.diffraction_count() == 1 && (!best || p.length < best->length))
                best = &p;
        REQUIRE(best != nullptr);
        // Brute force over the top edge y in [-50, 50] at x = 5, z = 1.5.
        double shortest = 1e300;
        for (int i = 0; i <= 200000; ++i)
        {
            const Vec3 q{5.0, -50.0 + i * 0.0005, 1.5};
            shortest = std::min(shortest, distance(tx, q) + distance(q, rx));
        }
        CHECK(best->length == doctest::Approx(shortest).epsilon(1e-8));
        CHECK(best->interactions[0].loss_db >= 0.0);
    }

    TEST_CASE("incoherent aggregation and tuning")
    {
        PropagationPath a, b;
        a.gain_db = -60.0;
        a.departure = b.departure = {1, 0, 0};
        a.arrival = b.arrival = {-1, 0, 0};
        b.gain_db = -60.0;
        CHECK(aggregate_gain({a, b}) == doctest::Approx(-60.0 + 10.0 * std::log10(2.0)));
        CHECK(aggregate_rx_power({a, b}, {AntennaModel::isotropic, 3.0}, {}, 20.0) ==
              doctest::Approx(-37.0 + 10.0 * std::log10(2.0)));
        CHECK(aggregate_gain({}) == kNoCoverage);

        CHECK(apply_tuning(-50.0, 10.0, {-7.7, 26.0}) == doctest::Approx(-50.0 + 7.7 - 6.0));
        CHECK(apply_tuning(-50.0, 1.0, {-7.7, 26.0}) == doctest::Approx(-42.3));
        CHECK(apply_tuning(-50.0, 35.0, {}) == -50.0);
        CHECK_THROWS_AS(apply_tuning(-50.0, 0.0, {}), DomainError);
    }

    TEST_CASE("results do not depend on the thread count")
    {
        Scene s = empty_scene({0, 0, 0}, {20, 15, 5});
        add_box(s, "floor", {0, 0, -0.2}, {20, 15, 0.2});
        add_box(s, "wall", {0, 15, 0}, {20, 0.2, 5});
        add_box(s, "crate", {8, 5, 0}, {2, 2, 2}, "metal");
        add_sheet(s, "pane", {14, 2, 0}, {0, 5, 0}, {0, 0, 2.5}, "glass");
        const Geometry g(s);
        std::vector<Vec3> rx;
        for (int i = 0; i < 40; ++i)
            rx.push_back({1.0 + 0.45 * i, 2.0 + 0.3 * (i % 7), 1.2});
        RtConfig cfg = small_config();
        const auto one = trace_many(g, {3, 10, 3}, rx, cfg);
        cfg.threads = 3;
        const auto three = trace_many(g, {3, 10, 3}, rx, cfg);
        REQUIRE(one.size() == three.size());
        for (std::size_t i = 0; i < one.size(); ++i)
        {
            REQUIRE(one[i].size() == three[i].size());
            for (std::size_t k = 0; k < one[i].size(); ++k)
            {
                CHECK(one[i][k].signature() == three[i][k].signature());
                CHECK(one[i][k].length == three[i][k].length);
                CHECK(one[i][k].gain_db == three[i][k].gain_db);
            }
        }
    }

    TEST_CASE("every path obeys the geometric lower bound")
    {
        Scene s = empty_scene({0, 0, 0}, {20, 15, 5});
        add_box(s, "floor", {0, 0, -0.2}, {20, 15, 0.2});
        add_box(s, "crate", {8, 5, 0}, {2, 2, 2}, "metal");
        const Geometry g(s);
        const Vec3 tx{3, 10, 3};
        for (const Vec3 rx : {Vec3{15, 3, 1}, Vec3{10, 4, 1}, Vec3{9, 8, 0.5}})
        {
            const auto paths = trace_paths(g, tx, rx, small_config());
            CHECK_FALSE(paths.empty());
            for (const auto &p : paths)
            {
                CHECK(p.length >= distance(tx, rx) - 1e-9);
                CHECK(p.reflection_count() <= 2);
                CHECK(p.diffraction_count() <= 1);
                CHECK(p.gain_db <= -fspl_db(p.length, 3.7) + 1e-9);
            }
        }
    }

    TEST_CASE("grid prediction in free space")
    {
        const Scene s = empty_scene({-1, -1, -1}, {11, 11, 4});
        const Geometry g(s);
        GridSpec spec{0, 0, 10, 10, 2.5, 1.5};
        const CoverageGrid cg = predict_grid(g, {5.1, 5.2, 3}, spec, small_config(), {});
        REQUIRE(cg.size() == 16);
        for (std::size_t i = 0; i < cg.size(); ++i)
            CHECK(cg.values[i] == doctest::Approx(-oracle::fspl_db(distance(cg.point(i), {5.1, 5.2, 3}), 3.7)));
        const CoverageGrid tuned = predict_grid(g, {5.1, 5.2, 3}, spec, small_config(), {-7.7, 26.0});
        for (std::size_t i = 0; i < cg.size(); ++i)
            CHECK(tuned.values[i] ==
                  doctest::Approx(apply_tuning(cg.values[i], distance(cg.point(i), {5.1, 5.2, 3}), {-7.7, 26.0})));
    }

    TEST_CASE("invalid configuration is rejected")
    {
        const Scene s = empty_scene({-1, -1, -1}, {11, 11, 4});
        const Geometry g(s);
        RtConfig cfg;
        cfg.max_reflections = 3;
        CHECK_THROWS_AS(trace_paths(g, {0, 0, 1}, {5, 0, 1}, cfg), ValidationError);
        CHECK_THROWS_AS(trace_paths(g, {0, 0, 1}, {0, 0, 1}, RtConfig{}), GeometryError);
    }

    TEST_CASE("path json lists interactions")
    {
        Scene s = empty_scene({-10, -10, -2}, {30, 10, 5});
        add_sheet(s, "ground", {-10, -10, 0}, {40, 0, 0}, {0, 20, 0}, "metal");
        const Geometry g(s);
        const auto paths = trace_paths(g, {0, 0, 2}, {12, 0, 1.5}, small_config());
        const auto j = paths_to_json(paths, g);
        REQUIRE(j.is_array());
        CHECK(j.size() == paths.size());
    }
}

TEST_SUITE("rt")
{
    TEST_CASE("free-space gain at one and ten metres")
    {
        const Scene s = empty_scene({-1, -1, -1}, {20, 20, 5});
        const Geometry g(s);
        for (auto [d, want] : {std::pair{1.0, -43.81}, std::pair{10.0, -63.81}})
        {
            const auto paths = trace_paths(g, {0, 0, 1}, {d, 0, 1}, small_config());
            REQUIRE(paths.size() == 1);
            CHECK(paths[0].gain_db == doctest::Approx(want).epsilon(1e-4));
            CHECK(aggregate_rx_power(paths, {}, {}, 0.0) == doctest::Approx(want).epsilon(1e-4));
        }
    }

    TEST_CASE("wall beside the link adds a 10.198 m reflection")
    {
        Scene s = empty_scene({-10, -10, -1}, {20, 10, 5});
        add_box(s, "wall", {-50, -1.3, -50}, {100, 0.3, 100});
        const Geometry g(s);
        const auto paths = trace_paths(g, {0, 0, 1}, {10, 0, 1}, small_config());
        const PropagationPath *refl = nullptr;
        for (const auto &p : paths)
            if (p.reflection_count() == 1 && p.diffraction_count() == 0)
                refl = &p;
        REQUIRE(refl != nullptr);
        CHECK(refl->length == doctest::Approx(std::sqrt(104.0)).epsilon(1e-9));
        CHECK(refl->gain_db == doctest::Approx(-fspl_db(refl->length, 3.7) - refl->interactions[0].loss_db));
    }

    TEST_CASE("interactions disabled leaves the direct path")
    {
        Scene s = empty_scene({-10, -10, -1}, {20, 10, 5});
        add_box(s, "far", {15, 5, 0}, {2, 2, 2}, "metal");
        const Geometry g(s);
        RtConfig cfg = small_config();
        cfg.max_reflections = 0;
        cfg.max_diffractions = 0;
        const auto paths = trace_paths(g, {0, 0, 1}, {10, 0, 1}, cfg);
        REQUIRE(paths.size() == 1);
        CHECK(paths[0].interactions.empty());
    }

    TEST_CASE("deep shadow diffraction is weaker than free space")
    {
        Scene s = empty_scene({-5, -5, -1}, {15, 5, 8});
        add_sheet(s, "screen", {5, -50, -50}, {0, 100, 0}, {0, 0, 53});
        const Geometry g(s);
        RtConfig cfg = small_config();
        cfg.max_reflections = 0;
        const auto paths = trace_paths(g, {0, 0, 0}, {10, 0, -1}, cfg);
        REQUIRE_FALSE(paths.empty());
        for (const auto &p : paths)
        {
            CHECK(p.diffraction_count() == 1);
            CHECK(p.gain_db < -fspl_db(p.length, 3.7));
        }
    }

    TEST_CASE("incoherent sum of two equal paths")
    {
        PropagationPath a;
        a.gain_db = -50.0;
        a.departure = {1, 0, 0};
        a.arrival = {-1, 0, 0};
        CHECK(aggregate_rx_power({a, a}, {}, {}, 0.0) == doctest::Approx(-46.99).epsilon(1e-4));
        CHECK(aggregate_rx_power({}, {}, {}, 0.0) == kNoCoverage);
        CHECK(apply_tuning(-60.0, 10.0, {-7.7, 26.0}) == doctest::Approx(-58.3));
    }

    TEST_CASE("a metal block shadows the pixels behind it")
    {
        Scene s = empty_scene({-1, -11, -1}, {21, 11, 5});
        add_box(s, "block", {8, -3, -1}, {1, 2, 6}, "metal");
        const Geometry g(s);
        const Vec3 tx{2, 0, 1.5};
        GridSpec spec{0, -10, 20, 20, 1, 1.5};
        const CoverageGrid cg = predict_grid(g, tx, spec, small_config(), {});
        // (12.5, -4.5) sits behind the block; its mirror image across y = 0 does not.
        const double hidden = cg.at(12, 5), open = cg.at(12, 14);
        CHECK(distance(cg.spec.point(12, 5), tx) == doctest::Approx(distance(cg.spec.point(12, 14), tx)));
        CHECK(hidden < open);
    }
}
