// SPDX-License-Identifier: Apache-2.0

#include "rfplan/calibration.hpp"
#include "rfplan/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace rfplan;

namespace
{

RawTrace trace_of(std::vector<double> samples)
{
    RawTrace t;
    t.tx_id = "ap";
    t.rx_id = "p1";
    t.samples = std::move(samples);
    return t;
}

} // namespace

TEST_SUITE("calibration")
{
    TEST_CASE("fast-fading filter averages in linear power")
    {
        const auto constant = filter_fast_fading(trace_of(std::vector<double>(30, -60.0)), 20);
        CHECK(constant.valid);
        CHECK(constant.rxp_avg_dbm == doctest::Approx(-60.0));

        const auto two = filter_fast_fading(trace_of({-50.0, -60.0}), 1);
        CHECK(two.rxp_avg_dbm == doctest::Approx(10.0 * std::log10((1e-5 + 1e-6) / 2.0)));
        CHECK(two.rxp_avg_dbm == doctest::Approx(-52.5964).epsilon(1e-5));

        CHECK_FALSE(filter_fast_fading(trace_of({-50.0, -55.0, -60.0}), 10).valid);
        CHECK(std::isnan(filter_fast_fading(trace_of({-50.0, -55.0, -60.0}), 10).rxp_avg_dbm));
    }

    TEST_CASE("plausibility bounds on the peak-to-peak span")
    {
        FastFadingFilter f;
        std::vector<double> flat(25, -70.0);
        CHECK_FALSE(filter_fast_fading(trace_of(flat), f).valid);
        flat[3] = -75.0;
        CHECK(filter_fast_fading(trace_of(flat), f).valid);
        flat[4] = -115.0;
        CHECK_FALSE(filter_fast_fading(trace_of(flat), f).valid);
        f.max_span_db = 50.0;
        CHECK(filter_fast_fading(trace_of(flat), f).valid);
    }

    TEST_CASE("linear mean is never below the dB mean")
    {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> n(-70.0, 6.0);
        for (int trial = 0; trial < 200; ++trial)
        {
            std::vector<double> s(40);
            for (double &x : s)
                x = n(rng);
            const double db_mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
            CHECK(filter_fast_fading(trace_of(s), 1).rxp_avg_dbm >= db_mean);
        }
    }

    TEST_CASE("path loss from a measurement removes power and antennas")
    {
        auto s = filter_fast_fading(trace_of(std::vector<double>(30, -60.0)), 20);
        CHECK(pl_from_measurement(s, 20.0, 8.0, 3.0) == doctest::Approx(91.0));
        s.valid = false;
        CHECK_THROWS_AS(pl_from_measurement(s, 20.0, 8.0, 3.0), DomainError);
    }

    TEST_CASE("error statistics")
    {
        const std::vector<double> meas{-60, -70, -80, -75, -65};
        std::vector<double> pred = meas;
        for (double &p : pred)
            p += 3.0;
        const ErrorStats st = compute_error_stats(pred, meas);
        CHECK(st.rmse == doctest::Approx(3.0));
        CHECK(st.mean_error == doctest::Approx(3.0));
        CHECK(st.std_dev == doctest::Approx(0.0));
        CHECK(st.correlation == doctest::Approx(1.0));
        CHECK(st.n == 5);

        const std::vector<double> flat(5, -70.0);
        CHECK(std::isnan(compute_error_stats(flat, meas).correlation));
        CHECK(pearson_correlation({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
        CHECK_THROWS_AS(compute_error_stats({1.0}, {1.0}), DomainError);
        CHECK_THROWS_AS(compute_error_stats({1.0, 2.0}, {1.0}), DomainError);
    }

    TEST_CASE("rmse squared equals mean squared plus variance")
    {
        std::mt19937_64 rng(99);
        std::normal_distribution<double> n(0.0, 5.0);
        for (int trial = 0; trial < 50; ++trial)
        {
            std::vector<double> p(100), m(100);
            for (std::size_t i = 0; i < 100; ++i)
            {
                m[i] = -80.0 + n(rng);
                p[i] = m[i] + n(rng) + trial * 0.1;
            }
            const ErrorStats st = compute_error_stats(p, m);
            CHECK(std::abs(st.rmse * st.rmse - st.mean_error * st.mean_error - st.std_dev * st.std_dev) < 1e-9);
            CHECK(st.correlation <= 1.0);
            CHECK(st.correlation >= -1.0);
        }
    }

    TEST_CASE("tuning fit recovers a noiseless model")
    {
        std::vector<TuningSample> samples;
        for (int i = 0; i < 60; ++i)
        {
            const double d = std::pow(10.0, i / 30.0);
            const double untuned = -40.0 - 20.0 * std::log10(d);
            samples.push_back({d, untuned - (-7.7) - (26.0 - 20.0) * std::log10(d), untuned});
        }
        const TuningFit fit = fit_tuning(samples);
        CHECK(fit.params.B == doctest::Approx(26.0));
        CHECK(fit.params.A == doctest::Approx(-7.7));
        CHECK(fit.steps == 12);
        CHECK(fit.std_dev_final < 1e-9);
        CHECK(fit.std_dev_initial > fit.std_dev_final);
        CHECK(fit.warnings.empty());
    }

    TEST_CASE("tuning fit walks down when the slope is below free space")
    {
        std::vector<TuningSample> samples;
        for (int i = 0; i < 60; ++i)
        {
            const double d = std::pow(10.0, i / 30.0);
            const double untuned = -40.0 - 20.0 * std::log10(d);
            samples.push_back({d, untuned - 2.0 - (17.0 - 20.0) * std::log10(d), untuned});
        }
        const TuningFit fit = fit_tuning(samples);
        CHECK(fit.params.B == doctest::Approx(17.0));
        CHECK(fit.params.A == doctest::Approx(2.0));
    }

    TEST_CASE("tuning fit zeroes the mean error and warns on thin data")
    {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> n(0.0, 3.0);
        std::vector<TuningSample> samples;
        for (int i = 0; i < 8; ++i)
        {
            const double d = 5.0 + i;
            samples.push_back({d, -60.0 - 25.0 * std::log10(d) + n(rng), -50.0 - 20.0 * std::log10(d)});
        }
        const TuningFit fit = fit_tuning(samples);
        double mean = 0.0;
        for (const auto &s : samples)
            mean += apply_tuning(s.rxp_untuned, s.d3d, fit.params) - s.rxp_measured;
        CHECK(std::abs(mean / samples.size()) < 1e-9);
        CHECK(fit.warnings.size() == 2);
        CHECK_THROWS_AS(fit_tuning({}), DomainError);
    }

    TEST_CASE("empirical cdf")
    {
        const EmpiricalCdf cdf = empirical_cdf({3.0, 1.0, 2.0, 2.0});
        REQUIRE(cdf.steps.size() == 3);
        CHECK(cdf.steps[0].value == 1.0);
        CHECK(cdf.steps[0].probability == doctest::Approx(0.25));
        CHECK(cdf.steps[1].probability == doctest::Approx(0.75));
        CHECK(cdf.steps[2].probability == doctest::Approx(1.0));
        CHECK(cdf.mean == doctest::Approx(2.0));
        CHECK(cdf.sigma == doctest::Approx(std::sqrt(0.5)));
    }

    TEST_CASE("measurement csv round trip and traces in order of appearance")
    {
        std::istringstream in("tx_id,rx_id,x_m,y_m,z_m,sample_dbm\n"
                              "ap2,p1,1,2,0.8,-61.5\n"
                              "ap1,p1,1,2,0.8,-70\n"
                              "ap2,p1,1,2,0.8,-62.5\n"
                              "\n"
                              "ap2,p2,4,2,0.8,-80\n");
        const auto traces = read_measurements_csv(in);
        REQUIRE(traces.size() == 3);
        CHECK(traces[0].tx_id == "ap2");
        CHECK(traces[0].samples == std::vector<double>{-61.5, -62.5});
        CHECK(traces[0].first_row == 2);
        CHECK(traces[1].tx_id == "ap1");
        CHECK(traces[2].first_row == 6);
        CHECK(traces[2].position.x == 4.0);

        std::ostringstream out;
        write_measurements_csv(out, traces);
        std::istringstream again(out.str());
        const auto back = read_measurements_csv(again);
        REQUIRE(back.size() == traces.size());
        for (std::size_t i = 0; i < back.size(); ++i)
        {
            CHECK(back[i].samples == traces[i].samples);
            CHECK(back[i].position == traces[i].position);
        }
    }

    TEST_CASE("malformed measurement files name the row")
    {
        auto message = [](const std::string &text) {
            std::istringstream in(text);
            try
            {
                read_measurements_csv(in, "m.csv");
            }
            catch (const ParseError &e)
            {
                return std::string(e.what());
            }
            return std::string("no error");
        };
        CHECK(message("") .find("empty") != std::string::npos);
        CHECK(message("a,b,c\n").find("header") != std::string::npos);
        CHECK(message("tx_id,rx_id,x_m,y_m,z_m,sample_dbm\nap,p,1,2,3\n").find("m.csv row 2") != std::string::npos);
        CHECK(message("tx_id,rx_id,x_m,y_m,z_m,sample_dbm\nap,p,1,2,3,-60\nap,p,1,x,3,-60\n").find("row 3") !=
              std::string::npos);
        CHECK(message("tx_id,rx_id,x_m,y_m,z_m,sample_dbm\nap,p,1,2,3,-60\nap,p,1,2.5,3,-60\n").find("changes") !=
              std::string::npos);
        CHECK_THROWS_AS(read_measurements_csv("/nonexistent.csv"), IoError);
    }

    TEST_CASE("processed csv leaves invalid averages empty")
    {
        ProcessedSample ok;
        ok.tx_id = "ap";
        ok.rx_id = "p";
        ok.rxp_avg_dbm = -60.0;
        ok.valid = true;
        ProcessedSample bad = ok;
        bad.valid = false;
        std::ostringstream out;
        write_processed_csv(out, {ok, bad});
        const std::string text = out.str();
        CHECK(text.find(",-60.000000,1\n") != std::string::npos);
        CHECK(text.find(",,0\n") != std::string::npos);
    }
}

TEST_SUITE("calibration")
{
    TEST_CASE("path loss examples")
    {
        auto s = filter_fast_fading(trace_of(std::vector<double>(30, -60.0)), 20);
        CHECK(pl_from_measurement(s, 30.0, 10.0, 3.0) == doctest::Approx(103.0));
        s = filter_fast_fading(trace_of(std::vector<double>(30, -43.81)), 20);
        CHECK(pl_from_measurement(s, 0.0, 0.0, 0.0) == doctest::Approx(43.81));
    }

    TEST_CASE("error statistics examples")
    {
        const std::vector<double> meas{-60, -70, -80, -90};
        const ErrorStats same = compute_error_stats(meas, meas);
        CHECK(same.rmse == 0.0);
        CHECK(same.mean_error == 0.0);
        CHECK(same.correlation == doctest::Approx(1.0));
        const ErrorStats alt = compute_error_stats({-59, -71, -79, -91}, meas);
        CHECK(alt.rmse == doctest::Approx(1.0));
        CHECK(alt.mean_error == doctest::Approx(0.0));
        CHECK(alt.std_dev == doctest::Approx(1.0));
    }

    TEST_CASE("fit recovers the ground truth without noise and is idle on matching data")
    {
        std::vector<TuningSample> truth, matching;
        for (int i = 0; i < 40; ++i)
        {
            const double d = std::pow(70.0, i / 39.0);
            const double untuned = -35.0 - 20.0 * std::log10(d) - (i % 3);
            truth.push_back({d, untuned + 7.7 - 6.0 * std::log10(d), untuned});
            matching.push_back({d, untuned, untuned});
        }
        const TuningFit fit = fit_tuning(truth);
        CHECK(std::abs(fit.params.A - (-7.7)) <= 0.1);
        CHECK(std::abs(fit.params.B - 26.0) <= 0.5);
        const TuningFit idle = fit_tuning(matching);
        CHECK(idle.params.A == doctest::Approx(0.0));
        CHECK(idle.params.B == 20.0);
        CHECK(idle.std_dev_final == doctest::Approx(0.0));
    }

    TEST_CASE("empirical cdf examples")
    {
        const EmpiricalCdf three = empirical_cdf({1.0, 2.0, 3.0});
        REQUIRE(three.steps.size() == 3);
        CHECK(three.steps[0].probability == doctest::Approx(1.0 / 3.0));
        CHECK(three.steps[1].probability == doctest::Approx(2.0 / 3.0));
        const EmpiricalCdf flat = empirical_cdf({4.0, 4.0, 4.0});
        REQUIRE(flat.steps.size() == 1);
        CHECK(flat.steps[0].probability == 1.0);

        std::mt19937_64 rng(2);
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<double> v(100000);
        for (double &x : v)
            x = n(rng);
        const EmpiricalCdf fit = empirical_cdf(v);
        CHECK(std::abs(fit.mean) < 0.02);
        CHECK(std::abs(fit.sigma - 1.0) < 0.01);
    }
}
