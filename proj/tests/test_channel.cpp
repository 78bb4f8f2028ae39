// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include "vmimo/channel.hpp"
#include "vmimo/geometry.hpp"
#include "vmimo/rng.hpp"

#include <numeric>

using namespace vmimo;

TEST_SUITE("channel") {

TEST_CASE("path loss model") {
    PropagationParams p;
    // 1 km: the intercept alone.
    CHECK(linear_to_db(path_gain(1000.0, p)) == doctest::Approx(-103.4).epsilon(1e-12));
    // 10 m: 103.4 + 24.2 log10(0.01).
    CHECK(linear_to_db(path_gain(10.0, p)) == doctest::Approx(-(103.4 - 48.4)).epsilon(1e-12));
    // Clamped below the minimum distance.
    CHECK(path_gain(0.0, p) == path_gain(p.min_distance_m, p));
    CHECK(p.gain_constant_m() * std::pow(20.0, -p.alpha()) == doctest::Approx(path_gain(20.0, p)).epsilon(1e-12));
}

TEST_CASE("unit conversions") {
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
    CHECK(dbm_to_watts(-101.0) == doctest::Approx(7.943282347242789e-14));
    CHECK(watts_to_dbm(dbm_to_watts(17.5)) == doctest::Approx(17.5));
    CHECK(db_to_linear(-10.0) == doctest::Approx(0.1));
}

TEST_CASE("power control hits the target until saturation") {
    PowerControlPolicy pol;
    const PropagationParams pp;
    for (double d : {1.0, 5.0, 20.0, 60.0}) {
        const double g = path_gain(d, pp);
        const PowerDecision pc = power_control(g, pol);
        CHECK_FALSE(pc.saturated);
        CHECK(watts_to_dbm(pc.power_w * g) == doctest::Approx(-80.0).epsilon(1e-12));
    }
    // 100 dB of loss needs 20 dBm: exactly the cap, not flagged.
    const PowerDecision edge = power_control(db_to_linear(-100.0), pol);
    CHECK_FALSE(edge.saturated);
    CHECK(edge.power_w == doctest::Approx(0.1));
    const PowerDecision sat = power_control(db_to_linear(-110.0), pol);
    CHECK(sat.saturated);
    CHECK(sat.power_w == doctest::Approx(0.1));
    CHECK_THROWS_AS(power_control(0.0, pol), std::invalid_argument);
}

TEST_CASE("received power is constant across non-saturated links") {
    PropagationParams pp;
    PowerControlPolicy pol;
    std::vector<double> rx;
    for (int i = 0; i < 100; ++i) {
        Substream sh(7, {static_cast<std::uint64_t>(i)}), fa(8, {static_cast<std::uint64_t>(i)});
        const LinkChannel l = build_link(Point(0, 0), Point(1.0 + i, 3.0), 1, pp, pol, sh, fa);
        if (!l.saturated)
            rx.push_back(l.tx_power * l.mean_gain);
    }
    REQUIRE(rx.size() > 50);
    for (double r : rx)
        CHECK(r == doctest::Approx(dbm_to_watts(-80.0)).epsilon(1e-9));
}

TEST_CASE("build_link powers against the serving gain when given") {
    PropagationParams pp;
    pp.sigma_db = 0.0;
    Substream sh(1), fa(2);
    const double serving = path_gain(10.0, pp);
    const LinkChannel l = build_link(Point(0, 0), Point(50, 0), 4, pp, PowerControlPolicy{}, sh, fa, serving, false);
    CHECK(l.tx_power == doctest::Approx(dbm_to_watts(-80.0) / serving));
    CHECK(l.gain_vector.size() == 4);
    CHECK(l.gain_vector.squaredNorm() == doctest::Approx(4.0 * l.mean_gain));
}

TEST_CASE("shadowing and fading moments") {
    Substream rng(99);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, fad = 0.0;
    for (int i = 0; i < n; ++i) {
        const double db = linear_to_db(sample_shadowing(8.0, rng));
        s1 += db;
        s2 += db * db;
        fad += sample_rayleigh(1, rng).squaredNorm();
    }
    const double mean = s1 / n, sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(mean) < 0.1);
    CHECK(sd == doctest::Approx(8.0).epsilon(0.01));
    CHECK(fad / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(sample_shadowing(0.0, rng) == 1.0);
    CHECK_THROWS(sample_shadowing(-1.0, rng));
}

TEST_CASE("substreams are keyed, not ordered") {
    Substream a(5, {1, 2}), b(5, {1, 2}), c(5, {2, 1});
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    CHECK(x != z);
    CHECK(derive_seed(1, {}) != derive_seed(2, {}));
}

TEST_CASE("PPP sampling") {
    std::mt19937_64 gen(3);
    const Field f{100.0, 50.0};
    double total = 0.0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        const auto pts = sample_ppp(0.01, f, gen);
        total += static_cast<double>(pts.size());
        for (const Point &p : pts)
            CHECK(f.contains(p));
    }
    CHECK(total / reps == doctest::Approx(50.0).epsilon(0.03));
    CHECK(sample_ppp(0.0, f, gen).empty());
    CHECK_THROWS(sample_ppp(-1.0, f, gen));

    double inside_half = 0.0, n_disk = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto pts = sample_ppp_disk(0.05, Point(3, 4), 10.0, gen);
        for (const Point &p : pts) {
            CHECK(distance(p, Point(3, 4)) <= 10.0 + 1e-12);
            inside_half += distance(p, Point(3, 4)) <= 5.0;
        }
        n_disk += static_cast<double>(pts.size());
    }
    CHECK(n_disk / reps == doctest::Approx(0.05 * 3.14159265358979 * 100.0).epsilon(0.03));
    // Uniform in area: a quarter falls within half the radius.
    CHECK(inside_half / n_disk == doctest::Approx(0.25).epsilon(0.05));
}

}
