// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "support.hpp"

#include "vmimo/rates.hpp"

using namespace vmimo;
using vmimo::testing::NetworkSpec;
using vmimo::testing::random_network;
using vmimo::testing::sinr_by_inverse;

namespace {

ComplexVector scaled(const NetworkState &st, int ue, int ap) {
    return std::sqrt(st.ue_power(ue)) * st.ue_ap_channel(ue, ap);
}

// Term-by-term two-phase covariance.
HermitianMatrix covariance_oracle(const NetworkState &st, int victim, int ap) {
    const int n = st.n_rx();
    HermitianMatrix k = HermitianMatrix::Zero(2 * n, 2 * n);
    for (int i = 0; i < 2 * n; ++i)
        k(i, i) = st.noise_power();
    k.topLeftCorner(n, n) += st.aggressor_covariance(ap);
    k.bottomRightCorner(n, n) += st.aggressor_covariance(ap);
    for (int j = 0; j < st.n_sources(); ++j) {
        if (j == victim)
            continue;
        const ComplexVector top = scaled(st, st.source_ue(j), ap);
        if (const Cluster *c = st.cluster_of(j)) {
            ComplexVector bottom = ComplexVector::Zero(n);
            bottom += c->weights(0) * top;
            for (std::size_t i = 0; i < c->relays.size(); ++i)
                bottom += c->weights(static_cast<Eigen::Index>(i) + 1) * scaled(st, c->relays[i], ap);
            ComplexVector full(2 * n);
            full << top, bottom;
            for (int r = 0; r < 2 * n; ++r)
                for (int s = 0; s < 2 * n; ++s)
                    k(r, s) += full(r) * std::conj(full(s));
        } else {
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    const std::complex<double> v = top(r) * std::conj(top(s));
                    k(r, s) += v;
                    k(n + r, n + s) += v;
                }
        }
    }
    return k;
}

} // namespace

TEST_SUITE("rates") {

TEST_CASE("single source, no interference") {
    NetworkState st(2, 0.5, 1, 1);
    ComplexVector h(2);
    h << 1.0, std::complex<double>(0, 1);
    st.set_ue_power(0, 2.0);
    st.set_ue_ap_channel(0, 0, h);
    st.add_source(0, 0);
    const double gamma = 2.0 * h.squaredNorm() / 0.5;
    CHECK(phase1_covariance(st, 0, 0).isApprox(0.5 * HermitianMatrix::Identity(2, 2)));
    CHECK(unassisted_rate(st, 0, 0) == doctest::Approx(std::log2(1.0 + gamma)));
}

TEST_CASE("zero channel gives zero rate") {
    NetworkState st(1, 1.0, 1, 1);
    st.set_ue_power(0, 1.0);
    st.add_source(0, 0);
    CHECK(unassisted_rate(st, 0, 0) == 0.0);
}

TEST_CASE("phase covariances against direct sums") {
    std::mt19937_64 gen(21);
    NetworkSpec spec;
    spec.n_sources = 3;
    spec.n_aggressors = 2;
    spec.n_aps = 3;
    NetworkState st = random_network(spec, gen);
    const int n = st.n_rx();
    for (int v = 0; v < 3; ++v) {
        const HermitianMatrix k = covariance_oracle(st, v, 1);
        CHECK((phase1_covariance(st, v, 1) - k.topLeftCorner(n, n)).norm() <= 1e-12 * k.norm());
        CHECK((phase2_covariance(st, v, 1) - k.bottomRightCorner(n, n)).norm() <= 1e-12 * k.norm());
    }
    // Adding an aggressor raises every diagonal entry.
    NetworkState quiet = st;
    quiet.set_aggressors(std::vector<Eigen::MatrixXcd>(3, Eigen::MatrixXcd(n, 0)), {}, Eigen::MatrixXcd(0, 0));
    const HermitianMatrix with = phase1_covariance(st, 0, 0), without = phase1_covariance(quiet, 0, 0);
    for (int i = 0; i < n; ++i)
        CHECK(with(i, i).real() > without(i, i).real());
}

TEST_CASE("unassisted rate against explicit inverse") {
    std::mt19937_64 gen(22);
    for (int trial = 0; trial < 20; ++trial) {
        NetworkSpec spec;
        spec.n_rx = 1 + trial % 4;
        spec.n_sources = 2;
        spec.n_aggressors = trial % 3;
        NetworkState st = random_network(spec, gen);
        const int ap = st.serving_ap(0);
        const ComplexVector h = scaled(st, st.source_ue(0), ap);
        const HermitianMatrix k = covariance_oracle(st, 0, ap);
        const int n = st.n_rx();
        const double c1 = std::log2(1.0 + sinr_by_inverse(h, k.topLeftCorner(n, n)));
        const double c2 = std::log2(1.0 + sinr_by_inverse(h, k.bottomRightCorner(n, n)));
        CHECK(unassisted_rate(st, 0, ap) == doctest::Approx(0.5 * (c1 + c2)).epsilon(1e-9));
    }
}

TEST_CASE("no clusters: both phases see the same interference") {
    std::mt19937_64 gen(23);
    NetworkState st = random_network({}, gen);
    CHECK(phase1_covariance(st, 0, 0).isApprox(phase2_covariance(st, 0, 0)));
}

TEST_CASE("augmented channel") {
    NetworkState st(1, 1.0, 3, 1);
    for (int u = 0; u < 3; ++u) {
        st.set_ue_power(u, 1.0);
        st.set_ue_ap_channel(u, 0, ComplexVector::Ones(1));
    }
    st.add_source(0, 0);
    Cluster c{0, {1, 2}, ComplexVector::Ones(3)};
    const ComplexVector h = augmented_channel(st, c, 0);
    CHECK(h(0) == std::complex<double>(1.0, 0.0));
    CHECK(h(1) == std::complex<double>(3.0, 0.0));

    const ComplexVector alone = augmented_channel(st, Cluster::singleton(0), 0);
    CHECK(alone(0) == alone(1));

    Cluster bad{0, {1}, ComplexVector::Ones(3)};
    CHECK_THROWS_AS(augmented_channel(st, bad, 0), std::invalid_argument);
}

TEST_CASE("two-phase covariance structure and oracle") {
    std::mt19937_64 gen(24);
    NetworkSpec spec;
    spec.n_sources = 3;
    spec.n_ue = 8;
    spec.n_aggressors = 2;
    NetworkState st = random_network(spec, gen);
    const int n = st.n_rx();

    // Only unassisted interferers: off-phase blocks are exactly zero.
    const HermitianMatrix plain = vmimo_covariance(st, 0, 0);
    CHECK(plain.topRightCorner(n, n).cwiseAbs().maxCoeff() == 0.0);
    CHECK(plain.bottomLeftCorner(n, n).cwiseAbs().maxCoeff() == 0.0);

    ComplexVector w(3);
    w << 1.0, std::polar(1.0, 0.7), std::polar(1.0, -2.0);
    st.commit_cluster({1, {4, 5}, w});
    const HermitianMatrix k = vmimo_covariance(st, 0, 0);
    CHECK((k - covariance_oracle(st, 0, 0)).norm() <= 1e-12 * k.norm());
    CHECK(k.topRightCorner(n, n).cwiseAbs().maxCoeff() > 0.0);

    // Cluster interference is rank one: undo the block-diagonal term that
    // source 1 contributed while unassisted.
    HermitianMatrix cluster_term = k - plain;
    const ComplexVector h1 = scaled(st, st.source_ue(1), 0);
    cluster_term.topLeftCorner(n, n) += h1 * h1.adjoint();
    cluster_term.bottomRightCorner(n, n) += h1 * h1.adjoint();
    Eigen::SelfAdjointEigenSolver<HermitianMatrix> rank(cluster_term);
    const auto ev = rank.eigenvalues();
    CHECK(ev(2 * n - 1) > 0.0);
    CHECK(std::abs(ev(2 * n - 2)) <= 1e-10 * ev(2 * n - 1));

    // The victim's own cluster never counts.
    st.commit_cluster({0, {6}, ComplexVector::Ones(2)});
    CHECK((vmimo_covariance(st, 0, 0) - k).norm() == 0.0);
}

TEST_CASE("lone cluster sees white noise") {
    std::mt19937_64 gen(25);
    NetworkSpec spec;
    spec.n_sources = 1;
    NetworkState st = random_network(spec, gen);
    const HermitianMatrix k = vmimo_covariance(st, 0, 0);
    CHECK(k.isApprox(spec.noise * HermitianMatrix::Identity(2 * spec.n_rx, 2 * spec.n_rx)));
}

TEST_CASE("vmimo rate against explicit inverse") {
    std::mt19937_64 gen(26);
    for (int trial = 0; trial < 20; ++trial) {
        NetworkSpec spec;
        spec.n_rx = 1 + trial % 4;
        spec.n_sources = 2;
        spec.n_ue = 7;
        spec.n_aggressors = 1;
        NetworkState st = random_network(spec, gen);
        ComplexVector w(3);
        w << 1.0, std::polar(1.0, 0.3 * trial), -1.0;
        const Cluster c{0, {3, 5}, w};
        st.commit_cluster(c);
        st.commit_cluster({1, {2}, ComplexVector::Ones(2)});
        const int ap = st.serving_ap(0);
        const HermitianMatrix k = covariance_oracle(st, 0, ap);
        ComplexVector top = scaled(st, st.source_ue(0), ap);
        ComplexVector bottom = top + w(1) * scaled(st, 3, ap) + w(2) * scaled(st, 5, ap);
        ComplexVector full(2 * spec.n_rx);
        full << top, bottom;
        const double c_s = std::log2(1.0 + sinr_by_inverse(full, k));
        CHECK(aggregate_capacity(st, c, ap) == doctest::Approx(c_s).epsilon(1e-9));

        double r_min = std::numeric_limits<double>::infinity();
        for (int l : {3, 5}) {
            double i = st.noise_power() + st.aggressor_power_at_ue(l) +
                       st.ue_power(st.source_ue(1)) * std::norm(st.source_ue_channel(1, l));
            r_min = std::min(r_min,
                             std::log2(1.0 + st.ue_power(st.source_ue(0)) * std::norm(st.source_ue_channel(0, l)) / i));
        }
        CHECK(vmimo_rate(st, c, ap) == doctest::Approx(0.5 * std::min(c_s, r_min)).epsilon(1e-9));
        CHECK(source_rate(st, 0) == doctest::Approx(vmimo_rate(st, c, ap)));
    }
}

TEST_CASE("relay decoding rate without interference") {
    NetworkState st(1, 0.25, 2, 1);
    st.set_ue_power(0, 2.0);
    st.add_source(0, 0);
    st.set_source_ue_channel(0, 1, {0.0, 0.5});
    CHECK(source_relay_rate(st, 0, 1) == doctest::Approx(std::log2(1.0 + 2.0 * 0.25 / 0.25)));
}

TEST_CASE("commit_cluster enforces disjointness") {
    std::mt19937_64 gen(27);
    NetworkState st = random_network({}, gen);
    st.commit_cluster({0, {2, 3}, ComplexVector::Ones(3)});
    CHECK_THROWS_AS(st.commit_cluster({1, {3}, ComplexVector::Ones(2)}), std::invalid_argument);
    CHECK_THROWS_AS(st.commit_cluster({1, {0}, ComplexVector::Ones(2)}), std::invalid_argument);
    CHECK_THROWS_AS(st.commit_cluster({1, {4}, ComplexVector::Ones(3)}), std::invalid_argument);
    // Replacing the cluster of the same source may reuse its relays.
    st.commit_cluster({0, {3}, ComplexVector::Ones(2)});
    CHECK(st.clusters().size() == 1);
    CHECK(st.unassisted_sources() == std::vector<int>{1});
}

TEST_CASE("effective SINR round trip") {
    for (double r = 1e-3; r <= 20.0; r *= 1.7)
        CHECK(rate_from_effective_sinr(effective_sinr_db(r)) == doctest::Approx(r).epsilon(1e-12));
    CHECK(effective_sinr_db(1.0) == doctest::Approx(0.0));
    CHECK(std::isinf(effective_sinr_db(0.0)));
}

TEST_CASE("harmonic mean floor") {
    const double floor = rate_from_effective_sinr(-10.0);
    CHECK(harmonic_mean({1.0, 2.0}, floor) == doctest::Approx(4.0 / 3.0));
    CHECK(harmonic_mean({0.0, 1.0}, floor) == doctest::Approx(2.0 / (1.0 / floor + 1.0)));
    CHECK(harmonic_mean({0.0, 1.0}, floor, FloorMode::Exclude) == doctest::Approx(1.0));
    CHECK(harmonic_mean({0.0}, floor, FloorMode::Exclude) == 0.0);
    CHECK_THROWS(harmonic_mean({}, floor));
    const std::vector<double> rates{0.3, 1.2, 2.5, 4.0};
    CHECK(harmonic_mean(rates, 0.0) <= 4.0 * 0.3);
}

TEST_CASE("energy per bit") {
    const SourceEnergy one{0.01, {}, 2.0};
    CHECK(*energy_per_bit({one}, 1e-3, 20e6) == doctest::Approx(0.01 / (2.0 * 20e6)));
    SourceEnergy helped = one;
    helped.relay_power_w.push_back(0.005);
    CHECK(*energy_per_bit({helped}, 1e-3, 20e6) > *energy_per_bit({one}, 1e-3, 20e6));
    CHECK_FALSE(energy_per_bit({SourceEnergy{0.01, {}, 0.0}}, 1e-3, 20e6).has_value());
}

TEST_CASE("rate report") {
    std::mt19937_64 gen(28);
    NetworkState st = random_network({}, gen);
    st.commit_cluster({1, {3}, ComplexVector::Ones(2)});
    const RateReport r = make_rate_report(st, 0.1, FloorMode::Floor, 1e-3, 20e6);
    REQUIRE(r.sources.size() == 2);
    CHECK_FALSE(r.sources[0].assisted);
    CHECK(r.sources[1].assisted);
    CHECK(r.sources[1].relay_count == 1);
    CHECK(r.sources[1].phase2_power_w == doctest::Approx(st.ue_power(1) + st.ue_power(3)));
    CHECK(r.sources[0].rate == doctest::Approx(source_rate(st, 0)));
    CHECK(r.harmonic_mean <= 2.0 * std::min(r.sources[0].rate, r.sources[1].rate));
}

}
