// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures: random networks and brute-force reference computations.

#pragma once

#include "vmimo/rates.hpp"

#include <random>
#include <vector>

namespace vmimo::testing {

inline ComplexVector random_vector(Eigen::Index n, std::mt19937_64 &gen, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    ComplexVector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = {normal(gen), normal(gen)};
    return v;
}

inline HermitianMatrix random_psd(Eigen::Index n, std::mt19937_64 &gen, Eigen::Index rank = -1) {
    const Eigen::Index r = rank < 0 ? n : rank;
    Eigen::MatrixXcd a(n, r);
    for (Eigen::Index k = 0; k < r; ++k)
        a.col(k) = random_vector(n, gen);
    HermitianMatrix q = a * a.adjoint();
    return 0.5 * (q + q.adjoint());
}

struct NetworkSpec {
    int n_rx = 2;
    int n_ue = 6;
    int n_aps = 2;
    int n_sources = 2;
    int n_aggressors = 0;
    double noise = 1e-3;
};

/// Sources are UEs 0..n_sources-1, source s served by AP s % n_aps. Powers in
/// [0.5, 2], unit-scale Rayleigh channels, source-to-UE gains around 1.
inline NetworkState random_network(const NetworkSpec &spec, std::mt19937_64 &gen) {
    NetworkState st(spec.n_rx, spec.noise, spec.n_ue, spec.n_aps);
    std::uniform_real_distribution<double> power(0.5, 2.0);
    for (int u = 0; u < spec.n_ue; ++u) {
        st.set_ue_power(u, power(gen));
        for (int a = 0; a < spec.n_aps; ++a)
            st.set_ue_ap_channel(u, a, random_vector(spec.n_rx, gen, std::sqrt(0.5)));
    }
    for (int s = 0; s < spec.n_sources; ++s)
        st.add_source(s, s % spec.n_aps);
    for (int s = 0; s < spec.n_sources; ++s)
        for (int u = 0; u < spec.n_ue; ++u)
            if (u != st.source_ue(s))
                st.set_source_ue_channel(s, u, random_vector(1, gen, std::sqrt(0.5))(0));
    if (spec.n_aggressors > 0) {
        std::vector<Eigen::MatrixXcd> to_ap;
        for (int a = 0; a < spec.n_aps; ++a) {
            Eigen::MatrixXcd m(spec.n_rx, spec.n_aggressors);
            for (int g = 0; g < spec.n_aggressors; ++g)
                m.col(g) = random_vector(spec.n_rx, gen, 0.1);
            to_ap.push_back(m);
        }
        std::vector<double> p(static_cast<std::size_t>(spec.n_aggressors));
        for (double &x : p)
            x = power(gen);
        Eigen::MatrixXcd to_ue(spec.n_aggressors, spec.n_ue);
        for (int g = 0; g < spec.n_aggressors; ++g)
            for (int u = 0; u < spec.n_ue; ++u)
                to_ue(g, u) = random_vector(1, gen, 0.1)(0);
        st.set_aggressors(std::move(to_ap), std::move(p), std::move(to_ue));
    }
    return st;
}

/// h^H K^{-1} h through an explicit inverse.
inline double sinr_by_inverse(const ComplexVector &h, const HermitianMatrix &k) {
    const HermitianMatrix inv = k.inverse();
    return std::real(h.dot(inv * h));
}

/// All N_w^(n-1) weight vectors with a leading 1, walked with the first
/// free index varying fastest (the opposite order of the library).
inline double brute_force_optimum(const HermitianMatrix &q, int nw) {
    const Eigen::Index n = q.rows();
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    double best = -std::numeric_limits<double>::infinity();
    while (true) {
        ComplexVector w(n);
        for (Eigen::Index i = 0; i < n; ++i)
            w(i) = std::polar(1.0, 2.0 * 3.14159265358979323846 * idx[static_cast<std::size_t>(i)] / nw);
        best = std::max(best, std::real(w.dot(q * w)));
        Eigen::Index pos = 1;
        while (pos < n && ++idx[static_cast<std::size_t>(pos)] == nw)
            idx[static_cast<std::size_t>(pos++)] = 0;
        if (pos >= n)
            break;
    }
    return best;
}

/// Poisson-binomial pmf by the textbook O(n^2) convolution.
inline std::vector<double> pmf_by_convolution(const std::vector<double> &p) {
    std::vector<double> pmf{1.0};
    for (double x : p) {
        std::vector<double> next(pmf.size() + 1, 0.0);
        for (std::size_t k = 0; k < pmf.size(); ++k) {
            next[k] += pmf[k] * (1.0 - x);
            next[k + 1] += pmf[k] * x;
        }
        pmf = std::move(next);
    }
    return pmf;
}

} // namespace vmimo::testing
