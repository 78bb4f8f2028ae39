// SPDX-License-Identifier: Apache-2.0

#include "vmimo/precoding.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace vmimo {

double Codebook::feedback_bits() const {
    if (is_continuous())
        return std::numeric_limits<double>::infinity();
    return std::log2(static_cast<double>(size));
}

std::complex<double> Codebook::element(int index) const {
    if (size < 1)
        throw std::logic_error("Codebook::element on a continuous codebook");
    return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(index % size) / size);
}

int Codebook::quantize_index(std::complex<double> z) const {
    if (size < 1)
        throw std::logic_error("Codebook::quantize_index on a continuous codebook");
    if (size == 1)
        return 0;
    double phase = std::arg(z);
    if (phase < 0.0)
        phase += 2.0 * std::numbers::pi;
    const double t = phase * size / (2.0 * std::numbers::pi);
    // ceil(t - 1/2) picks the lower neighbour on an exact half step.
    const int m = static_cast<int>(std::ceil(t - 0.5));
    return ((m % size) + size) % size;
}

std::complex<double> Codebook::quantize(std::complex<double> z) const {
    if (is_continuous()) {
        const double a = std::abs(z);
        return a > 0.0 ? z / a : std::complex<double>(1.0, 0.0);
    }
    return element(quantize_index(z));
}

const char *to_string(PrecodingMethod method) {
    switch (method) {
    case PrecodingMethod::Fixed: return "fixed";
    case PrecodingMethod::Enumeration: return "enumeration";
    case PrecodingMethod::SdrRounded: return "sdr-rounded";
    case PrecodingMethod::Continuous: return "continuous";
    }
    return "unknown";
}

HermitianMatrix assemble_q(const Eigen::LLT<HermitianMatrix> &covariance, const ComplexVector &source_channel,
                           const Eigen::MatrixXcd &cluster_columns) {
    const Eigen::Index n = source_channel.size();
    if (cluster_columns.rows() != n || covariance.rows() != 2 * n)
        throw std::invalid_argument("assemble_q: dimension mismatch");
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(2 * n, cluster_columns.cols() + 1);
    b.block(0, 0, n, 1) = source_channel;
    b.block(n, 1, n, cluster_columns.cols()) = cluster_columns;
    const Eigen::MatrixXcd x = covariance.matrixL().solve(b);
    HermitianMatrix q = x.adjoint() * x;
    // Symmetrize away rounding so downstream Hermitian checks hold exactly.
    return 0.5 * (q + q.adjoint());
}

PrecodingProblem assemble_q(const NetworkState &state, const Cluster &cluster, int ap, Codebook codebook) {
    Eigen::LLT<HermitianMatrix> llt(vmimo_covariance(state, cluster.source, ap));
    if (llt.info() != Eigen::Success)
        throw SingularCovariance();
    const ComplexVector hs = std::sqrt(state.ue_power(state.source_ue(cluster.source))) *
                             state.ue_ap_channel(state.source_ue(cluster.source), ap);
    return {assemble_q(llt, hs, cluster_matrix(state, cluster, ap)), codebook};
}

PrecodingSolution enumerate_optimum(const PrecodingProblem &problem, std::uint64_t cap) {
    const HermitianMatrix &q = problem.q;
    const Eigen::Index n = q.rows();
    if (n < 1)
        throw std::invalid_argument("enumerate_optimum: empty problem");
    if (problem.codebook.is_continuous())
        throw std::invalid_argument("enumerate_optimum: codebook must be finite");
    const int nw = problem.codebook.size;

    std::uint64_t total = 1;
    for (Eigen::Index i = 1; i < n; ++i) {
        if (total > cap / static_cast<std::uint64_t>(nw))
            throw EnumerationTooLarge();
        total *= static_cast<std::uint64_t>(nw);
    }
    if (total > cap)
        throw EnumerationTooLarge();

    std::vector<std::complex<double>> roots(static_cast<std::size_t>(nw));
    for (int m = 0; m < nw; ++m)
        roots[static_cast<std::size_t>(m)] = problem.codebook.element(m);

    // Odometer over indices 1..n-1 (index 1 most significant), with the
    // quadratic form updated incrementally: y = Q w.
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    ComplexVector w = ComplexVector::Ones(n);
    ComplexVector y = q * w;
    double obj = std::real(w.dot(y));
    std::vector<int> best_idx = idx;
    double best = obj;

    for (std::uint64_t step = 1; step < total; ++step) {
        Eigen::Index pos = n - 1;
        while (true) {
            const auto p = static_cast<std::size_t>(pos);
            const int next = idx[p] + 1 == nw ? 0 : idx[p] + 1;
            const std::complex<double> delta = roots[static_cast<std::size_t>(next)] - w(pos);
            obj += 2.0 * std::real(std::conj(delta) * y(pos)) + std::norm(delta) * std::real(q(pos, pos));
            y.noalias() += q.col(pos) * delta;
            w(pos) = roots[static_cast<std::size_t>(next)];
            idx[p] = next;
            if (next != 0)
                break;
            --pos;
        }
        if (obj > best + 1e-12 * std::abs(best)) {
            best = obj;
            best_idx = idx;
        }
    }

    PrecodingSolution sol;
    sol.weights = ComplexVector(n);
    for (Eigen::Index i = 0; i < n; ++i)
        sol.weights(i) = roots[static_cast<std::size_t>(best_idx[static_cast<std::size_t>(i)])];
    sol.objective = quadratic_form(q, sol.weights);
    sol.method = PrecodingMethod::Enumeration;
    return sol;
}

SdrResult sdr_solve(const HermitianMatrix &q, double tol, int max_sweeps) {
    const Eigen::Index n = q.rows();
    if (n < 1 || q.cols() != n)
        throw std::invalid_argument("sdr_solve: matrix must be square and non-empty");

    std::mt19937_64 gen(0x5d2a1f3c77e1b9d1ULL ^ static_cast<std::uint64_t>(n));
    std::normal_distribution<double> normal;
    Eigen::MatrixXcd v(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k)
            v(i, k) = {normal(gen), normal(gen)};
        v.row(i).normalize();
    }

    auto objective = [&] { return std::real((v.adjoint() * q * v).trace()); };

    SdrResult result;
    double value = objective();
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::RowVectorXcd g = q.row(i) * v - q(i, i) * v.row(i);
            const double norm = g.norm();
            if (norm > 0.0)
                v.row(i) = g / norm;
        }
        const double next = objective();
        const double gain = next - value;
        value = next;
        result.sweeps = sweep;
        if (gain <= tol * std::max(std::abs(value), std::numeric_limits<double>::min())) {
            result.converged = true;
            break;
        }
    }
    result.w = v * v.adjoint();
    result.value = value;
    return result;
}

PrecodingSolution round_solution(const HermitianMatrix &w, const PrecodingProblem &problem) {
    const Eigen::Index n = problem.q.rows();
    if (w.rows() != n || w.cols() != n)
        throw std::invalid_argument("round_solution: dimension mismatch");

    PrecodingSolution sol;
    sol.method = problem.codebook.is_continuous() ? PrecodingMethod::Continuous : PrecodingMethod::SdrRounded;
    if (problem.codebook.size == 1) {
        sol.weights = ComplexVector::Ones(n);
        sol.objective = quadratic_form(problem.q, sol.weights);
        sol.method = PrecodingMethod::Fixed;
        return sol;
    }

    ComplexVector v;
    try {
        v = dominant_eigenvector<double>(w).vector;
    } catch (const EigenNotConverged<double> &e) {
        v = e.eigenvector;
        sol.converged = false;
    }

    ComplexVector quantized(n);
    for (Eigen::Index i = 0; i < n; ++i)
        quantized(i) = problem.codebook.quantize(v(i));
    sol.weights = std::conj(quantized(0)) * quantized;
    sol.weights(0) = 1.0;
    sol.objective = quadratic_form(problem.q, sol.weights);
    return sol;
}

ComplexVector continuous_phase_match(const std::vector<std::complex<double>> &channels) {
    ComplexVector w(static_cast<Eigen::Index>(channels.size()));
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const double a = std::abs(channels[i]);
        w(static_cast<Eigen::Index>(i)) = a > 0.0 ? std::conj(channels[i]) / a : std::complex<double>(1.0, 0.0);
    }
    if (w.size() > 0) {
        w *= std::conj(w(0));
        w(0) = 1.0;
    }
    return w;
}

PrecodingSolution solve_precoding(const PrecodingProblem &problem, const PrecoderPolicy &policy) {
    const Eigen::Index n = problem.q.rows();
    const Codebook &cb = problem.codebook;
    if (cb.size == 1 || n == 1) {
        PrecodingSolution sol;
        sol.weights = ComplexVector::Ones(n);
        sol.objective = quadratic_form(problem.q, sol.weights);
        sol.method = PrecodingMethod::Fixed;
        return sol;
    }
    if (!cb.is_continuous()) {
        double space = std::pow(static_cast<double>(cb.size), static_cast<double>(n - 1));
        if (space <= static_cast<double>(policy.enumeration_limit))
            return enumerate_optimum(problem, policy.enumeration_limit);
    }
    const SdrResult sdr = sdr_solve(problem.q, policy.sdr_tol, policy.sdr_max_sweeps);
    PrecodingSolution sol = round_solution(sdr.w, problem);
    sol.relaxation_value = sdr.value;
    sol.converged = sol.converged && sdr.converged;
    return sol;
}

} // namespace vmimo
