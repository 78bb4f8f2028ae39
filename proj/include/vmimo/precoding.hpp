// SPDX-License-Identifier: Apache-2.0
//
// Discrete unit-modulus precoding for one cluster: maximize w^H Q w over
// w = [1; w_s] with every entry of w_s drawn from the N_w-th roots of unity.
// The leading 1 is the phase-1 copy of the source signal; w_s holds the
// phase-2 weights of the source and its relays.

#pragma once

#include "vmimo/linalg.hpp"
#include "vmimo/rates.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace vmimo {

/// The N_w-th roots of unity. size == 0 stands for unquantized phases.
struct Codebook {
    int size = 2;

    static Codebook continuous() { return Codebook{0}; }
    bool is_continuous() const { return size == 0; }
    double feedback_bits() const;
    std::complex<double> element(int index) const;
    /// Index of the nearest codebook phase; on an exact tie the lower index wins.
    int quantize_index(std::complex<double> z) const;
    /// Nearest codebook element (or the unit-modulus projection when continuous).
    std::complex<double> quantize(std::complex<double> z) const;
};

struct PrecodingProblem {
    HermitianMatrix q;
    Codebook codebook;
};

enum class PrecodingMethod { Fixed, Enumeration, SdrRounded, Continuous };

const char *to_string(PrecodingMethod method);

struct PrecodingSolution {
    ComplexVector weights; // full vector including the leading 1
    double objective = 0.0;
    double relaxation_value = std::numeric_limits<double>::quiet_NaN();
    PrecodingMethod method = PrecodingMethod::Fixed;
    bool converged = true;

    /// Phase-2 weights of the source and relays, i.e. weights without the leading 1.
    ComplexVector cluster_weights() const { return weights.tail(weights.size() - 1); }
};

/// Q = B^H K^{-1} B with B = blockdiag(sqrt(P_s) h_sd, H_sd) and K the
/// cluster's two-phase interference covariance. Dimension relays + 2.
PrecodingProblem assemble_q(const NetworkState &state, const Cluster &cluster, int ap, Codebook codebook);

/// Same construction from a factorized covariance and explicit channels.
HermitianMatrix assemble_q(const Eigen::LLT<HermitianMatrix> &covariance, const ComplexVector &source_channel,
                           const Eigen::MatrixXcd &cluster_columns);

class EnumerationTooLarge : public std::runtime_error {
public:
    EnumerationTooLarge() : std::runtime_error("instance too large for enumeration") {}
};

/// Exact discrete optimum by exhaustive search over N_w^(dim-1) vectors with
/// the first entry pinned to 1. Ties go to the lexicographically smallest
/// index vector.
PrecodingSolution enumerate_optimum(const PrecodingProblem &problem, std::uint64_t cap = std::uint64_t{1} << 20);

struct SdrResult {
    HermitianMatrix w;
    double value = 0.0;
    int sweeps = 0;
    bool converged = false;
};

/// max tr(QW) s.t. W >= 0, diag(W) = 1, by row-by-row coordinate ascent on a
/// full-rank factor W = V V^H. Each row update is closed form.
SdrResult sdr_solve(const HermitianMatrix &q, double tol = 1e-9, int max_sweeps = 500);

/// Rank-one rounding: dominant eigenvector of W, per-entry phase
/// quantization, then rotation so the first entry is exactly 1.
PrecodingSolution round_solution(const HermitianMatrix &w, const PrecodingProblem &problem);

/// Co-phasing weights e^{-j arg h_i} for scalar channels, rotated so the
/// first weight is 1. Zero channels get weight 1.
ComplexVector continuous_phase_match(const std::vector<std::complex<double>> &channels);

struct PrecoderPolicy {
    std::uint64_t enumeration_limit = 4096;
    double sdr_tol = 1e-9;
    int sdr_max_sweeps = 500;
};

/// Enumeration when the search space fits the policy limit, else SDR with
/// rank-one rounding. N_w = 1 needs no search.
PrecodingSolution solve_precoding(const PrecodingProblem &problem, const PrecoderPolicy &policy = {});

} // namespace vmimo
