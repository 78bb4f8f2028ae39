// SPDX-License-Identifier: Apache-2.0
//
// Analytic upper bounds on the mean spectral efficiency of a single source
// served with relays drawn from a Poisson field, with and without log-normal
// shadowing, plus the Poisson-binomial machinery the shadowed bound needs.

#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vmimo {

struct BoundParams {
    double gamma = 1.0;    // received SNR at the AP, linear
    double lambda = 0.0;   // UEs per m^2
    double src_snr = 1.0;  // G P_s / sigma_N^2 with distances in metres
    double alpha = 2.42;   // path-loss exponent
    double sigma_db = 0.0; // shadowing dB-spread
    double d_max = 25.0;   // m, relay disk radius (shadowed bound only)
    double delta = 0.05;   // m, ring width (shadowed bound only)
};

struct BoundResult {
    double value = 0.0;    // bps/Hz
    double baseline = 0.0; // C(gamma)
    double integral_tail_bound = 0.0;
    double r_max = 0.0;    // upper end of the integrated range
    int k_max = 0;         // largest relay count threshold reached
    int pieces = 0;        // integration panels or constant pieces
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Minimum number of co-phased relays, each received at SNR gamma, for the
/// aggregate two-phase capacity to reach 2r.
int k_necessary(double r, double gamma);

/// Area of the disk in which a relay decodes the source at rate 2r.
double achievability_area(double r, double src_snr, double alpha);
/// Radius of that disk.
double eligibility_radius(double r, double src_snr, double alpha);

/// P(N >= k) for N ~ Poisson(mu), evaluated in the log domain.
double poisson_tail(int k, double mu);

BoundResult theorem1_bound(const BoundParams &params);

/// Log-domain spread of the shadowed effective distance, 0.1 ln(10) sigma_db / alpha.
double shadow_log_sigma(double sigma_db, double alpha);

/// Probability that a relay on ring j lands on ring i once its distance is
/// scaled by the shadowing term.
double shift_probability(int j, int i, double sigma);

/// Probability that ring i holds an eligible relay; throws when the ring
/// discretization is too coarse for the density (p_i >= 1).
double ring_probability(int i, const BoundParams &params);
/// p_1 .. p_{n_max} in one pass.
std::vector<double> ring_probabilities(const BoundParams &params);

/// Full Poisson-binomial pmf pi_0 .. pi_n of the given success probabilities.
std::vector<double> poisson_binomial(std::span<const double> p);
/// pi_k; zero for k > n.
double poisson_binomial(std::span<const double> p, int k);
/// pi_0 .. pi_{k_max}, truncated.
std::vector<double> poisson_binomial_head(std::span<const double> p, int k_max);

BoundResult lemma1_bound(const BoundParams &params);

struct CorollaryOutputs {
    double rate = 0.0;  // theorem-1 value used
    int relays = 0;
    double radius = 0.0; // m
};

CorollaryOutputs corollary_outputs(const BoundParams &params);

/// Adaptive Simpson on [a, b] to absolute tolerance eps.
double adaptive_simpson(const std::function<double(double)> &f, double a, double b, double eps,
                        int max_depth = 48);

} // namespace vmimo
