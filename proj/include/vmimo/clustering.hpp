// SPDX-License-Identifier: Apache-2.0
//
// Relay clustering: the greedy single-source sweep, its multi-source
// extension that serves the weakest sources first, and an exhaustive
// reference search for small instances.

#pragma once

#include "vmimo/precoding.hpp"
#include "vmimo/rates.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace vmimo {

struct ClusteringConfig {
    Codebook codebook{2};
    PrecoderPolicy precoder;
    double candidate_factor = 2.0; // relay l is a candidate iff r_sl > factor * r_s
    bool prune = true;             // skip precoding when r_min alone rules a step out
    bool record_trace = true;
    std::uint64_t exhaustive_cap = 1000000;
    double floor_rate = 0.1375035237499349; // C(0.1)
};

struct RelayCandidate {
    int ue = 0;
    double r_sl = 0.0; // source-to-relay rate
};

/// Outcome of precoding one tentative cluster.
struct PrecodedCluster {
    double gamma_ap = 0.0;  // post-combining SNR (or SINR) at the AP
    ComplexVector weights;  // phase-2 weights, source first then relays
};

/// Rate oracle for one source. Implementations fix the interference picture
/// seen while this source is clustered.
class ClusterEvaluator {
public:
    virtual ~ClusterEvaluator() = default;
    /// Unassisted rate under the current state; the "No VMIMO" fallback level.
    virtual double direct_rate() const = 0;
    /// Rate against which candidates are screened. Defaults to direct_rate().
    virtual double eligibility_rate() const { return direct_rate(); }
    virtual const std::vector<RelayCandidate> &idle() const = 0;
    /// Precodes the source with `relays` (in this order).
    virtual PrecodedCluster precode(const std::vector<int> &relays) = 0;
};

/// Single source on scalar channels with no interference. SNRs are linear
/// and noise-normalized.
class ScalarEvaluator : public ClusterEvaluator {
public:
    /// `source_gain` is the source's complex amplitude at the AP; each relay
    /// carries its amplitude at the AP and its rate from the source.
    ScalarEvaluator(std::complex<double> source_gain, std::vector<RelayCandidate> relays,
                    std::vector<std::complex<double>> relay_gains, Codebook codebook, PrecoderPolicy policy = {});

    double direct_rate() const override;
    const std::vector<RelayCandidate> &idle() const override { return relays_; }
    PrecodedCluster precode(const std::vector<int> &relays) override;

private:
    std::complex<double> source_gain_;
    std::vector<RelayCandidate> relays_;
    std::vector<std::complex<double>> gains_; // indexed by UE id
    Codebook codebook_;
    PrecoderPolicy policy_;
};

/// One source inside a multi-source network. The interference covariance
/// is frozen at construction: committed clusters of other sources count as
/// clusters, everything else as unassisted.
class NetworkEvaluator : public ClusterEvaluator {
public:
    NetworkEvaluator(const NetworkState &state, int slot, const std::vector<int> &idle_pool, double eligibility_rate,
                     Codebook codebook, PrecoderPolicy policy = {});

    double direct_rate() const override { return direct_; }
    double eligibility_rate() const override { return eligibility_; }
    const std::vector<RelayCandidate> &idle() const override { return idle_; }
    PrecodedCluster precode(const std::vector<int> &relays) override;

private:
    Eigen::Index column_of(int ue) const;

    double direct_;
    double eligibility_;
    std::vector<RelayCandidate> idle_;
    std::vector<int> pool_;    // sorted UE ids backing the whitened columns
    Eigen::MatrixXcd whitened_; // column 0: phase-1 source, 1: phase-2 source, then pool
    Codebook codebook_;
    PrecoderPolicy policy_;
};

struct TraceStep {
    int relay = -1;
    double r_sl = 0.0;
    double r_min = 0.0;
    double gamma_ap = std::numeric_limits<double>::quiet_NaN(); // NaN when pruned
    double r_new = std::numeric_limits<double>::quiet_NaN();    // NaN when pruned
    bool accepted = false;
    bool pruned = false;
};

struct SourceOutcome {
    int source = 0;              // source slot
    double direct_rate = 0.0;    // r_s
    double rate = 0.0;           // rate the sweep settled on
    double gamma_ap = 0.0;       // of the final cluster; 0 when unassisted
    bool assisted = false;
    std::vector<int> relays;
    ComplexVector weights;       // size relays + 1 when assisted
    int candidates = 0;
    int precodings = 0;
    std::vector<TraceStep> trace;
};

/// Greedy sweep over candidates sorted by descending r_sl (ties by UE id).
SourceOutcome algorithm1(ClusterEvaluator &evaluator, const ClusteringConfig &config, int source_slot = 0);

/// Best subset of the candidate relays by brute force, for cross-checking
/// the sweep. Throws "exhaustive search infeasible" past config.exhaustive_cap.
SourceOutcome best_subset(ClusterEvaluator &evaluator, const ClusteringConfig &config, int source_slot = 0);

struct ClusteringResult {
    std::vector<int> order;              // source slots in processing order
    std::vector<double> baseline_rates;  // all-unassisted, by slot
    std::vector<double> final_rates;     // after clustering, by slot
    std::vector<SourceOutcome> outcomes; // by slot
    std::vector<Cluster> clusters;
    double objective = 0.0;              // floored harmonic mean of final_rates
    std::uint64_t assignments = 0;       // exhaustive search only
};

class ExhaustiveInfeasible : public std::runtime_error {
public:
    ExhaustiveInfeasible() : std::runtime_error("exhaustive search infeasible") {}
};

/// All-unassisted rate of every source. Clears any committed clusters.
std::vector<double> baseline_rates(NetworkState &state);

/// Sources in ascending baseline rate, ties by UE id.
std::vector<int> ascending_order(const NetworkState &state, const std::vector<double> &baseline);

/// Multi-source clustering. Leaves the chosen clusters committed in `state`.
ClusteringResult algorithm2(NetworkState &state, const std::vector<int> &idle, const ClusteringConfig &config);

/// Exhaustive reference: every assignment of candidate relays to sources,
/// clusters precoded in the same order as algorithm2, scored by the floored
/// harmonic mean. Leaves the best clusters committed in `state`.
ClusteringResult exhaustive_baseline(NetworkState &state, const std::vector<int> &idle,
                                     const ClusteringConfig &config);

/// Throws std::logic_error when clusters overlap, recruit sources or use
/// relays outside `idle`.
void check_partition(const NetworkState &state, const std::vector<Cluster> &clusters, const std::vector<int> &idle);

} // namespace vmimo
