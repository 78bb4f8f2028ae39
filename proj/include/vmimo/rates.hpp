// SPDX-License-Identifier: Apache-2.0
//
// Two-phase decode-and-forward rate engine. Phase 1: every scheduled source
// broadcasts. Phase 2: assisted sources repeat their codeword jointly with
// their relays under unit-modulus precoding, unassisted sources send fresh
// symbols. The AP stacks both phases and applies a linear MMSE receiver.

#pragma once

#include "vmimo/linalg.hpp"

#include <optional>
#include <vector>

namespace vmimo {

/// log2(1 + x)
inline double capacity(double sinr) { return std::log2(1.0 + sinr); }

/// A source and the idle UEs relaying for it. `weights` holds the phase-2
/// precoding weights of the source followed by each relay, in relay order.
struct Cluster {
    int source = 0;           // source slot
    std::vector<int> relays;  // UE ids
    ComplexVector weights;    // size relays.size() + 1, unit modulus

    static Cluster singleton(int source_slot) {
        return {source_slot, {}, ComplexVector::Ones(1)};
    }
};

/// One realized network: channels, powers, schedule and the current set of
/// assisted clusters.
class NetworkState {
public:
    NetworkState(int n_rx, double noise_power_w, int n_ue, int n_aps);

    int n_rx() const { return n_rx_; }
    int n_ue() const { return static_cast<int>(ue_power_.size()); }
    int n_aps() const { return static_cast<int>(ue_ap_.size()); }
    int n_sources() const { return static_cast<int>(sources_.size()); }
    double noise_power() const { return noise_power_; }

    /// Schedules `ue` as a source served by `ap`; returns its slot.
    int add_source(int ue, int ap);
    int source_ue(int slot) const { return sources_.at(slot); }
    int serving_ap(int slot) const { return serving_ap_.at(slot); }
    bool is_source(int ue) const;

    void set_ue_power(int ue, double power_w) { ue_power_.at(ue) = power_w; }
    double ue_power(int ue) const { return ue_power_.at(ue); }

    /// Channel from UE `ue` to the antennas of AP `ap` (excludes power).
    void set_ue_ap_channel(int ue, int ap, const ComplexVector &h);
    auto ue_ap_channel(int ue, int ap) const { return ue_ap_[ap].col(ue); }

    /// Scalar channel from the source in `slot` to single-antenna UE `ue`.
    void set_source_ue_channel(int slot, int ue, std::complex<double> h);
    std::complex<double> source_ue_channel(int slot, int ue) const { return source_ue_(slot, ue); }

    /// Uncontrolled co-channel interferers. to_ap[ap] is n_rx x n_aggressors;
    /// to_ue is n_aggressors x n_ue.
    void set_aggressors(std::vector<Eigen::MatrixXcd> to_ap, std::vector<double> power_w,
                        Eigen::MatrixXcd to_ue);
    int n_aggressors() const { return static_cast<int>(aggressor_power_.size()); }
    const HermitianMatrix &aggressor_covariance(int ap) const { return aggressor_cov_.at(ap); }
    double aggressor_power_at_ue(int ue) const { return aggressor_at_ue_.size() ? aggressor_at_ue_(ue) : 0.0; }

    const std::vector<Cluster> &clusters() const { return clusters_; }
    /// Adds or replaces the cluster of `cluster.source`. Throws when the
    /// cluster breaks disjointness or recruits a source.
    void commit_cluster(const Cluster &cluster);
    void clear_clusters() { clusters_.clear(); }
    const Cluster *cluster_of(int slot) const;
    std::vector<int> unassisted_sources() const;

private:
    int n_rx_;
    double noise_power_;
    std::vector<int> sources_;
    std::vector<int> serving_ap_;
    std::vector<double> ue_power_;
    std::vector<Eigen::MatrixXcd> ue_ap_;
    Eigen::MatrixXcd source_ue_;
    std::vector<double> aggressor_power_;
    std::vector<HermitianMatrix> aggressor_cov_;
    Eigen::VectorXd aggressor_at_ue_;
    std::vector<Cluster> clusters_;
};

HermitianMatrix phase1_covariance(const NetworkState &state, int victim, int ap);
HermitianMatrix phase2_covariance(const NetworkState &state, int victim, int ap);
double unassisted_rate(const NetworkState &state, int slot, int ap);

/// H_sd: columns sqrt(P_i) h_id for the source followed by its relays.
Eigen::MatrixXcd cluster_matrix(const NetworkState &state, const Cluster &cluster, int ap);
/// [sqrt(P_s) h_sd ; H_sd w] of length 2 n_rx.
ComplexVector augmented_channel(const NetworkState &state, const Cluster &cluster, int ap);
/// Interference-plus-noise covariance over both phases seen by the cluster of
/// `victim`. The victim's own cluster never contributes.
HermitianMatrix vmimo_covariance(const NetworkState &state, int victim, int ap);
double aggregate_capacity(const NetworkState &state, const Cluster &cluster, int ap);
double source_relay_rate(const NetworkState &state, int slot, int ue);
double vmimo_rate(const NetworkState &state, const Cluster &cluster, int ap);

/// Rate of a source at its serving AP under the current state.
double source_rate(const NetworkState &state, int slot);
std::vector<double> source_rates(const NetworkState &state);

/// 10 log10(2^r - 1); r = 0 maps to -infinity.
double effective_sinr_db(double rate);
double rate_from_effective_sinr(double sinr_db);

enum class FloorMode { Floor, Exclude };

/// M / sum(1 / max(r_i, floor)). In Exclude mode entries below the floor are
/// dropped instead; returns 0 when nothing is left.
double harmonic_mean(const std::vector<double> &rates, double floor, FloorMode mode = FloorMode::Floor);

struct SourceEnergy {
    double source_power_w = 0.0;
    std::vector<double> relay_power_w; // phase-2 only
    double rate = 0.0;                 // bps/Hz
};

/// Transmit energy over both phases divided by delivered bits for one trial.
/// Empty when no bits are delivered.
std::optional<double> energy_per_bit(const std::vector<SourceEnergy> &sources, double slot_duration_s,
                                     double bandwidth_hz);

struct SourceReport {
    double rate = 0.0;
    double sinr_eff_db = 0.0;
    int relay_count = 0;
    bool assisted = false;
    double phase1_power_w = 0.0;
    double phase2_power_w = 0.0; // source plus relays
};

struct RateReport {
    std::vector<SourceReport> sources;
    double harmonic_mean = 0.0;
    std::optional<double> energy_per_bit;
};

RateReport make_rate_report(const NetworkState &state, double floor_rate, FloorMode mode,
                            double slot_duration_s, double bandwidth_hz);

} // namespace vmimo
