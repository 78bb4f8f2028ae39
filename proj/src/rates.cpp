// SPDX-License-Identifier: Apache-2.0

#include "vmimo/rates.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace vmimo {

NetworkState::NetworkState(int n_rx, double noise_power_w, int n_ue, int n_aps)
    : n_rx_(n_rx), noise_power_(noise_power_w), ue_power_(static_cast<std::size_t>(n_ue), 0.0),
      ue_ap_(static_cast<std::size_t>(n_aps), Eigen::MatrixXcd::Zero(n_rx, n_ue)),
      aggressor_cov_(static_cast<std::size_t>(n_aps), HermitianMatrix::Zero(n_rx, n_rx)) {
    if (n_rx < 1 || n_ue < 0 || n_aps < 1 || !(noise_power_w > 0.0))
        throw std::invalid_argument("NetworkState: invalid dimensions or noise power");
}

int NetworkState::add_source(int ue, int ap) {
    if (ue < 0 || ue >= n_ue() || ap < 0 || ap >= n_aps())
        throw std::out_of_range("add_source: index out of range");
    if (is_source(ue))
        throw std::invalid_argument("add_source: UE already scheduled");
    sources_.push_back(ue);
    serving_ap_.push_back(ap);
    Eigen::MatrixXcd grown = Eigen::MatrixXcd::Zero(n_sources(), n_ue());
    if (source_ue_.rows() > 0)
        grown.topRows(source_ue_.rows()) = source_ue_;
    source_ue_ = std::move(grown);
    return n_sources() - 1;
}

bool NetworkState::is_source(int ue) const {
    return std::find(sources_.begin(), sources_.end(), ue) != sources_.end();
}

void NetworkState::set_ue_ap_channel(int ue, int ap, const ComplexVector &h) {
    if (h.size() != n_rx_)
        throw std::invalid_argument("set_ue_ap_channel: wrong antenna count");
    ue_ap_.at(ap).col(ue) = h;
}

void NetworkState::set_source_ue_channel(int slot, int ue, std::complex<double> h) {
    source_ue_(slot, ue) = h;
}

void NetworkState::set_aggressors(std::vector<Eigen::MatrixXcd> to_ap, std::vector<double> power_w,
                                  Eigen::MatrixXcd to_ue) {
    const auto n_agg = static_cast<Eigen::Index>(power_w.size());
    if (static_cast<int>(to_ap.size()) != n_aps() || to_ue.rows() != n_agg ||
        (n_agg > 0 && to_ue.cols() != n_ue()))
        throw std::invalid_argument("set_aggressors: dimension mismatch");
    aggressor_power_ = std::move(power_w);
    for (int ap = 0; ap < n_aps(); ++ap) {
        if (to_ap[ap].rows() != n_rx_ || to_ap[ap].cols() != n_agg)
            throw std::invalid_argument("set_aggressors: dimension mismatch");
        HermitianMatrix cov = HermitianMatrix::Zero(n_rx_, n_rx_);
        for (Eigen::Index a = 0; a < n_agg; ++a)
            cov.noalias() += aggressor_power_[a] * to_ap[ap].col(a) * to_ap[ap].col(a).adjoint();
        aggressor_cov_[ap] = cov;
    }
    aggressor_at_ue_ = Eigen::VectorXd::Zero(n_ue());
    for (Eigen::Index a = 0; a < n_agg; ++a)
        for (int ue = 0; ue < n_ue(); ++ue)
            aggressor_at_ue_(ue) += aggressor_power_[a] * std::norm(to_ue(a, ue));
}

void NetworkState::commit_cluster(const Cluster &cluster) {
    if (cluster.source < 0 || cluster.source >= n_sources())
        throw std::out_of_range("commit_cluster: bad source slot");
    if (cluster.weights.size() != static_cast<Eigen::Index>(cluster.relays.size()) + 1)
        throw std::invalid_argument("commit_cluster: weight count must be relay count + 1");
    std::set<int> taken;
    for (const Cluster &c : clusters_)
        if (c.source != cluster.source)
            taken.insert(c.relays.begin(), c.relays.end());
    for (int r : cluster.relays) {
        if (r < 0 || r >= n_ue())
            throw std::out_of_range("commit_cluster: relay out of range");
        if (is_source(r))
            throw std::invalid_argument("commit_cluster: a source cannot relay");
        if (!taken.insert(r).second)
            throw std::invalid_argument("commit_cluster: relay sets must be disjoint");
    }
    for (Cluster &c : clusters_) {
        if (c.source == cluster.source) {
            c = cluster;
            return;
        }
    }
    clusters_.push_back(cluster);
}

const Cluster *NetworkState::cluster_of(int slot) const {
    for (const Cluster &c : clusters_)
        if (c.source == slot)
            return &c;
    return nullptr;
}

std::vector<int> NetworkState::unassisted_sources() const {
    std::vector<int> out;
    for (int s = 0; s < n_sources(); ++s)
        if (!cluster_of(s))
            out.push_back(s);
    return out;
}

namespace {

void add_outer(HermitianMatrix &k, const ComplexVector &v, double scale = 1.0) {
    k.noalias() += scale * v * v.adjoint();
}

ComplexVector scaled_channel(const NetworkState &state, int ue, int ap) {
    return std::sqrt(state.ue_power(ue)) * state.ue_ap_channel(ue, ap);
}

} // namespace

HermitianMatrix phase1_covariance(const NetworkState &state, int victim, int ap) {
    const int n = state.n_rx();
    HermitianMatrix k = state.noise_power() * HermitianMatrix::Identity(n, n);
    k += state.aggressor_covariance(ap);
    for (int j = 0; j < state.n_sources(); ++j)
        if (j != victim)
            add_outer(k, scaled_channel(state, state.source_ue(j), ap));
    return k;
}

HermitianMatrix phase2_covariance(const NetworkState &state, int victim, int ap) {
    const int n = state.n_rx();
    HermitianMatrix k = state.noise_power() * HermitianMatrix::Identity(n, n);
    k += state.aggressor_covariance(ap);
    for (int j = 0; j < state.n_sources(); ++j) {
        if (j == victim)
            continue;
        if (const Cluster *c = state.cluster_of(j))
            add_outer(k, cluster_matrix(state, *c, ap) * c->weights);
        else
            add_outer(k, scaled_channel(state, state.source_ue(j), ap));
    }
    return k;
}

double unassisted_rate(const NetworkState &state, int slot, int ap) {
    const ComplexVector h = scaled_channel(state, state.source_ue(slot), ap);
    const double c1 = capacity(mmse_sinr(h, phase1_covariance(state, slot, ap)));
    const double c2 = capacity(mmse_sinr(h, phase2_covariance(state, slot, ap)));
    return 0.5 * (c1 + c2);
}

Eigen::MatrixXcd cluster_matrix(const NetworkState &state, const Cluster &cluster, int ap) {
    Eigen::MatrixXcd h(state.n_rx(), static_cast<Eigen::Index>(cluster.relays.size()) + 1);
    h.col(0) = scaled_channel(state, state.source_ue(cluster.source), ap);
    for (std::size_t i = 0; i < cluster.relays.size(); ++i)
        h.col(static_cast<Eigen::Index>(i) + 1) = scaled_channel(state, cluster.relays[i], ap);
    return h;
}

ComplexVector augmented_channel(const NetworkState &state, const Cluster &cluster, int ap) {
    if (cluster.weights.size() != static_cast<Eigen::Index>(cluster.relays.size()) + 1)
        throw std::invalid_argument("augmented_channel: weight count must be relay count + 1");
    const int n = state.n_rx();
    ComplexVector h(2 * n);
    h.head(n) = scaled_channel(state, state.source_ue(cluster.source), ap);
    h.tail(n) = cluster_matrix(state, cluster, ap) * cluster.weights;
    return h;
}

HermitianMatrix vmimo_covariance(const NetworkState &state, int victim, int ap) {
    const int n = state.n_rx();
    HermitianMatrix k = state.noise_power() * HermitianMatrix::Identity(2 * n, 2 * n);
    k.topLeftCorner(n, n) += state.aggressor_covariance(ap);
    k.bottomRightCorner(n, n) += state.aggressor_covariance(ap);
    for (int j = 0; j < state.n_sources(); ++j) {
        if (j == victim)
            continue;
        if (const Cluster *c = state.cluster_of(j)) {
            add_outer(k, augmented_channel(state, *c, ap));
        } else {
            const ComplexVector h = scaled_channel(state, state.source_ue(j), ap);
            const HermitianMatrix block = h * h.adjoint();
            k.topLeftCorner(n, n) += block;
            k.bottomRightCorner(n, n) += block;
        }
    }
    return k;
}

double aggregate_capacity(const NetworkState &state, const Cluster &cluster, int ap) {
    return capacity(mmse_sinr(augmented_channel(state, cluster, ap), vmimo_covariance(state, cluster.source, ap)));
}

double source_relay_rate(const NetworkState &state, int slot, int ue) {
    double interference = state.noise_power() + state.aggressor_power_at_ue(ue);
    for (int j = 0; j < state.n_sources(); ++j)
        if (j != slot)
            interference += state.ue_power(state.source_ue(j)) * std::norm(state.source_ue_channel(j, ue));
    const double signal = state.ue_power(state.source_ue(slot)) * std::norm(state.source_ue_channel(slot, ue));
    return capacity(signal / interference);
}

double vmimo_rate(const NetworkState &state, const Cluster &cluster, int ap) {
    double r = aggregate_capacity(state, cluster, ap);
    for (int l : cluster.relays)
        r = std::min(r, source_relay_rate(state, cluster.source, l));
    return 0.5 * r;
}

double source_rate(const NetworkState &state, int slot) {
    const int ap = state.serving_ap(slot);
    if (const Cluster *c = state.cluster_of(slot))
        return vmimo_rate(state, *c, ap);
    return unassisted_rate(state, slot, ap);
}

std::vector<double> source_rates(const NetworkState &state) {
    std::vector<double> rates;
    rates.reserve(static_cast<std::size_t>(state.n_sources()));
    for (int s = 0; s < state.n_sources(); ++s)
        rates.push_back(source_rate(state, s));
    return rates;
}

double effective_sinr_db(double rate) {
    if (rate <= 0.0)
        return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(std::expm1(rate * std::log(2.0)));
}

double rate_from_effective_sinr(double sinr_db) {
    return std::log2(1.0 + std::pow(10.0, sinr_db / 10.0));
}

double harmonic_mean(const std::vector<double> &rates, double floor, FloorMode mode) {
    if (rates.empty())
        throw std::invalid_argument("harmonic_mean: empty rate list");
    double inv_sum = 0.0;
    std::size_t count = 0;
    for (double r : rates) {
        if (r < floor) {
            if (mode == FloorMode::Exclude)
                continue;
            r = floor;
        }
        inv_sum += 1.0 / r;
        ++count;
    }
    if (count == 0)
        return 0.0;
    return static_cast<double>(count) / inv_sum;
}

std::optional<double> energy_per_bit(const std::vector<SourceEnergy> &sources, double slot_duration_s,
                                     double bandwidth_hz) {
    double energy = 0.0;
    double bits = 0.0;
    for (const SourceEnergy &s : sources) {
        energy += 2.0 * slot_duration_s * s.source_power_w;
        for (double p : s.relay_power_w)
            energy += slot_duration_s * p;
        bits += s.rate * 2.0 * slot_duration_s * bandwidth_hz;
    }
    if (!(bits > 0.0))
        return std::nullopt;
    return energy / bits;
}

RateReport make_rate_report(const NetworkState &state, double floor_rate, FloorMode mode,
                            double slot_duration_s, double bandwidth_hz) {
    RateReport report;
    std::vector<double> rates;
    std::vector<SourceEnergy> energy;
    for (int s = 0; s < state.n_sources(); ++s) {
        SourceReport sr;
        sr.rate = source_rate(state, s);
        sr.sinr_eff_db = effective_sinr_db(sr.rate);
        const double ps = state.ue_power(state.source_ue(s));
        sr.phase1_power_w = ps;
        sr.phase2_power_w = ps;
        SourceEnergy se{ps, {}, sr.rate};
        if (const Cluster *c = state.cluster_of(s)) {
            sr.assisted = true;
            sr.relay_count = static_cast<int>(c->relays.size());
            for (int l : c->relays) {
                sr.phase2_power_w += state.ue_power(l);
                se.relay_power_w.push_back(state.ue_power(l));
            }
        }
        rates.push_back(sr.rate);
        energy.push_back(std::move(se));
        report.sources.push_back(sr);
    }
    if (!rates.empty())
        report.harmonic_mean = harmonic_mean(rates, floor_rate, mode);
    report.energy_per_bit = energy_per_bit(energy, slot_duration_s, bandwidth_hz);
    return report;
}

} // namespace vmimo
