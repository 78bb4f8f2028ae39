// SPDX-License-Identifier: Apache-2.0

#include "vmimo/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace vmimo {

namespace {

std::vector<RelayCandidate> sorted_candidates(const ClusterEvaluator &ev, double factor) {
    const double threshold = factor * ev.eligibility_rate();
    std::vector<RelayCandidate> out;
    for (const RelayCandidate &c : ev.idle())
        if (c.r_sl > threshold)
            out.push_back(c);
    std::sort(out.begin(), out.end(), [](const RelayCandidate &a, const RelayCandidate &b) {
        if (a.r_sl != b.r_sl)
            return a.r_sl > b.r_sl;
        return a.ue < b.ue;
    });
    return out;
}

HermitianMatrix gram(const Eigen::MatrixXcd &x) {
    HermitianMatrix q = x.adjoint() * x;
    return 0.5 * (q + q.adjoint());
}

} // namespace

ScalarEvaluator::ScalarEvaluator(std::complex<double> source_gain, std::vector<RelayCandidate> relays,
                                 std::vector<std::complex<double>> relay_gains, Codebook codebook,
                                 PrecoderPolicy policy)
    : source_gain_(source_gain), relays_(std::move(relays)), gains_(std::move(relay_gains)), codebook_(codebook),
      policy_(policy) {
    for (const RelayCandidate &c : relays_)
        if (c.ue < 0 || c.ue >= static_cast<int>(gains_.size()))
            throw std::out_of_range("ScalarEvaluator: relay id without a gain");
}

double ScalarEvaluator::direct_rate() const { return capacity(std::norm(source_gain_)); }

PrecodedCluster ScalarEvaluator::precode(const std::vector<int> &relays) {
    const auto n = static_cast<Eigen::Index>(relays.size()) + 1;
    std::vector<std::complex<double>> g;
    g.reserve(static_cast<std::size_t>(n));
    g.push_back(source_gain_);
    for (int ue : relays)
        g.push_back(gains_.at(static_cast<std::size_t>(ue)));

    PrecodedCluster out;
    if (codebook_.is_continuous()) {
        out.weights = continuous_phase_match(g);
        double sum = 0.0;
        for (const auto &x : g)
            sum += std::abs(x);
        out.gamma_ap = std::norm(source_gain_) + sum * sum;
        return out;
    }
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(2, n + 1);
    x(0, 0) = source_gain_;
    for (Eigen::Index i = 0; i < n; ++i)
        x(1, i + 1) = g[static_cast<std::size_t>(i)];
    const PrecodingSolution sol = solve_precoding({gram(x), codebook_}, policy_);
    out.weights = sol.cluster_weights();
    out.gamma_ap = sol.objective;
    return out;
}

NetworkEvaluator::NetworkEvaluator(const NetworkState &state, int slot, const std::vector<int> &idle_pool,
                                   double eligibility_rate, Codebook codebook, PrecoderPolicy policy)
    : eligibility_(eligibility_rate), pool_(idle_pool), codebook_(codebook), policy_(policy) {
    std::sort(pool_.begin(), pool_.end());
    const int ap = state.serving_ap(slot);
    const int n = state.n_rx();
    direct_ = unassisted_rate(state, slot, ap);

    Eigen::LLT<HermitianMatrix> llt(vmimo_covariance(state, slot, ap));
    if (llt.info() != Eigen::Success)
        throw SingularCovariance();

    // Whiten column by column so a column's value never depends on which
    // other relays share the pool.
    whitened_.resize(2 * n, static_cast<Eigen::Index>(pool_.size()) + 2);
    const int src = state.source_ue(slot);
    const ComplexVector hs = std::sqrt(state.ue_power(src)) * state.ue_ap_channel(src, ap);
    ComplexVector col = ComplexVector::Zero(2 * n);
    col.head(n) = hs;
    whitened_.col(0) = llt.matrixL().solve(col);
    col.setZero();
    col.tail(n) = hs;
    whitened_.col(1) = llt.matrixL().solve(col);
    for (std::size_t i = 0; i < pool_.size(); ++i) {
        const int ue = pool_[i];
        if (state.is_source(ue))
            throw std::invalid_argument("NetworkEvaluator: a source cannot be idle");
        col.setZero();
        col.tail(n) = std::sqrt(state.ue_power(ue)) * state.ue_ap_channel(ue, ap);
        whitened_.col(static_cast<Eigen::Index>(i) + 2) = llt.matrixL().solve(col);
        idle_.push_back({ue, source_relay_rate(state, slot, ue)});
    }
}

Eigen::Index NetworkEvaluator::column_of(int ue) const {
    const auto it = std::lower_bound(pool_.begin(), pool_.end(), ue);
    if (it == pool_.end() || *it != ue)
        throw std::out_of_range("NetworkEvaluator: relay not in the idle pool");
    return static_cast<Eigen::Index>(it - pool_.begin()) + 2;
}

PrecodedCluster NetworkEvaluator::precode(const std::vector<int> &relays) {
    Eigen::MatrixXcd x(whitened_.rows(), static_cast<Eigen::Index>(relays.size()) + 2);
    x.col(0) = whitened_.col(0);
    x.col(1) = whitened_.col(1);
    for (std::size_t i = 0; i < relays.size(); ++i)
        x.col(static_cast<Eigen::Index>(i) + 2) = whitened_.col(column_of(relays[i]));
    const PrecodingSolution sol = solve_precoding({gram(x), codebook_}, policy_);
    return {sol.objective, sol.cluster_weights()};
}

SourceOutcome algorithm1(ClusterEvaluator &evaluator, const ClusteringConfig &config, int source_slot) {
    if (!(config.candidate_factor > 0.0))
        throw std::invalid_argument("algorithm1: candidate_factor must be positive");
    SourceOutcome out;
    out.source = source_slot;
    out.direct_rate = evaluator.direct_rate();
    const std::vector<RelayCandidate> candidates = sorted_candidates(evaluator, config.candidate_factor);
    out.candidates = static_cast<int>(candidates.size());

    std::vector<int> cluster;
    double r_old = 0.0;
    double r_min_kept = std::numeric_limits<double>::infinity();
    PrecodedCluster kept;
    for (const RelayCandidate &c : candidates) {
        TraceStep step;
        step.relay = c.ue;
        step.r_sl = c.r_sl;
        step.r_min = std::min(r_min_kept, c.r_sl);
        if (config.prune && 0.5 * step.r_min <= r_old) {
            step.pruned = true;
        } else {
            cluster.push_back(c.ue);
            PrecodedCluster pc = evaluator.precode(cluster);
            ++out.precodings;
            step.gamma_ap = pc.gamma_ap;
            step.r_new = 0.5 * std::min(capacity(pc.gamma_ap), step.r_min);
            if (step.r_new > r_old) {
                step.accepted = true;
                r_old = step.r_new;
                r_min_kept = step.r_min;
                kept = std::move(pc);
            } else {
                cluster.pop_back();
            }
        }
        if (config.record_trace)
            out.trace.push_back(step);
    }

    if (cluster.empty() || r_old < out.direct_rate) {
        out.rate = out.direct_rate;
        return out;
    }
    out.assisted = true;
    out.rate = r_old;
    out.relays = std::move(cluster);
    out.weights = std::move(kept.weights);
    out.gamma_ap = kept.gamma_ap;
    return out;
}

SourceOutcome best_subset(ClusterEvaluator &evaluator, const ClusteringConfig &config, int source_slot) {
    SourceOutcome out;
    out.source = source_slot;
    out.direct_rate = evaluator.direct_rate();
    const std::vector<RelayCandidate> candidates = sorted_candidates(evaluator, config.candidate_factor);
    out.candidates = static_cast<int>(candidates.size());
    if (candidates.size() >= 63 || (std::uint64_t{1} << candidates.size()) > config.exhaustive_cap)
        throw ExhaustiveInfeasible();

    double best = -1.0;
    const std::uint64_t total = std::uint64_t{1} << candidates.size();
    for (std::uint64_t mask = 1; mask < total; ++mask) {
        std::vector<int> cluster;
        double r_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (mask >> i & 1U) {
                cluster.push_back(candidates[i].ue);
                r_min = std::min(r_min, candidates[i].r_sl);
            }
        }
        PrecodedCluster pc = evaluator.precode(cluster);
        ++out.precodings;
        const double r = 0.5 * std::min(capacity(pc.gamma_ap), r_min);
        if (r > best) {
            best = r;
            out.relays = cluster;
            out.weights = pc.weights;
            out.gamma_ap = pc.gamma_ap;
        }
    }
    if (best < out.direct_rate) {
        out.rate = out.direct_rate;
        out.relays.clear();
        out.weights = ComplexVector();
        out.gamma_ap = 0.0;
        return out;
    }
    out.assisted = true;
    out.rate = best;
    return out;
}

std::vector<double> baseline_rates(NetworkState &state) {
    state.clear_clusters();
    std::vector<double> rates;
    for (int s = 0; s < state.n_sources(); ++s)
        rates.push_back(unassisted_rate(state, s, state.serving_ap(s)));
    return rates;
}

std::vector<int> ascending_order(const NetworkState &state, const std::vector<double> &baseline) {
    std::vector<int> order(static_cast<std::size_t>(state.n_sources()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (baseline[static_cast<std::size_t>(a)] != baseline[static_cast<std::size_t>(b)])
            return baseline[static_cast<std::size_t>(a)] < baseline[static_cast<std::size_t>(b)];
        return state.source_ue(a) < state.source_ue(b);
    });
    return order;
}

void check_partition(const NetworkState &state, const std::vector<Cluster> &clusters, const std::vector<int> &idle) {
    const std::set<int> pool(idle.begin(), idle.end());
    std::set<int> seen;
    for (const Cluster &c : clusters) {
        for (int r : c.relays) {
            if (state.is_source(r))
                throw std::logic_error("cluster recruits a source");
            if (!pool.count(r))
                throw std::logic_error("cluster relay outside the idle pool");
            if (!seen.insert(r).second)
                throw std::logic_error("clusters overlap");
        }
    }
}

namespace {

void finish(NetworkState &state, ClusteringResult &res, const ClusteringConfig &config) {
    res.clusters = state.clusters();
    res.final_rates = source_rates(state);
    res.objective = res.final_rates.empty() ? 0.0 : harmonic_mean(res.final_rates, config.floor_rate);
}

} // namespace

ClusteringResult algorithm2(NetworkState &state, const std::vector<int> &idle, const ClusteringConfig &config) {
    ClusteringResult res;
    res.baseline_rates = baseline_rates(state);
    res.order = ascending_order(state, res.baseline_rates);
    res.outcomes.resize(static_cast<std::size_t>(state.n_sources()));

    std::vector<int> pool(idle);
    std::sort(pool.begin(), pool.end());
    for (int s : res.order) {
        NetworkEvaluator ev(state, s, pool, res.baseline_rates[static_cast<std::size_t>(s)], config.codebook,
                            config.precoder);
        SourceOutcome out = algorithm1(ev, config, s);
        if (out.assisted) {
            state.commit_cluster({s, out.relays, out.weights});
            std::erase_if(pool, [&](int ue) {
                return std::find(out.relays.begin(), out.relays.end(), ue) != out.relays.end();
            });
        }
        res.outcomes[static_cast<std::size_t>(s)] = std::move(out);
    }
    finish(state, res, config);
    check_partition(state, res.clusters, idle);
    return res;
}

ClusteringResult exhaustive_baseline(NetworkState &state, const std::vector<int> &idle,
                                     const ClusteringConfig &config) {
    ClusteringResult res;
    res.baseline_rates = baseline_rates(state);
    res.order = ascending_order(state, res.baseline_rates);
    res.outcomes.resize(static_cast<std::size_t>(state.n_sources()));

    std::vector<int> pool(idle);
    std::sort(pool.begin(), pool.end());
    // options[i]: sources relay pool[i] may join, with the matching r_sl.
    std::vector<std::vector<RelayCandidate>> options(pool.size());
    std::uint64_t space = 1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (int s = 0; s < state.n_sources(); ++s) {
            const double r_sl = source_relay_rate(state, s, pool[i]);
            if (r_sl > config.candidate_factor * res.baseline_rates[static_cast<std::size_t>(s)])
                options[i].push_back({s, r_sl});
        }
        const std::uint64_t k = options[i].size() + 1;
        if (space > config.exhaustive_cap / k)
            throw ExhaustiveInfeasible();
        space *= k;
    }
    res.assignments = space;

    std::vector<std::size_t> choice(pool.size(), 0); // 0: unused, j: options[i][j - 1]
    double best = -1.0;
    std::vector<Cluster> best_clusters;
    for (std::uint64_t step = 0; step < space; ++step) {
        state.clear_clusters();
        for (int s : res.order) {
            std::vector<RelayCandidate> members;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (choice[i] > 0 && options[i][choice[i] - 1].ue == s)
                    members.push_back({pool[i], options[i][choice[i] - 1].r_sl});
            if (members.empty())
                continue;
            std::sort(members.begin(), members.end(), [](const RelayCandidate &a, const RelayCandidate &b) {
                if (a.r_sl != b.r_sl)
                    return a.r_sl > b.r_sl;
                return a.ue < b.ue;
            });
            std::vector<int> relays;
            for (const RelayCandidate &m : members)
                relays.push_back(m.ue);
            NetworkEvaluator ev(state, s, relays, res.baseline_rates[static_cast<std::size_t>(s)], config.codebook,
                                config.precoder);
            const PrecodedCluster pc = ev.precode(relays);
            state.commit_cluster({s, relays, pc.weights});
        }
        const double obj = harmonic_mean(source_rates(state), config.floor_rate);
        if (obj > best) {
            best = obj;
            best_clusters = state.clusters();
        }
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (++choice[i] <= options[i].size())
                break;
            choice[i] = 0;
        }
    }

    state.clear_clusters();
    for (const Cluster &c : best_clusters)
        state.commit_cluster(c);
    for (int s = 0; s < state.n_sources(); ++s) {
        SourceOutcome &out = res.outcomes[static_cast<std::size_t>(s)];
        out.source = s;
        out.direct_rate = res.baseline_rates[static_cast<std::size_t>(s)];
        if (const Cluster *c = state.cluster_of(s)) {
            out.assisted = true;
            out.relays = c->relays;
            out.weights = c->weights;
        }
    }
    finish(state, res, config);
    for (int s = 0; s < state.n_sources(); ++s)
        res.outcomes[static_cast<std::size_t>(s)].rate = res.final_rates[static_cast<std::size_t>(s)];
    check_partition(state, res.clusters, idle);
    return res;
}

} // namespace vmimo
