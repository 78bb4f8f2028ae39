// SPDX-License-Identifier: Apache-2.0

#include "vmimo/channel.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace vmimo {

double path_gain(double d_m, const PropagationParams &params) {
    const double d_km = std::max(d_m, params.min_distance_m) / 1000.0;
    return std::pow(10.0, -(params.pl_intercept_db + params.pl_slope * std::log10(d_km)) / 10.0);
}

double sample_shadowing(double sigma_db, Substream &rng) {
    if (!(sigma_db >= 0.0))
        throw std::invalid_argument("sample_shadowing: negative dB-spread");
    if (sigma_db == 0.0)
        return 1.0;
    std::normal_distribution<double> normal;
    return std::pow(10.0, sigma_db * normal(rng) / 10.0);
}

ComplexVector sample_rayleigh(int n_rx, Substream &rng) {
    if (n_rx < 1)
        throw std::invalid_argument("sample_rayleigh: need at least one antenna");
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    ComplexVector h(n_rx);
    for (int i = 0; i < n_rx; ++i) {
        const double re = normal(rng);
        h(i) = {re, normal(rng)};
    }
    return h;
}

PowerDecision power_control(double mean_gain, const PowerControlPolicy &policy) {
    if (!(mean_gain > 0.0))
        throw std::invalid_argument("power_control: mean gain must be positive");
    const double p_max = dbm_to_watts(policy.p_max_dbm);
    const double required = dbm_to_watts(policy.target_rx_power_dbm) / mean_gain;
    // The relative slack keeps an exactly-at-cap request from being flagged.
    if (required > p_max * (1.0 + 1e-12))
        return {p_max, true};
    return {std::min(required, p_max), false};
}

LinkChannel build_link(const Point &tx, const Point &rx, int n_rx, const PropagationParams &params,
                       const PowerControlPolicy &policy, Substream &shadow_rng, Substream &fading_rng,
                       std::optional<double> serving_mean_gain, bool rayleigh) {
    LinkChannel link;
    link.mean_gain = path_gain(distance(tx, rx), params) * sample_shadowing(params.sigma_db, shadow_rng);
    const ComplexVector fading = rayleigh ? sample_rayleigh(n_rx, fading_rng)
                                          : ComplexVector(ComplexVector::Ones(n_rx));
    link.gain_vector = std::sqrt(link.mean_gain) * fading;
    const PowerDecision pc = power_control(serving_mean_gain.value_or(link.mean_gain), policy);
    link.tx_power = pc.power_w;
    link.saturated = pc.saturated;
    return link;
}

} // namespace vmimo
