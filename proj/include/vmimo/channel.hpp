// SPDX-License-Identifier: Apache-2.0
//
// Propagation: distance path loss, log-normal shadowing, Rayleigh fast fading
// and slow power control towards a received-power target.

#pragma once

#include "vmimo/geometry.hpp"
#include "vmimo/linalg.hpp"
#include "vmimo/rng.hpp"

#include <cmath>
#include <optional>

namespace vmimo {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

struct PropagationParams {
    double pl_intercept_db = 103.4; // loss at 1 km
    double pl_slope = 24.2;         // dB per decade of distance
    double sigma_db = 8.0;          // shadowing dB-spread
    double noise_power_dbm = -101.0;
    double min_distance_m = 0.5;    // path loss is evaluated at no less than this

    double alpha() const { return pl_slope / 10.0; }
    /// G in |h|^2 = G d^-alpha with d in metres.
    double gain_constant_m() const { return std::pow(10.0, -pl_intercept_db / 10.0) * std::pow(1000.0, alpha()); }
    double noise_power_w() const { return dbm_to_watts(noise_power_dbm); }
};

struct PowerControlPolicy {
    double target_rx_power_dbm = -80.0;
    double p_max_dbm = 20.0;
};

struct PowerDecision {
    double power_w;
    bool saturated;
};

struct LinkChannel {
    ComplexVector gain_vector; // one entry per receive antenna, includes mean gain
    double mean_gain = 0.0;    // path loss x shadowing, linear
    double tx_power = 0.0;     // W
    bool saturated = false;
};

/// Linear power gain at distance d metres (clamped below at min_distance_m).
double path_gain(double d_m, const PropagationParams &params);

/// 10^(sigma_db V / 10) with V standard normal.
double sample_shadowing(double sigma_db, Substream &rng);

/// i.i.d. CN(0, 1) entries.
ComplexVector sample_rayleigh(int n_rx, Substream &rng);

PowerDecision power_control(double mean_gain, const PowerControlPolicy &policy);

/// Builds one transmitter-to-receiver link. Shadowing and fading come from
/// separate substreams so a reciprocal pair can share its shadowing draw.
/// tx_power is set against `serving_mean_gain` when given, else against this
/// link's own mean gain.
LinkChannel build_link(const Point &tx, const Point &rx, int n_rx, const PropagationParams &params,
                       const PowerControlPolicy &policy, Substream &shadow_rng, Substream &fading_rng,
                       std::optional<double> serving_mean_gain = std::nullopt, bool rayleigh = true);

} // namespace vmimo
