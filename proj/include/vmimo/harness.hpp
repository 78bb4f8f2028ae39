// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo orchestration: scenario config, per-trial network sampling,
// campaigns over (density, codebook) points, single-source validation
// against the analytic bounds, and CSV/JSON emitters.

#pragma once

#include "vmimo/bounds.hpp"
#include "vmimo/channel.hpp"
#include "vmimo/clustering.hpp"
#include "vmimo/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace vmimo {

enum class Algorithm { Alg2, Exhaustive, None };

/// How sources are picked. PerAp: each AP schedules a uniformly chosen UE
/// among those it serves. UniformNearest: M distinct UEs uniformly, each at
/// its nearest AP (APs may share). UniformAnyAp: M distinct UEs uniformly,
/// the i-th served by AP i whatever the distance.
enum class Scheduling { PerAp, UniformNearest, UniformAnyAp };

/// Where aggressors are power-controlled to: a separate set of APs, or the
/// nearest AP of the simulated network.
enum class AggressorServing { OwnAps, NetworkAps };

const char *to_string(Algorithm a);
const char *to_string(Scheduling s);
const char *to_string(AggressorServing s);
Algorithm algorithm_from_string(const std::string &s);

struct ScenarioConfig {
    double field_width = 100.0;
    double field_height = 100.0;
    int n_aps = 5;
    double ue_density = 0.008;
    double aggressor_density = 1e-3;
    int n_aggressor_aps = 5;
    int n_rx = 4;
    int codebook_size = 2;              // 0: unquantized phases
    double sigma_db = 8.0;
    double pl_intercept_db = 103.4;
    double pl_slope = 24.2;
    double noise_power_dbm = -101.0;
    double p_max_dbm = 20.0;
    double target_rx_dbm = -80.0;
    double min_distance_m = 0.5;
    bool rayleigh = true;
    int trials = 300;
    std::uint64_t master_seed = 1;
    double coverage_threshold_db = -10.0;
    Algorithm algorithm = Algorithm::Alg2;
    Scheduling scheduling = Scheduling::UniformNearest;
    AggressorServing aggressor_serving = AggressorServing::OwnAps;
    double bandwidth_hz = 20e6;
    double slot_duration_s = 1e-3;
    std::uint64_t enumeration_limit = 4096;
    std::uint64_t exhaustive_cap = 1000000;
    int max_resamples = 1000;
    double sinr_bin_db = 2.0;
    int threads = 0;                    // 0: hardware concurrency
    std::vector<double> sweep_ue_density;   // empty: just ue_density
    std::vector<int> sweep_codebook_size;   // empty: just codebook_size

    PropagationParams propagation() const;
    PowerControlPolicy power_policy() const;
    ClusteringConfig clustering() const;
    double floor_rate() const;
    void validate() const;
};

/// JSON text with the field names above; missing fields keep their defaults
/// and unknown fields are rejected.
ScenarioConfig parse_config(const std::string &json_text);
std::string dump_config(const ScenarioConfig &config);
ScenarioConfig load_config(const std::filesystem::path &path);

/// A sampled network ready for clustering.
struct TrialSetup {
    std::uint64_t seed = 0;
    int attempts = 1;        // 1 + resamples
    Deployment deployment;
    NetworkState state{1, 1.0, 0, 1};
    std::vector<int> idle;   // UE ids not scheduled
    std::vector<int> serving_ap; // per UE
};

/// Draws UEs, APs and aggressors, schedules M sources per the configured rule
/// and builds all links. Resamples when the draw cannot be scheduled (fewer
/// UEs than APs, or under PerAp an AP with no UE).
TrialSetup sample_trial(const ScenarioConfig &config, int trial_index);

struct SourceRecord {
    int ue = 0;
    int ap = 0;
    double baseline_rate = 0.0;
    double rate = 0.0;
    double baseline_sinr_db = 0.0;
    double sinr_db = 0.0;
    int relay_count = 0;
    double feedback_bits = 0.0;
    double baseline_energy_j = 0.0; // both phases, source only
    double energy_j = 0.0;          // both phases, source and relays
    bool power_saturated = false;
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    int attempts = 1;
    int n_ue = 0;
    int n_aggressors = 0;
    std::vector<SourceRecord> sources;
    double baseline_hm = 0.0;
    double hm = 0.0;
    double baseline_energy_j = 0.0;
    double energy_j = 0.0;
    double baseline_bits = 0.0;
    double bits = 0.0;
    double baseline_eb = 0.0; // J/bit, NaN when no bits
    double eb = 0.0;
    int trace_violations = 0; // accepted rates not strictly increasing
};

TrialRecord run_trial(const ScenarioConfig &config, int trial_index);

/// Headline metrics pool every source of every trial: the harmonic mean is
/// the floored harmonic mean over all sources, and energy per bit is the
/// mean over sources of each source's own J/bit. Per-trial variants are kept
/// alongside.
struct PointSummary {
    double ue_density = 0.0;
    int codebook_size = 0;
    int trials = 0;
    int resamples = 0;
    double baseline_hm = 0.0;
    double hm = 0.0;
    double hm_improvement_pct = 0.0;
    double trial_baseline_hm = 0.0;      // mean of per-trial harmonic means
    double trial_hm = 0.0;
    double trial_hm_improvement_pct = 0.0;
    double baseline_eb = 0.0;            // J/bit
    double eb = 0.0;
    double eb_change_pct = 0.0;
    double trial_eb_change_pct = 0.0;    // mean over trials of total energy / total bits
    double pooled_eb_change_pct = 0.0;   // campaign energy / campaign bits
    double mean_relays = 0.0;
    double assisted_fraction = 0.0;
    int trace_violations = 0;
};

struct SinrBin {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
    double mean_delta_db = 0.0;
    double mean_relays = 0.0;
};

struct PointResult {
    ScenarioConfig config; // with the point's density and codebook substituted
    std::vector<TrialRecord> trials;
    PointSummary summary;
    std::vector<SinrBin> bins;
};

struct CampaignReport {
    ScenarioConfig config;
    std::vector<PointResult> points;
};

/// Runs `trials` independent trials on a worker pool; the fold is ordered by
/// trial index.
std::vector<TrialRecord> run_trials(const ScenarioConfig &config);
PointSummary summarize(const ScenarioConfig &config, const std::vector<TrialRecord> &trials);
std::vector<SinrBin> bin_by_baseline(const std::vector<TrialRecord> &trials, double width_db);
CampaignReport run_campaign(const ScenarioConfig &config);

enum class OutputFormat { Csv, Json };

/// Writes the campaign into `dir`; returns the files written.
std::vector<std::filesystem::path> write_campaign(const CampaignReport &report, const std::filesystem::path &dir,
                                                  OutputFormat format);

// Single-source scalar validation --------------------------------------------

struct SingleSourceConfig {
    double src_reference_m = 35.0; // src_snr = gamma * d_ref^alpha
    double alpha = 2.42;
    double shadow_sigma_db = 8.0;  // used by the shadowed schemes
    double d_max = 25.0;
    double delta = 0.05;
    int placements = 2000;
    std::uint64_t master_seed = 1;
    int threads = 0;
};

enum class Scheme { LemmaShadowed, AlgShadowedContinuous, Theorem, AlgContinuous, AlgEightPhase, AlgNoPrecoding };

const char *scheme_label(Scheme s);

struct SchemeStats {
    Scheme scheme = Scheme::Theorem;
    double mean = 0.0;
    double std_error = 0.0;
    double mean_relays = 0.0;
    int trace_violations = 0;
};

struct ValidationPoint {
    double gamma_db = 0.0;
    double lambda = 0.0;
    double baseline = 0.0;
    std::vector<SchemeStats> schemes; // in requested order
    const SchemeStats &at(Scheme s) const;
};

/// One placement: the source at the origin, relays from a PPP on a disk,
/// every relay power-controlled to SNR gamma at the AP with a uniform phase.
SourceOutcome single_source_trial(double gamma, double lambda, double sigma_db, const Codebook &codebook,
                                  const SingleSourceConfig &cfg, std::uint64_t seed);

/// Checks the sweep invariants on one outcome. `continuous` enables the
/// gamma_AP monotonicity check. Returns the number of violations.
int trace_violations(const SourceOutcome &outcome, bool continuous);

std::vector<Scheme> all_schemes();

/// Bounds and Monte Carlo means per (gamma, lambda) grid point. Placements
/// are shared across the unshadowed schemes so their comparison is paired.
std::vector<ValidationPoint> run_single_source_validation(const std::vector<double> &gamma_db,
                                                          const std::vector<double> &lambda,
                                                          const SingleSourceConfig &cfg,
                                                          const std::vector<Scheme> &schemes = all_schemes());

void write_validation(const std::vector<ValidationPoint> &points, const std::filesystem::path &dir,
                      OutputFormat format);

/// 12 significant digits, "inf"/"-inf"/"nan" spelled out.
std::string format_number(double x);

/// Runs f(i) for i in [0, n) on `threads` workers (0: hardware concurrency).
void parallel_for(int n, int threads, const std::function<void(int)> &f);

} // namespace vmimo
