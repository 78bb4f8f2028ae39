// SPDX-License-Identifier: Apache-2.0

#include "vmimo/harness.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace vmimo {

using nlohmann::json;

namespace {

// Substream kinds. Each link draws from its own keyed stream.
enum : std::uint64_t {
    kShadowUeAp = 1,
    kFadeUeAp,
    kShadowUeUe,
    kFadeUeUe,
    kShadowAggAp,
    kFadeAggAp,
    kShadowAggUe,
    kFadeAggUe,
    kShadowAggServe,
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t u64(int x) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(x)); }

double mean_gain(const Point &a, const Point &b, const PropagationParams &pp, Substream &&shadow) {
    return path_gain(distance(a, b), pp) * sample_shadowing(pp.sigma_db, shadow);
}

ComplexVector faded(double gain, int n_rx, bool rayleigh, Substream &&rng) {
    if (!rayleigh)
        return ComplexVector::Constant(n_rx, std::sqrt(gain));
    return std::sqrt(gain) * sample_rayleigh(n_rx, rng);
}

} // namespace

const char *to_string(Algorithm a) {
    switch (a) {
    case Algorithm::Alg2: return "alg2";
    case Algorithm::Exhaustive: return "exhaustive";
    case Algorithm::None: return "none";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string &s) {
    if (s == "alg2")
        return Algorithm::Alg2;
    if (s == "exhaustive")
        return Algorithm::Exhaustive;
    if (s == "none")
        return Algorithm::None;
    throw std::invalid_argument("unknown algorithm '" + s + "' (expected alg2, exhaustive or none)");
}

const char *to_string(Scheduling s) {
    switch (s) {
    case Scheduling::PerAp: return "per_ap";
    case Scheduling::UniformNearest: return "uniform_nearest";
    case Scheduling::UniformAnyAp: return "uniform_any_ap";
    }
    return "unknown";
}

const char *to_string(AggressorServing s) {
    return s == AggressorServing::OwnAps ? "own_aps" : "network_aps";
}

PropagationParams ScenarioConfig::propagation() const {
    PropagationParams p;
    p.pl_intercept_db = pl_intercept_db;
    p.pl_slope = pl_slope;
    p.sigma_db = sigma_db;
    p.noise_power_dbm = noise_power_dbm;
    p.min_distance_m = min_distance_m;
    return p;
}

PowerControlPolicy ScenarioConfig::power_policy() const { return {target_rx_dbm, p_max_dbm}; }

ClusteringConfig ScenarioConfig::clustering() const {
    ClusteringConfig c;
    c.codebook = Codebook{codebook_size};
    c.precoder.enumeration_limit = enumeration_limit;
    c.exhaustive_cap = exhaustive_cap;
    c.floor_rate = floor_rate();
    return c;
}

double ScenarioConfig::floor_rate() const { return rate_from_effective_sinr(coverage_threshold_db); }

void ScenarioConfig::validate() const {
    auto fail = [](const std::string &what) { throw std::invalid_argument("invalid config: " + what); };
    if (!(field_width > 0.0) || !(field_height > 0.0))
        fail("field dimensions must be positive");
    if (n_aps < 1)
        fail("n_aps must be at least 1");
    if (!(ue_density >= 0.0) || !(aggressor_density >= 0.0))
        fail("densities must be non-negative");
    for (double d : sweep_ue_density)
        if (!(d >= 0.0))
            fail("densities must be non-negative");
    if (n_aggressor_aps < 1 && aggressor_density > 0.0)
        fail("aggressors need at least one aggressor AP");
    if (n_rx < 1)
        fail("n_rx must be at least 1");
    if (codebook_size < 0)
        fail("codebook_size must be >= 0 (0 means unquantized)");
    for (int n : sweep_codebook_size)
        if (n < 0)
            fail("codebook_size must be >= 0 (0 means unquantized)");
    if (!(sigma_db >= 0.0))
        fail("sigma_db must be non-negative");
    if (trials < 1)
        fail("trials must be at least 1");
    if (!(bandwidth_hz > 0.0) || !(slot_duration_s > 0.0))
        fail("bandwidth_hz and slot_duration_s must be positive");
    if (!(sinr_bin_db > 0.0))
        fail("sinr_bin_db must be positive");
    if (max_resamples < 0)
        fail("max_resamples must be non-negative");
}

#define VMIMO_CONFIG_FIELDS(X)                                                                                 \
    X(field_width) X(field_height) X(n_aps) X(ue_density) X(aggressor_density) X(n_aggressor_aps) X(n_rx)     \
        X(codebook_size) X(sigma_db) X(pl_intercept_db) X(pl_slope) X(noise_power_dbm) X(p_max_dbm)           \
            X(target_rx_dbm) X(min_distance_m) X(rayleigh) X(trials) X(master_seed) X(coverage_threshold_db)   \
                X(bandwidth_hz) X(slot_duration_s) X(enumeration_limit) X(exhaustive_cap) X(max_resamples)     \
                    X(sinr_bin_db) X(threads) X(sweep_ue_density) X(sweep_codebook_size)

namespace {

json config_json(const ScenarioConfig &c) {
    json j;
#define X(name) j[#name] = c.name;
    VMIMO_CONFIG_FIELDS(X)
#undef X
    j["algorithm"] = to_string(c.algorithm);
    j["scheduling"] = to_string(c.scheduling);
    j["aggressor_serving"] = to_string(c.aggressor_serving);
    return j;
}

} // namespace

ScenarioConfig parse_config(const std::string &json_text) {
    const json j = json::parse(json_text);
    if (!j.is_object())
        throw std::invalid_argument("config must be a JSON object");
    ScenarioConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string &key = it.key();
        bool known = false;
#define X(name)                                                                                                \
    if (key == #name) {                                                                                        \
        it.value().get_to(c.name);                                                                             \
        known = true;                                                                                          \
    }
        VMIMO_CONFIG_FIELDS(X)
#undef X
        if (key == "algorithm") {
            c.algorithm = algorithm_from_string(it.value().get<std::string>());
            known = true;
        }
        if (key == "scheduling") {
            const std::string v = it.value().get<std::string>();
            if (v == "per_ap")
                c.scheduling = Scheduling::PerAp;
            else if (v == "uniform_nearest")
                c.scheduling = Scheduling::UniformNearest;
            else if (v == "uniform_any_ap")
                c.scheduling = Scheduling::UniformAnyAp;
            else
                throw std::invalid_argument("unknown scheduling '" + v + "'");
            known = true;
        }
        if (key == "aggressor_serving") {
            const std::string v = it.value().get<std::string>();
            if (v == "own_aps")
                c.aggressor_serving = AggressorServing::OwnAps;
            else if (v == "network_aps")
                c.aggressor_serving = AggressorServing::NetworkAps;
            else
                throw std::invalid_argument("unknown aggressor_serving '" + v + "'");
            known = true;
        }
        if (!known)
            throw std::invalid_argument("unknown config field '" + key + "'");
    }
    c.validate();
    return c;
}

std::string dump_config(const ScenarioConfig &config) { return config_json(config).dump(2); }

ScenarioConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void parallel_for(int n, int threads, const std::function<void(int)> &f) {
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex mutex;
    int failed_index = n;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(mutex);
                    // Report the lowest failing index so errors are reproducible.
                    if (i < failed_index) {
                        failed_index = i;
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (std::thread &t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

TrialSetup sample_trial(const ScenarioConfig &config, int trial_index) {
    config.validate();
    const Field field{config.field_width, config.field_height};
    const PropagationParams pp = config.propagation();
    const PowerControlPolicy policy = config.power_policy();

    for (int attempt = 0; attempt <= config.max_resamples; ++attempt) {
        const std::uint64_t seed = derive_seed(config.master_seed, {u64(trial_index), u64(attempt)});
        std::mt19937_64 gen(seed);
        Deployment dep;
        dep.ue_positions = sample_ppp(config.ue_density, field, gen);
        dep.ap_positions = sample_uniform(static_cast<std::size_t>(config.n_aps), field, gen);
        dep.aggressor_positions = sample_ppp(config.aggressor_density, field, gen);
        dep.aggressor_ap_positions = sample_uniform(
            static_cast<std::size_t>(dep.aggressor_positions.empty() ? 0 : config.n_aggressor_aps), field, gen);

        const int n_ue = static_cast<int>(dep.ue_positions.size());
        const int n_ap = config.n_aps;
        if (n_ue < n_ap)
            continue;

        Eigen::MatrixXd gain(n_ue, n_ap);
        std::vector<int> serving(static_cast<std::size_t>(n_ue));
        std::vector<std::vector<int>> members(static_cast<std::size_t>(n_ap));
        for (int u = 0; u < n_ue; ++u) {
            for (int a = 0; a < n_ap; ++a)
                gain(u, a) = mean_gain(dep.ue_positions[u], dep.ap_positions[a], pp,
                                       Substream(seed, {kShadowUeAp, u64(u), u64(a)}));
            Eigen::Index best;
            gain.row(u).maxCoeff(&best);
            serving[static_cast<std::size_t>(u)] = static_cast<int>(best);
            members[static_cast<std::size_t>(best)].push_back(u);
        }
        // (source UE, serving AP) per slot.
        std::vector<std::pair<int, int>> schedule;
        if (config.scheduling == Scheduling::PerAp) {
            if (std::any_of(members.begin(), members.end(), [](const auto &m) { return m.empty(); }))
                continue;
            for (int a = 0; a < n_ap; ++a) {
                const auto &m = members[static_cast<std::size_t>(a)];
                std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
                schedule.emplace_back(m[pick(gen)], a);
            }
        } else {
            // Partial Fisher-Yates: M distinct UEs, uniformly.
            std::vector<int> ids(static_cast<std::size_t>(n_ue));
            std::iota(ids.begin(), ids.end(), 0);
            for (int a = 0; a < n_ap; ++a) {
                std::uniform_int_distribution<int> pick(a, n_ue - 1);
                std::swap(ids[static_cast<std::size_t>(a)], ids[static_cast<std::size_t>(pick(gen))]);
                const int u = ids[static_cast<std::size_t>(a)];
                schedule.emplace_back(u, config.scheduling == Scheduling::UniformNearest
                                             ? serving[static_cast<std::size_t>(u)]
                                             : a);
            }
        }
        for (const auto &[u, a] : schedule)
            serving[static_cast<std::size_t>(u)] = a;

        TrialSetup t;
        t.seed = seed;
        t.attempts = attempt + 1;
        t.state = NetworkState(config.n_rx, pp.noise_power_w(), n_ue, n_ap);
        t.serving_ap = serving;
        for (int u = 0; u < n_ue; ++u) {
            t.state.set_ue_power(u, power_control(gain(u, serving[static_cast<std::size_t>(u)]), policy).power_w);
            for (int a = 0; a < n_ap; ++a)
                t.state.set_ue_ap_channel(u, a,
                                          faded(gain(u, a), config.n_rx, config.rayleigh,
                                                Substream(seed, {kFadeUeAp, u64(u), u64(a)})));
        }
        for (const auto &[u, a] : schedule)
            t.state.add_source(u, a);
        for (int s = 0; s < n_ap; ++s) {
            const int src = t.state.source_ue(s);
            for (int u = 0; u < n_ue; ++u) {
                if (u == src)
                    continue;
                const auto lo = u64(std::min(src, u)), hi = u64(std::max(src, u));
                const double g = mean_gain(dep.ue_positions[src], dep.ue_positions[u], pp,
                                           Substream(seed, {kShadowUeUe, lo, hi}));
                t.state.set_source_ue_channel(
                    s, u, faded(g, 1, config.rayleigh, Substream(seed, {kFadeUeUe, lo, hi}))(0));
            }
        }
        for (int u = 0; u < n_ue; ++u)
            if (!t.state.is_source(u))
                t.idle.push_back(u);

        const int n_agg = static_cast<int>(dep.aggressor_positions.size());
        std::vector<Eigen::MatrixXcd> to_ap(static_cast<std::size_t>(n_ap), Eigen::MatrixXcd(config.n_rx, n_agg));
        std::vector<double> agg_power(static_cast<std::size_t>(n_agg));
        Eigen::MatrixXcd to_ue(n_agg, n_ue);
        for (int g = 0; g < n_agg; ++g) {
            const Point &pos = dep.aggressor_positions[g];
            double serve = 0.0;
            const std::vector<Point> &hosts = config.aggressor_serving == AggressorServing::OwnAps
                                                  ? dep.aggressor_ap_positions
                                                  : dep.ap_positions;
            for (std::size_t b = 0; b < hosts.size(); ++b)
                serve = std::max(serve, mean_gain(pos, hosts[b], pp, Substream(seed, {kShadowAggServe, u64(g), b})));
            agg_power[static_cast<std::size_t>(g)] = power_control(serve, policy).power_w;
            for (int a = 0; a < n_ap; ++a) {
                const double ga =
                    mean_gain(pos, dep.ap_positions[a], pp, Substream(seed, {kShadowAggAp, u64(g), u64(a)}));
                to_ap[static_cast<std::size_t>(a)].col(g) =
                    faded(ga, config.n_rx, config.rayleigh, Substream(seed, {kFadeAggAp, u64(g), u64(a)}));
            }
            for (int u = 0; u < n_ue; ++u) {
                const double gu =
                    mean_gain(pos, dep.ue_positions[u], pp, Substream(seed, {kShadowAggUe, u64(g), u64(u)}));
                to_ue(g, u) = faded(gu, 1, config.rayleigh, Substream(seed, {kFadeAggUe, u64(g), u64(u)}))(0);
            }
        }
        t.state.set_aggressors(std::move(to_ap), std::move(agg_power), std::move(to_ue));
        t.deployment = std::move(dep);
        return t;
    }
    throw std::runtime_error("trial " + std::to_string(trial_index) + ": no schedulable deployment after " +
                             std::to_string(config.max_resamples + 1) + " draws");
}

namespace {

struct Totals {
    double energy = 0.0;
    double bits = 0.0;
};

Totals totals(const RateReport &r, const ScenarioConfig &c) {
    Totals t;
    for (const SourceReport &s : r.sources) {
        t.energy += c.slot_duration_s * (s.phase1_power_w + s.phase2_power_w);
        t.bits += s.rate * 2.0 * c.slot_duration_s * c.bandwidth_hz;
    }
    return t;
}

int accepted_violations(const SourceOutcome &o) {
    int bad = 0;
    double last = -std::numeric_limits<double>::infinity();
    for (const TraceStep &s : o.trace) {
        if (!s.accepted)
            continue;
        if (!(s.r_new > last))
            ++bad;
        last = s.r_new;
    }
    return bad;
}

} // namespace

TrialRecord run_trial(const ScenarioConfig &config, int trial_index) {
    TrialSetup t = sample_trial(config, trial_index);
    TrialRecord rec;
    rec.trial = trial_index;
    rec.seed = t.seed;
    rec.attempts = t.attempts;
    rec.n_ue = t.state.n_ue();
    rec.n_aggressors = t.state.n_aggressors();

    const ClusteringConfig cc = config.clustering();
    const double floor = config.floor_rate();
    t.state.clear_clusters();
    const RateReport before = make_rate_report(t.state, floor, FloorMode::Floor, config.slot_duration_s,
                                               config.bandwidth_hz);
    ClusteringResult result;
    switch (config.algorithm) {
    case Algorithm::Alg2: result = algorithm2(t.state, t.idle, cc); break;
    case Algorithm::Exhaustive: result = exhaustive_baseline(t.state, t.idle, cc); break;
    case Algorithm::None: break;
    }
    const RateReport after = make_rate_report(t.state, floor, FloorMode::Floor, config.slot_duration_s,
                                              config.bandwidth_hz);
    for (const SourceOutcome &o : result.outcomes)
        rec.trace_violations += accepted_violations(o);

    const double bits_per_weight = cc.codebook.is_continuous() ? 0.0 : std::log2(cc.codebook.size);
    for (int s = 0; s < t.state.n_sources(); ++s) {
        const auto i = static_cast<std::size_t>(s);
        SourceRecord sr;
        sr.ue = t.state.source_ue(s);
        sr.ap = t.state.serving_ap(s);
        sr.baseline_rate = before.sources[i].rate;
        sr.rate = after.sources[i].rate;
        sr.baseline_sinr_db = before.sources[i].sinr_eff_db;
        sr.sinr_db = after.sources[i].sinr_eff_db;
        sr.relay_count = after.sources[i].relay_count;
        sr.feedback_bits = after.sources[i].assisted ? (sr.relay_count + 1) * bits_per_weight : 0.0;
        sr.baseline_energy_j =
            config.slot_duration_s * (before.sources[i].phase1_power_w + before.sources[i].phase2_power_w);
        sr.energy_j = config.slot_duration_s * (after.sources[i].phase1_power_w + after.sources[i].phase2_power_w);
        sr.power_saturated = t.state.ue_power(sr.ue) >= dbm_to_watts(config.p_max_dbm) * (1.0 - 1e-12);
        rec.sources.push_back(sr);
    }
    rec.baseline_hm = before.harmonic_mean;
    rec.hm = after.harmonic_mean;
    const Totals tb = totals(before, config), ta = totals(after, config);
    rec.baseline_energy_j = tb.energy;
    rec.energy_j = ta.energy;
    rec.baseline_bits = tb.bits;
    rec.bits = ta.bits;
    rec.baseline_eb = before.energy_per_bit.value_or(kNaN);
    rec.eb = after.energy_per_bit.value_or(kNaN);
    return rec;
}

std::vector<TrialRecord> run_trials(const ScenarioConfig &config) {
    config.validate();
    std::vector<TrialRecord> out(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, config.threads,
                 [&](int i) { out[static_cast<std::size_t>(i)] = run_trial(config, i); });
    return out;
}

PointSummary summarize(const ScenarioConfig &config, const std::vector<TrialRecord> &trials) {
    PointSummary s;
    s.ue_density = config.ue_density;
    s.codebook_size = config.codebook_size;
    s.trials = static_cast<int>(trials.size());
    const double bits_per_rate = 2.0 * config.slot_duration_s * config.bandwidth_hz;
    std::vector<double> rates_before, rates_after;
    double e_before = 0.0, e_after = 0.0, b_before = 0.0, b_after = 0.0;
    double trial_eb_before = 0.0, trial_eb_after = 0.0;
    int trial_eb_count = 0, source_eb_count = 0, assisted = 0;
    double relays = 0.0;
    for (const TrialRecord &t : trials) {
        s.resamples += t.attempts - 1;
        s.trial_baseline_hm += t.baseline_hm;
        s.trial_hm += t.hm;
        if (std::isfinite(t.baseline_eb) && std::isfinite(t.eb)) {
            trial_eb_before += t.baseline_eb;
            trial_eb_after += t.eb;
            ++trial_eb_count;
        }
        e_before += t.baseline_energy_j;
        e_after += t.energy_j;
        b_before += t.baseline_bits;
        b_after += t.bits;
        s.trace_violations += t.trace_violations;
        for (const SourceRecord &r : t.sources) {
            rates_before.push_back(r.baseline_rate);
            rates_after.push_back(r.rate);
            if (r.baseline_rate > 0.0 && r.rate > 0.0) {
                s.baseline_eb += r.baseline_energy_j / (r.baseline_rate * bits_per_rate);
                s.eb += r.energy_j / (r.rate * bits_per_rate);
                ++source_eb_count;
            }
            relays += r.relay_count;
            assisted += r.relay_count > 0;
        }
    }
    const auto pct = [](double after, double before) { return 100.0 * (after / before - 1.0); };
    if (!trials.empty()) {
        s.trial_baseline_hm /= static_cast<double>(trials.size());
        s.trial_hm /= static_cast<double>(trials.size());
        s.trial_hm_improvement_pct = pct(s.trial_hm, s.trial_baseline_hm);
    }
    if (!rates_before.empty()) {
        const double floor = config.floor_rate();
        s.baseline_hm = harmonic_mean(rates_before, floor);
        s.hm = harmonic_mean(rates_after, floor);
        s.hm_improvement_pct = pct(s.hm, s.baseline_hm);
        s.mean_relays = relays / static_cast<double>(rates_before.size());
        s.assisted_fraction = static_cast<double>(assisted) / static_cast<double>(rates_before.size());
    }
    if (source_eb_count > 0) {
        s.baseline_eb /= source_eb_count;
        s.eb /= source_eb_count;
        s.eb_change_pct = pct(s.eb, s.baseline_eb);
    } else {
        s.baseline_eb = s.eb = s.eb_change_pct = kNaN;
    }
    s.trial_eb_change_pct = trial_eb_count > 0 ? pct(trial_eb_after, trial_eb_before) : kNaN;
    s.pooled_eb_change_pct =
        (b_before > 0.0 && b_after > 0.0) ? pct(e_after / b_after, e_before / b_before) : kNaN;
    return s;
}

std::vector<SinrBin> bin_by_baseline(const std::vector<TrialRecord> &trials, double width_db) {
    struct Acc {
        int n = 0;
        double delta = 0.0, relays = 0.0;
    };
    std::map<long, Acc> acc;
    for (const TrialRecord &t : trials) {
        for (const SourceRecord &r : t.sources) {
            if (!std::isfinite(r.baseline_sinr_db) || !std::isfinite(r.sinr_db))
                continue;
            Acc &a = acc[static_cast<long>(std::floor(r.baseline_sinr_db / width_db))];
            ++a.n;
            a.delta += r.sinr_db - r.baseline_sinr_db;
            a.relays += r.relay_count;
        }
    }
    std::vector<SinrBin> out;
    for (const auto &[k, a] : acc)
        out.push_back({k * width_db, (k + 1) * width_db, a.n, a.delta / a.n, a.relays / a.n});
    return out;
}

CampaignReport run_campaign(const ScenarioConfig &config) {
    config.validate();
    CampaignReport report;
    report.config = config;
    const std::vector<double> densities =
        config.sweep_ue_density.empty() ? std::vector<double>{config.ue_density} : config.sweep_ue_density;
    const std::vector<int> codebooks =
        config.sweep_codebook_size.empty() ? std::vector<int>{config.codebook_size} : config.sweep_codebook_size;
    for (double lambda : densities) {
        for (int nw : codebooks) {
            PointResult p;
            p.config = config;
            p.config.ue_density = lambda;
            p.config.codebook_size = nw;
            p.config.sweep_ue_density.clear();
            p.config.sweep_codebook_size.clear();
            p.trials = run_trials(p.config);
            p.summary = summarize(p.config, p.trials);
            p.bins = bin_by_baseline(p.trials, config.sinr_bin_db);
            report.points.push_back(std::move(p));
        }
    }
    return report;
}

std::string format_number(double x) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace {

std::uint64_t fnv1a(const std::string &s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

class Csv {
public:
    explicit Csv(std::initializer_list<const char *> header) {
        bool first = true;
        for (const char *h : header) {
            out_ << (first ? "" : ",") << h;
            first = false;
        }
        out_ << '\n';
    }
    Csv &operator<<(double x) { return cell(format_number(x)); }
    Csv &operator<<(int x) { return cell(std::to_string(x)); }
    Csv &operator<<(std::uint64_t x) { return cell(std::to_string(x)); }
    Csv &operator<<(const std::string &x) { return cell(x); }
    Csv &operator<<(const char *x) { return cell(x); }
    void end_row() {
        out_ << '\n';
        fresh_ = true;
    }
    std::string str() const { return out_.str(); }

private:
    Csv &cell(const std::string &s) {
        out_ << (fresh_ ? "" : ",") << s;
        fresh_ = false;
        return *this;
    }
    std::ostringstream out_;
    bool fresh_ = true;
};

// JSON cannot carry inf/nan; they become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json summary_json(const PointSummary &s) {
    return {{"ue_density", s.ue_density},
            {"codebook_size", s.codebook_size},
            {"trials", s.trials},
            {"resamples", s.resamples},
            {"baseline_hm", num(s.baseline_hm)},
            {"hm", num(s.hm)},
            {"hm_improvement_pct", num(s.hm_improvement_pct)},
            {"trial_baseline_hm", num(s.trial_baseline_hm)},
            {"trial_hm", num(s.trial_hm)},
            {"trial_hm_improvement_pct", num(s.trial_hm_improvement_pct)},
            {"baseline_eb", num(s.baseline_eb)},
            {"eb", num(s.eb)},
            {"eb_change_pct", num(s.eb_change_pct)},
            {"trial_eb_change_pct", num(s.trial_eb_change_pct)},
            {"pooled_eb_change_pct", num(s.pooled_eb_change_pct)},
            {"mean_relays", num(s.mean_relays)},
            {"assisted_fraction", num(s.assisted_fraction)},
            {"trace_violations", s.trace_violations}};
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_manifest(const std::filesystem::path &dir, const json &config,
                    const std::vector<std::pair<std::string, std::string>> &files) {
    json m;
    m["tool"] = "vmimo";
    m["version"] = "0.1.0";
    m["config"] = config;
    std::string all;
    for (const auto &[name, text] : files) {
        m["files"].push_back({{"name", name}, {"bytes", text.size()}, {"fnv1a64", hex64(fnv1a(text))}});
        all += hex64(fnv1a(text));
    }
    m["run_id"] = hex64(fnv1a(config.dump() + all));
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<std::filesystem::path> emit(const std::filesystem::path &dir, json config,
                                        const std::vector<std::pair<std::string, std::string>> &files) {
    // Worker count never changes results, so it stays out of the manifest.
    config.erase("threads");
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto &[name, text] : files) {
        write_text(dir / name, text);
        written.push_back(dir / name);
    }
    write_manifest(dir, config, files);
    written.push_back(dir / "manifest.json");
    return written;
}

} // namespace

std::vector<std::filesystem::path> write_campaign(const CampaignReport &report, const std::filesystem::path &dir,
                                                  OutputFormat format) {
    std::vector<std::pair<std::string, std::string>> files;
    if (format == OutputFormat::Json) {
        json j;
        j["config"] = config_json(report.config);
        for (const PointResult &p : report.points) {
            json pj;
            pj["summary"] = summary_json(p.summary);
            for (const SinrBin &b : p.bins)
                pj["bins"].push_back({{"lo_db", b.lo},
                                      {"hi_db", b.hi},
                                      {"count", b.count},
                                      {"mean_delta_db", b.mean_delta_db},
                                      {"mean_relays", b.mean_relays}});
            for (const TrialRecord &t : p.trials) {
                json tj = {{"trial", t.trial},          {"seed", t.seed},
                           {"attempts", t.attempts},    {"n_ue", t.n_ue},
                           {"n_aggressors", t.n_aggressors}, {"baseline_hm", num(t.baseline_hm)},
                           {"hm", num(t.hm)},           {"baseline_eb", num(t.baseline_eb)},
                           {"eb", num(t.eb)},           {"trace_violations", t.trace_violations}};
                for (const SourceRecord &s : t.sources)
                    tj["sources"].push_back({{"ue", s.ue},
                                             {"ap", s.ap},
                                             {"baseline_rate", s.baseline_rate},
                                             {"rate", s.rate},
                                             {"baseline_sinr_db", num(s.baseline_sinr_db)},
                                             {"sinr_db", num(s.sinr_db)},
                                             {"relay_count", s.relay_count},
                                             {"feedback_bits", s.feedback_bits},
                                             {"baseline_energy_j", s.baseline_energy_j},
                                             {"energy_j", s.energy_j}});
                pj["trials"].push_back(std::move(tj));
            }
            j["points"].push_back(std::move(pj));
        }
        files.emplace_back("report.json", j.dump(2) + "\n");
        return emit(dir, config_json(report.config), files);
    }

    Csv summary({"ue_density", "codebook_size", "trials", "resamples", "baseline_hm", "hm", "hm_improvement_pct",
                 "trial_baseline_hm", "trial_hm", "trial_hm_improvement_pct", "baseline_eb_j_per_bit",
                 "eb_j_per_bit", "eb_change_pct", "trial_eb_change_pct", "pooled_eb_change_pct", "mean_relays",
                 "assisted_fraction", "trace_violations"});
    Csv trials({"ue_density", "codebook_size", "trial", "seed", "attempts", "n_ue", "n_aggressors", "baseline_hm",
                "hm", "baseline_eb_j_per_bit", "eb_j_per_bit"});
    Csv sources({"ue_density", "codebook_size", "trial", "slot", "ue", "ap", "baseline_rate", "rate",
                 "baseline_sinr_db", "sinr_db", "delta_sinr_db", "relay_count", "feedback_bits",
                 "baseline_energy_j", "energy_j"});
    Csv binned({"ue_density", "codebook_size", "bin_lo_db", "bin_hi_db", "count", "mean_delta_sinr_db",
                "mean_relays"});
    Csv cdf({"ue_density", "codebook_size", "stage", "sinr_db", "cdf"});
    for (const PointResult &p : report.points) {
        const PointSummary &s = p.summary;
        const double lam = s.ue_density;
        const int nw = s.codebook_size;
        summary << lam << nw << s.trials << s.resamples << s.baseline_hm << s.hm << s.hm_improvement_pct
                << s.trial_baseline_hm << s.trial_hm << s.trial_hm_improvement_pct << s.baseline_eb << s.eb
                << s.eb_change_pct << s.trial_eb_change_pct << s.pooled_eb_change_pct << s.mean_relays
                << s.assisted_fraction << s.trace_violations;
        summary.end_row();
        std::vector<double> before, after;
        for (const TrialRecord &t : p.trials) {
            trials << lam << nw << t.trial << t.seed << t.attempts << t.n_ue << t.n_aggressors << t.baseline_hm
                   << t.hm << t.baseline_eb << t.eb;
            trials.end_row();
            for (std::size_t i = 0; i < t.sources.size(); ++i) {
                const SourceRecord &r = t.sources[i];
                sources << lam << nw << t.trial << static_cast<int>(i) << r.ue << r.ap << r.baseline_rate << r.rate
                        << r.baseline_sinr_db << r.sinr_db << (r.sinr_db - r.baseline_sinr_db) << r.relay_count
                        << r.feedback_bits << r.baseline_energy_j << r.energy_j;
                sources.end_row();
                before.push_back(r.baseline_sinr_db);
                after.push_back(r.sinr_db);
            }
        }
        for (const SinrBin &b : p.bins) {
            binned << lam << nw << b.lo << b.hi << b.count << b.mean_delta_db << b.mean_relays;
            binned.end_row();
        }
        for (auto [stage, values] : {std::pair{"baseline", before}, std::pair{"vmimo", after}}) {
            std::sort(values.begin(), values.end());
            for (std::size_t i = 0; i < values.size(); ++i) {
                cdf << lam << nw << stage << values[i] << static_cast<double>(i + 1) / values.size();
                cdf.end_row();
            }
        }
    }
    files.emplace_back("summary.csv", summary.str());
    files.emplace_back("trials.csv", trials.str());
    files.emplace_back("sources.csv", sources.str());
    files.emplace_back("binned.csv", binned.str());
    files.emplace_back("cdf.csv", cdf.str());
    return emit(dir, config_json(report.config), files);
}

// Single-source validation ----------------------------------------------------

const char *scheme_label(Scheme s) {
    switch (s) {
    case Scheme::LemmaShadowed: return "(i) shadowed bound";
    case Scheme::AlgShadowedContinuous: return "(ii) greedy, sigma 8 dB, unquantized";
    case Scheme::Theorem: return "(iii) bound";
    case Scheme::AlgContinuous: return "(iv) greedy, unquantized";
    case Scheme::AlgEightPhase: return "(v) greedy, 8 phases";
    case Scheme::AlgNoPrecoding: return "(vi) greedy, no precoding";
    }
    return "unknown";
}

std::vector<Scheme> all_schemes() {
    return {Scheme::LemmaShadowed, Scheme::AlgShadowedContinuous, Scheme::Theorem,
            Scheme::AlgContinuous, Scheme::AlgEightPhase,        Scheme::AlgNoPrecoding};
}

const SchemeStats &ValidationPoint::at(Scheme s) const {
    for (const SchemeStats &x : schemes)
        if (x.scheme == s)
            return x;
    throw std::out_of_range(std::string("scheme not evaluated: ") + scheme_label(s));
}

SourceOutcome single_source_trial(double gamma, double lambda, double sigma_db, const Codebook &codebook,
                                  const SingleSourceConfig &cfg, std::uint64_t seed) {
    const double src_snr = gamma * std::pow(cfg.src_reference_m, cfg.alpha);
    Substream rng(seed);
    // Without shadowing nobody beyond the baseline eligibility radius can
    // qualify, so the disk covers every candidate.
    const double radius = sigma_db > 0.0 ? cfg.d_max : eligibility_radius(capacity(gamma), src_snr, cfg.alpha);
    const std::vector<Point> pts = sample_ppp_disk(lambda, Point(0.0, 0.0), radius, rng);

    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<RelayCandidate> relays;
    std::vector<std::complex<double>> gains;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double shadow = std::pow(10.0, sigma_db * normal(rng) / 10.0);
        const double snr = src_snr * std::pow(pts[i].norm(), -cfg.alpha) * shadow;
        relays.push_back({static_cast<int>(i), capacity(snr)});
        gains.push_back(std::polar(std::sqrt(gamma), phase(rng)));
    }
    ScalarEvaluator ev(std::sqrt(gamma), std::move(relays), std::move(gains), codebook);
    ClusteringConfig cc;
    cc.codebook = codebook;
    return algorithm1(ev, cc);
}

int trace_violations(const SourceOutcome &o, bool continuous) {
    int bad = accepted_violations(o);
    double r_min = std::numeric_limits<double>::infinity();
    double g = -std::numeric_limits<double>::infinity();
    for (const TraceStep &s : o.trace) {
        if (s.r_min > r_min)
            ++bad;
        r_min = s.r_min;
        if (continuous && !s.pruned) {
            if (s.gamma_ap < g * (1.0 - 1e-12))
                ++bad;
            g = s.gamma_ap;
        }
    }
    if (o.rate < o.direct_rate)
        ++bad;
    return bad;
}

std::vector<ValidationPoint> run_single_source_validation(const std::vector<double> &gamma_db,
                                                          const std::vector<double> &lambda,
                                                          const SingleSourceConfig &cfg,
                                                          const std::vector<Scheme> &schemes) {
    if (cfg.placements < 1)
        throw std::invalid_argument("placements must be at least 1");
    std::vector<ValidationPoint> out;
    for (double gdb : gamma_db) {
        for (double lam : lambda) {
            const double gamma = db_to_linear(gdb);
            BoundParams bp;
            bp.gamma = gamma;
            bp.lambda = lam;
            bp.alpha = cfg.alpha;
            bp.src_snr = gamma * std::pow(cfg.src_reference_m, cfg.alpha);
            bp.d_max = cfg.d_max;
            bp.delta = cfg.delta;

            ValidationPoint vp;
            vp.gamma_db = gdb;
            vp.lambda = lam;
            vp.baseline = capacity(gamma);
            const std::uint64_t key_g = std::bit_cast<std::uint64_t>(gdb);
            const std::uint64_t key_l = std::bit_cast<std::uint64_t>(lam);
            for (Scheme scheme : schemes) {
                SchemeStats st;
                st.scheme = scheme;
                if (scheme == Scheme::Theorem) {
                    st.mean = theorem1_bound(bp).value;
                } else if (scheme == Scheme::LemmaShadowed) {
                    BoundParams sp = bp;
                    sp.sigma_db = cfg.shadow_sigma_db;
                    st.mean = lemma1_bound(sp).value;
                } else {
                    const bool shadowed = scheme == Scheme::AlgShadowedContinuous;
                    const Codebook cb = scheme == Scheme::AlgEightPhase    ? Codebook{8}
                                        : scheme == Scheme::AlgNoPrecoding ? Codebook{1}
                                                                           : Codebook::continuous();
                    const double sigma = shadowed ? cfg.shadow_sigma_db : 0.0;
                    std::vector<double> rates(static_cast<std::size_t>(cfg.placements));
                    std::vector<int> relay_counts(rates.size()), bad(rates.size());
                    parallel_for(cfg.placements, cfg.threads, [&](int p) {
                        const std::uint64_t seed =
                            derive_seed(cfg.master_seed, {key_g, key_l, u64(p), shadowed ? 1ULL : 0ULL});
                        const SourceOutcome o = single_source_trial(gamma, lam, sigma, cb, cfg, seed);
                        rates[static_cast<std::size_t>(p)] = o.rate;
                        relay_counts[static_cast<std::size_t>(p)] = static_cast<int>(o.relays.size());
                        bad[static_cast<std::size_t>(p)] = trace_violations(o, cb.is_continuous());
                    });
                    double sum = 0.0, sq = 0.0, rel = 0.0;
                    for (std::size_t i = 0; i < rates.size(); ++i) {
                        sum += rates[i];
                        sq += rates[i] * rates[i];
                        rel += relay_counts[i];
                        st.trace_violations += bad[i];
                    }
                    const double n = static_cast<double>(rates.size());
                    st.mean = sum / n;
                    st.mean_relays = rel / n;
                    st.std_error = n > 1 ? std::sqrt(std::max(0.0, (sq - n * st.mean * st.mean) / (n - 1)) / n) : 0.0;
                }
                vp.schemes.push_back(st);
            }
            out.push_back(std::move(vp));
        }
    }
    return out;
}

void write_validation(const std::vector<ValidationPoint> &points, const std::filesystem::path &dir,
                      OutputFormat format) {
    json cfg = json::object();
    std::vector<std::pair<std::string, std::string>> files;
    if (format == OutputFormat::Json) {
        json j = json::array();
        for (const ValidationPoint &p : points)
            for (const SchemeStats &s : p.schemes)
                j.push_back({{"gamma_db", p.gamma_db},
                             {"lambda", p.lambda},
                             {"baseline", p.baseline},
                             {"scheme", scheme_label(s.scheme)},
                             {"value", num(s.mean)},
                             {"std_error", num(s.std_error)},
                             {"mean_relays", num(s.mean_relays)},
                             {"trace_violations", s.trace_violations}});
        files.emplace_back("validation.json", j.dump(2) + "\n");
    } else {
        Csv csv({"gamma_db", "lambda", "baseline", "scheme", "value", "std_error", "mean_relays",
                 "trace_violations"});
        for (const ValidationPoint &p : points) {
            for (const SchemeStats &s : p.schemes) {
                csv << p.gamma_db << p.lambda << p.baseline << std::string("\"") + scheme_label(s.scheme) + "\""
                    << s.mean << s.std_error << s.mean_relays << s.trace_violations;
                csv.end_row();
            }
        }
        files.emplace_back("validation.csv", csv.str());
    }
    emit(dir, cfg, files);
}

} // namespace vmimo
