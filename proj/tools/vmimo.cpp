// SPDX-License-Identifier: Apache-2.0
//
// vmimo: command-line front end for campaigns, bound curves, single-source
// validation and a precoding benchmark.

#include "vmimo/harness.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

using namespace vmimo;

namespace {

OutputFormat parse_format(const std::string &f) { return f == "json" ? OutputFormat::Json : OutputFormat::Csv; }

int run_campaign_cmd(const std::string &config_path, std::optional<std::uint64_t> seed, std::optional<int> trials,
                     std::optional<int> threads, const std::vector<double> &densities,
                     const std::vector<int> &codebooks, const std::string &algorithm, const std::string &out_dir,
                     const std::string &format) {
    ScenarioConfig cfg = config_path.empty() ? ScenarioConfig{} : load_config(config_path);
    if (seed)
        cfg.master_seed = *seed;
    if (trials)
        cfg.trials = *trials;
    if (threads)
        cfg.threads = *threads;
    if (!densities.empty())
        cfg.sweep_ue_density = densities;
    if (!codebooks.empty())
        cfg.sweep_codebook_size = codebooks;
    if (!algorithm.empty())
        cfg.algorithm = algorithm_from_string(algorithm);
    cfg.validate();

    const auto t0 = std::chrono::steady_clock::now();
    const CampaignReport report = run_campaign(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_campaign(report, out_dir, parse_format(format));

    std::printf("%-10s %-4s %8s %8s %10s %10s %8s\n", "lambda", "N_w", "HM0", "HM", "dHM%", "dEb%", "relays");
    for (const PointResult &p : report.points) {
        const PointSummary &s = p.summary;
        std::printf("%-10g %-4d %8.4f %8.4f %10.2f %10.2f %8.3f\n", s.ue_density, s.codebook_size, s.baseline_hm,
                    s.hm, s.hm_improvement_pct, s.eb_change_pct, s.mean_relays);
    }
    std::printf("%zu point(s) in %.1f s, written to %s\n", report.points.size(), secs, out_dir.c_str());
    return 0;
}

int run_bounds_cmd(const std::vector<double> &gamma_db, const std::vector<double> &lambda, double src_ref,
                   double alpha, double sigma_db, double d_max, double delta, const std::string &out_dir,
                   const std::string &format) {
    std::filesystem::create_directories(out_dir);
    const bool json_out = format == "json";
    const std::filesystem::path path = std::filesystem::path(out_dir) / (json_out ? "bounds.json" : "bounds.csv");
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    if (json_out)
        out << "[\n";
    else
        out << "lambda,gamma_db,bound,bound_bps_hz,baseline,relays_needed,radius_m\n";
    bool first = true;
    for (double gdb : gamma_db) {
        for (double lam : lambda) {
            BoundParams p;
            p.gamma = db_to_linear(gdb);
            p.lambda = lam;
            p.alpha = alpha;
            p.src_snr = p.gamma * std::pow(src_ref, alpha);
            p.d_max = d_max;
            p.delta = delta;
            const BoundResult t = theorem1_bound(p);
            const CorollaryOutputs c = corollary_outputs(p);
            p.sigma_db = sigma_db;
            const BoundResult l = lemma1_bound(p);
            for (const auto &[kind, value] : {std::pair{"theorem", t.value}, std::pair{"lemma", l.value}}) {
                if (json_out) {
                    out << (first ? "" : ",\n") << "  {\"lambda\": " << format_number(lam)
                        << ", \"gamma_db\": " << format_number(gdb) << ", \"bound\": \"" << kind
                        << "\", \"bound_bps_hz\": " << format_number(value)
                        << ", \"baseline\": " << format_number(t.baseline) << ", \"relays_needed\": " << c.relays
                        << ", \"radius_m\": " << format_number(c.radius) << "}";
                } else {
                    out << format_number(lam) << ',' << format_number(gdb) << ',' << kind << ','
                        << format_number(value) << ',' << format_number(t.baseline) << ',' << c.relays << ','
                        << format_number(c.radius) << '\n';
                }
                first = false;
            }
        }
    }
    if (json_out)
        out << "\n]\n";
    std::printf("bounds written to %s\n", path.string().c_str());
    return 0;
}

int run_validation_cmd(const std::vector<double> &gamma_db, const std::vector<double> &lambda, int placements,
                       std::uint64_t seed, std::optional<int> threads, const std::string &out_dir,
                       const std::string &format) {
    SingleSourceConfig cfg;
    cfg.placements = placements;
    cfg.master_seed = seed;
    if (threads)
        cfg.threads = *threads;
    const auto points = run_single_source_validation(gamma_db, lambda, cfg);
    write_validation(points, out_dir, parse_format(format));
    for (const ValidationPoint &p : points) {
        std::printf("gamma %6.1f dB  lambda %-7g", p.gamma_db, p.lambda);
        for (const SchemeStats &s : p.schemes)
            std::printf("  %.4f", s.mean);
        std::printf("\n");
    }
    return 0;
}

int run_precoding_bench(int instances, int dim, int codebook, std::uint64_t seed, const std::string &out_dir) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path path = std::filesystem::path(out_dir) / "precoding_bench.csv";
    std::ofstream out(path);
    out << "instance,dim,codebook_size,rounded,optimum,relaxation,ratio,enum_us,sdr_us\n";
    double worst = 1.0, total_ratio = 0.0;
    for (int k = 0; k < instances; ++k) {
        Eigen::MatrixXcd a(dim, dim);
        for (Eigen::Index i = 0; i < a.size(); ++i)
            a(i) = {normal(gen), normal(gen)};
        const PrecodingProblem problem{a.adjoint() * a, Codebook{codebook}};
        const auto t0 = std::chrono::steady_clock::now();
        const PrecodingSolution opt = enumerate_optimum(problem, std::uint64_t{1} << 24);
        const auto t1 = std::chrono::steady_clock::now();
        const SdrResult sdr = sdr_solve(problem.q);
        const PrecodingSolution rounded = round_solution(sdr.w, problem);
        const auto t2 = std::chrono::steady_clock::now();
        const double ratio = rounded.objective / opt.objective;
        worst = std::min(worst, ratio);
        total_ratio += ratio;
        out << k << ',' << dim << ',' << codebook << ',' << format_number(rounded.objective) << ','
            << format_number(opt.objective) << ',' << format_number(sdr.value) << ',' << format_number(ratio) << ','
            << std::chrono::duration<double, std::micro>(t1 - t0).count() << ','
            << std::chrono::duration<double, std::micro>(t2 - t1).count() << '\n';
    }
    std::printf("%d instances, dim %d, N_w %d: mean rounded/optimal %.4f, worst %.4f (%s)\n", instances, dim,
                codebook, total_ratio / instances, worst, path.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"D2D-assisted virtual MIMO clustering simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<int> trials, threads;

    auto common = [&](CLI::App *cmd) {
        cmd->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
        cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        cmd->add_option("--seed", seed, "Master seed");
        cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
    };

    auto *campaign = app.add_subcommand("campaign", "Multi-source Monte Carlo campaign");
    std::vector<double> densities;
    std::vector<int> codebooks;
    std::string algorithm;
    campaign->add_option("--config", config_path, "JSON scenario config")->check(CLI::ExistingFile);
    campaign->add_option("--trials", trials, "Trials per point");
    campaign->add_option("--density", densities, "UE densities to sweep (/m^2)");
    campaign->add_option("--codebook", codebooks, "Codebook sizes to sweep (0: unquantized)");
    campaign->add_option("--algorithm", algorithm, "alg2, exhaustive or none");
    common(campaign);

    auto *bounds = app.add_subcommand("bounds", "Spectral-efficiency bound curves");
    std::vector<double> gamma_db{-10.0, 0.0, 10.0}, lambda{0.0, 0.0025, 0.005, 0.01, 0.02};
    double src_ref = 35.0, alpha = 2.42, sigma_db = 8.0, d_max = 25.0, delta = 0.05;
    bounds->add_option("--gamma-db", gamma_db, "Received SNR at the AP (dB)")->capture_default_str();
    bounds->add_option("--lambda", lambda, "UE densities (/m^2)")->capture_default_str();
    bounds->add_option("--src-ref", src_ref, "Distance (m) at which the source SNR equals gamma")->capture_default_str();
    bounds->add_option("--alpha", alpha, "Path-loss exponent")->capture_default_str();
    bounds->add_option("--sigma-db", sigma_db, "Shadowing dB-spread for the shadowed bound")->capture_default_str();
    bounds->add_option("--d-max", d_max, "Relay disk radius (m)")->capture_default_str();
    bounds->add_option("--delta", delta, "Ring width (m)")->capture_default_str();
    bounds->add_option("--config", config_path, "Unused; accepted for symmetry");
    bounds->add_option("--trials", trials, "Unused; accepted for symmetry");
    common(bounds);

    auto *validate = app.add_subcommand("validate-single-source", "Greedy clustering vs. bounds, one source");
    int placements = 2000;
    validate->add_option("--gamma-db", gamma_db, "Received SNR at the AP (dB)")->capture_default_str();
    validate->add_option("--lambda", lambda, "UE densities (/m^2)")->capture_default_str();
    validate->add_option("--trials,--placements", placements, "Placements per grid point")->capture_default_str();
    validate->add_option("--config", config_path, "Unused; accepted for symmetry");
    common(validate);

    auto *bench = app.add_subcommand("precoding-bench", "Rounded SDR vs. exact enumeration");
    int instances = 200, dim = 6, nw = 4;
    bench->add_option("--trials,--instances", instances, "Random instances")->capture_default_str();
    bench->add_option("--dim", dim, "Problem dimension")->capture_default_str();
    bench->add_option("--codebook", nw, "Codebook size")->capture_default_str();
    bench->add_option("--config", config_path, "Unused; accepted for symmetry");
    common(bench);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*campaign) {
            std::optional<int> n = trials;
            return run_campaign_cmd(config_path, seed, n, threads, densities, codebooks, algorithm, out_dir, format);
        }
        if (*bounds)
            return run_bounds_cmd(gamma_db, lambda, src_ref, alpha, sigma_db, d_max, delta, out_dir, format);
        if (*validate)
            return run_validation_cmd(gamma_db, lambda, placements, seed.value_or(1), threads, out_dir, format);
        if (*bench)
            return run_precoding_bench(instances, dim, nw, seed.value_or(1), out_dir);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
