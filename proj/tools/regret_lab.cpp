// Command-line front end: run, bounds, tail, gen-env, verify.

#include "regret_lab/regret_lab.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace rl = regret_lab;

namespace {

struct BoundArgs {
    std::size_t S = 2, A = 2, H = 2, K = 100;
    double alpha = 0.5, mu = 1.0, gamma = 0.0;
    std::string schedule = "KD";
    std::optional<double> gap;
    std::string mdp_path;
    std::string env_path;

    void attach(CLI::App& app) {
        app.add_option("--S", S, "number of states");
        app.add_option("--A", A, "number of actions");
        app.add_option("--H", H, "horizon");
        app.add_option("--K", K, "number of episodes");
        app.add_option("--alpha", alpha, "budget exponent in [0,1]");
        app.add_option("--mu", mu, "budget scale, > 0");
        app.add_option("--gamma", gamma, "burn-in exponent in [0,1]");
        app.add_option("--schedule", schedule, "KD or KI");
        auto* g = app.add_option("--gap", gap, "gap* (use 'inf' for the degenerate case)");
        auto* m = app.add_option("--mdp", mdp_path, "MDP file; S, A, H and gap* are taken from it");
        auto* e = app.add_option("--env", env_path, "environment spec file (JSON)");
        g->excludes(m)->excludes(e);
        m->excludes(e);
    }

    rl::BoundInputs resolve() const {
        rl::BoundInputs in;
        in.S = S;
        in.A = A;
        in.H = H;
        in.K = K;
        in.alpha = alpha;
        in.mu = mu;
        in.gamma = gamma;
        in.schedule = rl::parse_schedule(schedule);
        std::optional<rl::TabularMDP> mdp;
        if (!mdp_path.empty())
            mdp = rl::load_mdp(mdp_path);
        else if (!env_path.empty())
            mdp = rl::generate(rl::env_spec_from_json(rl::load_summary(env_path)));
        if (mdp) {
            in.S = mdp->num_states();
            in.A = mdp->num_actions();
            in.H = mdp->horizon();
            in.gap_star = rl::backward_induction(*mdp).gaps.gap_star;
        } else if (gap) {
            in.gap_star = *gap;
        } else {
            throw rl::DomainError("one of --gap, --mdp or --env is required");
        }
        in.validate();
        return in;
    }
};

std::string tail_curve_csv(const rl::BoundInputs& in, double x_max, std::size_t points, bool adaptive) {
    std::string out = adaptive ? "x,gamma,raw_bound,clipped_bound\n" : "x,raw_bound,clipped_bound\n";
    const std::size_t n = std::max<std::size_t>(points, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = x_max * static_cast<double>(i) / static_cast<double>(n - 1);
        rl::BoundInputs local = in;
        if (adaptive)
            local.gamma = rl::adaptive_gamma(in.K, in.H, x);
        const rl::TailComponents t = rl::tail_components(local);
        out += rl::format_real(x);
        if (adaptive)
            out += ',' + rl::format_real(local.gamma);
        out += ',' + rl::format_real(t.raw(x)) + ',' + rl::format_real(t.clipped(x)) + '\n';
    }
    return out;
}

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text))
        throw rl::IoError("cannot write " + path);
}

void print_report(const rl::BoundReport& r) {
    const auto row = [](const std::string& key, const std::string& value) {
        std::printf("%-20s %s\n", key.c_str(), value.c_str());
    };
    const rl::BoundInputs& in = r.inputs;
    row("S", std::to_string(in.S));
    row("A", std::to_string(in.A));
    row("H", std::to_string(in.H));
    row("K", std::to_string(in.K));
    row("alpha", rl::format_real(in.alpha));
    row("mu", rl::format_real(in.mu));
    row("gamma", rl::format_real(in.gamma));
    row("schedule", std::string(rl::to_string(in.schedule)));
    row("gap_star", std::isfinite(in.gap_star) ? rl::format_real(in.gap_star) : "inf");
    row("m_K", rl::format_real(r.m_K));
    row("delta_K", rl::format_real(r.delta_K));
    row("burn_in_episodes", std::to_string(r.burn_in_episodes));
    row("burn_in", rl::format_real(r.burn_in));
    if (r.n_bar_available)
        for (std::size_t h = 0; h < r.n_bar.size(); ++h)
            row("n_bar[" + std::to_string(h) + "]", rl::format_real(r.n_bar[h]));
    else
        row("n_bar", "unavailable (gap* infinite)");
    row("expectation_bound", rl::format_real(r.expectation_bound));
    row("regime_threshold", rl::format_real(r.regime_threshold));
    row("sub_gaussian_lo", rl::format_real(r.sub_gaussian_lo));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regret-lab: optimistic value iteration with regret-tail bounds"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    std::string config_path, output_override;
    std::optional<std::size_t> threads;
    run->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--output-dir", output_override, "override the config's output_dir");
    run->add_option("--threads", threads, "worker threads (overrides REGRET_LAB_THREADS; 0 = auto)");

    // bounds
    auto* bounds = app.add_subcommand("bounds", "print the closed-form bound report");
    BoundArgs bound_args;
    bound_args.attach(*bounds);
    std::string bounds_csv;
    double bounds_x_max = 0.0;
    std::size_t bounds_points = 512;
    bounds->add_option("--csv", bounds_csv, "also write the tail curve to this file");
    bounds->add_option("--x-max", bounds_x_max, "curve upper end (default 2 * expectation bound)");
    bounds->add_option("--points", bounds_points, "curve points");

    // tail
    auto* tail = app.add_subcommand("tail", "write the tail-bound curve as CSV");
    BoundArgs tail_args;
    tail_args.attach(*tail);
    std::string tail_out;
    double tail_x_max = 0.0;
    std::size_t tail_points = 512;
    bool tail_adaptive = false;
    tail->add_option("--out", tail_out, "output file (default stdout)");
    tail->add_option("--x-max", tail_x_max, "curve upper end (default 2 * expectation bound)");
    tail->add_option("--points", tail_points, "curve points");
    tail->add_flag("--adaptive", tail_adaptive, "choose gamma per x (KI)");

    // gen-env
    auto* gen = app.add_subcommand("gen-env", "generate an instance and write it as an MDP file");
    rl::EnvSpec spec;
    std::string kind = "CHAIN", gen_out;
    gen->add_option("--kind", kind, "RANDOM_GAP, CHAIN or BANDIT");
    gen->add_option("--S", spec.S, "number of states");
    gen->add_option("--A", spec.A, "number of actions");
    gen->add_option("--H", spec.H, "horizon");
    gen->add_option("--gap-floor", spec.gap_floor, "minimum gap* (RANDOM_GAP)");
    gen->add_option("--seed", spec.seed, "generator seed");
    gen->add_option("--rewards", spec.rewards, "CHAIN {stay, final_start, goal} or BANDIT arm rewards");
    gen->add_option("--out", gen_out, "output file (default stdout)");

    // verify
    auto* verify = app.add_subcommand("verify", "run the lemma, probe and optimism grids");
    rl::VerifySettings settings;
    verify->add_option("--trials", settings.weissman_trials, "concentration probe trials per cell");
    verify->add_option("--lemma2-trials", settings.lemma2_trials, "perturbations per instance");
    verify->add_option("--replications", settings.optimism_replications, "optimism replications");
    verify->add_option("--episodes", settings.optimism_episodes, "optimism episodes per replication");
    verify->add_option("--seed", settings.seed, "master seed");
    verify->add_option("--threads", settings.threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            rl::ExperimentConfig cfg = rl::load_config(config_path);
            if (!output_override.empty())
                cfg.output_dir = output_override;
            if (cfg.output_dir.empty())
                throw rl::DomainError("no output directory: set output_dir or pass --output-dir");
            const rl::ExperimentResult result = rl::run_experiment(cfg, {threads});
            for (const auto& path : rl::emit_results(result, cfg.output_dir))
                std::printf("wrote %s\n", path.string().c_str());
            std::printf("replications %zu  mean regret %s  expectation bound %s\n",
                        result.regret_samples.size(), rl::format_real(result.mean()).c_str(),
                        rl::format_real(result.bound_report.expectation_bound).c_str());
            if (result.diagnostics)
                std::printf("good event held without optimism in %llu of %llu episodes\n",
                            static_cast<unsigned long long>(result.diagnostics->good_event_without_optimism),
                            static_cast<unsigned long long>(result.diagnostics->episodes_checked));
        } else if (*bounds) {
            const rl::BoundReport report = rl::make_bound_report(bound_args.resolve());
            print_report(report);
            if (!bounds_csv.empty()) {
                const double x_max = bounds_x_max > 0.0 ? bounds_x_max : 2.0 * report.expectation_bound;
                write_or_print(bounds_csv, tail_curve_csv(report.inputs, x_max, bounds_points, false));
            }
        } else if (*tail) {
            const rl::BoundInputs in = tail_args.resolve();
            const double x_max = tail_x_max > 0.0 ? tail_x_max : 2.0 * rl::expectation_bound(in);
            write_or_print(tail_out, tail_curve_csv(in, x_max, tail_points, tail_adaptive));
        } else if (*gen) {
            spec.kind = rl::parse_env_kind(kind);
            const rl::TabularMDP mdp = rl::generate(spec);
            write_or_print(gen_out, rl::mdp_to_json(mdp).dump(2) + "\n");
        } else if (*verify) {
            const auto rows = rl::run_verification(settings);
            bool all = true;
            std::printf("%-28s %-6s %10s %9s %14s  %s\n", "check", "result", "cells", "failures",
                        "worst_margin", "detail");
            for (const auto& r : rows) {
                all = all && r.passed();
                std::printf("%-28s %-6s %10llu %9llu %14.6g  %s\n", r.name.c_str(),
                            r.passed() ? "PASS" : "FAIL", static_cast<unsigned long long>(r.cells),
                            static_cast<unsigned long long>(r.failures), r.worst_margin,
                            r.detail.c_str());
            }
            return all ? 0 : 1;
        }
    } catch (const rl::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
