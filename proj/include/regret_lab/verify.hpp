#pragma once

#include "regret_lab/agent.hpp"
#include "regret_lab/diagnostics.hpp"
#include "regret_lab/env_zoo.hpp"
#include "regret_lab/harness.hpp"
#include "regret_lab/mdp.hpp"
#include "regret_lab/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace regret_lab {

/// One row of the verification table.
struct GridOutcome {
    std::string name;
    std::uint64_t cells = 0;
    std::uint64_t failures = 0;
    /// Smallest slack over all cells; negative means a failure.
    double worst_margin = kInfinity;
    std::string detail;

    bool passed() const noexcept { return failures == 0; }
    void record(double margin) {
        ++cells;
        if (margin < 0.0)
            ++failures;
        worst_margin = std::min(worst_margin, margin);
    }
};

// **********************************************************************
// Bonus-sum lemma over K x alpha x gamma x mu x schedule x S
// **********************************************************************

struct Lemma1GridOutcome {
    GridOutcome dominance;
    /// Cells with KD and alpha = 0, where both sides coincide.
    GridOutcome kd_alpha0_equality;
};

inline Lemma1GridOutcome lemma1_grid() {
    Lemma1GridOutcome out;
    out.dominance.name = "lemma1_dominance";
    out.kd_alpha0_equality.name = "lemma1_kd_alpha0_equality";
    constexpr double equality_tol = 1e-12;
    for (std::size_t K : {1, 10, 100, 1000})
        for (double alpha : {0.0, 0.5, 1.0})
            for (double gamma : {0.0, 0.5, 1.0})
                for (double mu : {0.5, 1.0, 2.0})
                    for (BonusSchedule schedule : {BonusSchedule::KD, BonusSchedule::KI})
                        for (std::size_t S : {2, 3, 4}) {
                            const BonusConfig cfg{schedule, alpha, mu, K};
                            const LemmaSumCheck c = lemma1_sum_check(cfg, 3, S, 0, gamma);
                            // Relative slack in log space: log(rhs (1+1e-9)) - log(lhs).
                            out.dominance.record(c.log_rhs + std::log1p(1e-9) - c.log_lhs);
                            if (schedule == BonusSchedule::KD && alpha == 0.0)
                                out.kd_alpha0_equality.record(equality_tol -
                                                              std::abs(c.ratio() - 1.0));
                        }
    out.dominance.detail = "margin = log(rhs(1+1e-9)/lhs)";
    out.kd_alpha0_equality.detail = "margin = 1e-12 - |lhs/rhs - 1|";
    return out;
}

// **********************************************************************
// L1 concentration over S x n x eps
// **********************************************************************

inline GridOutcome weissman_grid(std::uint64_t trials, std::uint64_t seed) {
    GridOutcome out;
    out.name = "weissman_dominance";
    out.detail = "margin = bound + slack - rate, uniform rows, " + std::to_string(trials) + " trials";
    std::uint64_t cell = 0;
    for (std::size_t S : {2, 3, 4})
        for (std::uint64_t n : {10, 50, 200})
            for (double eps : {0.2, 0.5, 1.0}) {
                Rng rng(replication_seed(seed, cell++));
                const std::vector<double> row(S, 1.0 / static_cast<double>(S));
                const ConcentrationProbe p = l1_concentration_probe(row, n, trials, eps, rng);
                out.record(p.weissman_bound + p.slack - p.exceed_rate);
            }
    return out;
}

// **********************************************************************
// Perturbation lemma
// **********************************************************************

inline constexpr std::uint64_t kLemma2RandomSeed = 7;

/// The RANDOM_GAP instance the perturbation and optimism grids use.
inline EnvSpec verification_random_spec() {
    EnvSpec spec;
    spec.kind = EnvKind::RandomGap;
    spec.S = 2;
    spec.A = 2;
    spec.H = 3;
    spec.gap_floor = 0.1;
    spec.seed = kLemma2RandomSeed;
    return spec;
}

/**
 * Draws `trials` perturbations inside the thresholds. A trial passes when the
 * conditions hold, the optimal sets nest, and every policy that enumeration
 * finds optimal for the perturbed model is also optimal for the original.
 */
inline GridOutcome lemma2_grid(const TabularMDP& truth, std::size_t trials, std::uint64_t seed,
                               std::string name) {
    GridOutcome out;
    out.name = std::move(name);
    out.detail = "margin = 0 on pass, -1 on fail";
    const OptimalSolution optimum = backward_induction(truth);
    const double target = optimum.values(0, truth.initial_state());
    Rng rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const TabularMDP perturbed = sample_lemma2_perturbation(truth, optimum.gaps.gap_star, rng);
        const TransferCheck c = lemma2_transfer_check(truth, perturbed);
        bool ok = c.conditions_hold && c.subset_holds;
        if (ok)
            for (const MarkovPolicy& p : enumerate_policies_oracle(perturbed).witnesses)
                if (target - evaluate_policy(truth, p)(0, truth.initial_state()) > kValueTolerance) {
                    ok = false;
                    break;
                }
        out.record(ok ? 0.0 : -1.0);
    }
    return out;
}

// **********************************************************************
// Good event implies optimism
// **********************************************************************

inline GridOutcome optimism_grid(const TabularMDP& mdp, std::size_t replications, std::size_t K,
                                 std::uint64_t seed, std::string name,
                                 std::optional<std::size_t> threads = std::nullopt) {
    GridOutcome out;
    out.name = std::move(name);
    const OptimalSolution optimum = backward_induction(mdp);
    const BonusConfig cfg{BonusSchedule::KD, 0.5, 1.0, K};
    ReplicationOptions options;
    options.diagnostics = true;
    std::vector<DiagnosticsCounters> reps(replications);
    parallel_for(replications, worker_count(threads), [&](std::size_t i) {
        reps[i] = run_replication(mdp, optimum, cfg, replication_seed(seed, i), options).diagnostics;
    });
    DiagnosticsCounters total;
    for (const auto& d : reps)
        total.merge(d);
    out.cells = total.episodes_checked;
    out.failures = total.good_event_without_optimism;
    out.worst_margin = out.failures == 0 ? 0.0 : -static_cast<double>(out.failures);
    out.detail = std::to_string(total.episodes_checked - total.good_event_failures) +
                 " good-event episodes, " + std::to_string(total.good_event_without_optimism) +
                 " without optimism";
    return out;
}

struct VerifySettings {
    std::uint64_t weissman_trials = 100'000;
    std::size_t lemma2_trials = 200;
    std::size_t optimism_replications = 50;
    std::size_t optimism_episodes = 500;
    std::uint64_t seed = 2024;
    std::optional<std::size_t> threads;
};

inline std::vector<GridOutcome> run_verification(const VerifySettings& settings) {
    std::vector<GridOutcome> rows;
    Lemma1GridOutcome l1 = lemma1_grid();
    rows.push_back(std::move(l1.dominance));
    rows.push_back(std::move(l1.kd_alpha0_equality));
    rows.push_back(weissman_grid(settings.weissman_trials, settings.seed));

    const TabularMDP chain = make_chain(2);
    const TabularMDP random = generate(verification_random_spec());
    rows.push_back(lemma2_grid(chain, settings.lemma2_trials, settings.seed, "lemma2_chain"));
    rows.push_back(lemma2_grid(random, settings.lemma2_trials, settings.seed + 1, "lemma2_random_gap"));
    rows.push_back(optimism_grid(chain, settings.optimism_replications, settings.optimism_episodes,
                                 settings.seed, "optimism_chain", settings.threads));
    rows.push_back(optimism_grid(random, settings.optimism_replications, settings.optimism_episodes,
                                 settings.seed + 1, "optimism_random_gap", settings.threads));
    return rows;
}

} // namespace regret_lab
