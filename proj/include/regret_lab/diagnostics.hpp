#pragma once

#include "regret_lab/agent.hpp"
#include "regret_lab/bounds.hpp"
#include "regret_lab/errors.hpp"
#include "regret_lab/mdp.hpp"
#include "regret_lab/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace regret_lab {

struct TripleIndex {
    std::size_t s = 0, a = 0, h = 0;
    friend bool operator==(const TripleIndex&, const TripleIndex&) = default;
};

inline double l1_distance(std::span<const double> p, std::span<const double> q) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        total += std::abs(p[i] - q[i]);
    return total;
}

// **********************************************************************
// Good event
// **********************************************************************

struct GoodEventReport {
    bool holds = true;
    /// max over rows of L1(P*, P_hat) / (2 b / (H-h-1)); 0 for unvisited rows.
    double worst_ratio = 0.0;
    std::optional<TripleIndex> first_violation;
};

/**
 * Every empirical row within L1 radius 2 b_h^k(n) / (H-h-1) of the truth,
 * for h <= H-2 (the last stage has no kernel). The radius is evaluated as
 * 2 sqrt(budget / n), which is the same quantity without the 0/0 at h = H-1.
 */
inline GoodEventReport good_event_check(const TabularMDP& mdp, const AgentState& state,
                                        const BonusConfig& cfg) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    if (state.num_states() != S || state.num_actions() != A || state.horizon() != H)
        throw ShapeError("good_event_check: agent state and MDP shapes differ");
    const double budget = exploration_budget(cfg, state.episode_index(), S);

    GoodEventReport out;
    for (std::size_t h = 0; h + 1 < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const std::uint64_t n = state.pair_count(h, s, a);
                if (n == 0)
                    continue;
                const double radius = 2.0 * std::sqrt(budget / static_cast<double>(n));
                const double ratio = l1_distance(mdp.row(h, s, a), state.empirical_row(h, s, a)) / radius;
                out.worst_ratio = std::max(out.worst_ratio, ratio);
                if (ratio > 1.0 && !out.first_violation)
                    out.first_violation = TripleIndex{s, a, h};
            }
    out.holds = out.worst_ratio <= 1.0;
    return out;
}

// **********************************************************************
// Optimism
// **********************************************************************

struct OptimismReport {
    bool holds = true;
    /// max over (s,h) of V*_h(s) - V^k_h(s).
    double worst_deficit = -kInfinity;
};

inline OptimismReport optimism_check(const ValueTable& optimistic, const ValueTable& optimal) {
    if (optimistic.horizon() != optimal.horizon() || optimistic.num_states() != optimal.num_states())
        throw ShapeError("optimism_check: value tables have different shapes");
    OptimismReport out;
    for (std::size_t h = 0; h <= optimal.horizon(); ++h)
        for (std::size_t s = 0; s < optimal.num_states(); ++s)
            out.worst_deficit = std::max(out.worst_deficit, optimal(h, s) - optimistic(h, s));
    out.holds = out.worst_deficit <= kValueTolerance;
    return out;
}

// **********************************************************************
// Run history and regret decomposition
// **********************************************************************

/// What one episode leaves behind when diagnostics are recorded.
struct EpisodeTrace {
    MarkovPolicy policy;
    /// V^k from the optimistic plan.
    ValueTable optimistic_values;
    /// Exact V^{pi^k} under the true model.
    ValueTable policy_values;
    EpisodeRecord episode;
    bool good_event = false;
    /// n_h^k(s,a) as seen by the planner, flattened [h][s][a].
    std::vector<std::uint64_t> pair_counts;
};

using RunHistory = std::vector<EpisodeTrace>;

struct DecompositionTrace {
    double R0 = 0.0, R1 = 0.0, R2 = 0.0;
    std::uint64_t burn_in_episodes = 1;
    /// Largest per-episode R1 contribution among good-event episodes.
    double worst_good_event_R1 = -kInfinity;
    /// Martingale differences eta_{k,h+1}, episode-major; empty unless requested.
    std::vector<double> eta_increments;

    double total() const noexcept { return R0 + R1 + R2; }
};

/**
 * Splits the realized regret into the burn-in part R0, the optimism error R1
 * and the optimistic-minus-true part R2. Only episodes whose policy is outside
 * the optimal set contribute.
 */
inline DecompositionTrace decompose_regret(const RunHistory& history, const TabularMDP& mdp,
                                           const GapSummary& gaps, double gamma,
                                           bool record_eta = false) {
    const std::size_t H = mdp.horizon(), S = mdp.num_states();
    const std::size_t s0 = mdp.initial_state();
    if (gaps.optimal_value.empty())
        throw ContractError("decompose_regret: gap summary carries no optimal values");

    DecompositionTrace out;
    out.burn_in_episodes = burn_in_episodes(std::max<std::size_t>(history.size(), 1), gamma);
    if (record_eta)
        out.eta_increments.reserve(history.size() * (H > 0 ? H - 1 : 0));

    const double optimal_root = gaps.optimal_value(0, s0);
    for (std::size_t k = 0; k < history.size(); ++k) {
        const EpisodeTrace& trace = history[k];
        if (trace.policy.horizon() != H || trace.optimistic_values.horizon() != H ||
            trace.policy_values.horizon() != H || trace.optimistic_values.num_states() != S ||
            trace.policy_values.num_states() != S)
            throw ContractError("decompose_regret: episode " + std::to_string(k) +
                                " is missing its policy or value tables");
        if (is_optimal_policy(trace.policy, gaps))
            continue;
        const double vk = trace.optimistic_values(0, s0);
        const double vpi = trace.policy_values(0, s0);
        if (k < out.burn_in_episodes) {
            out.R0 += optimal_root - vpi;
            continue;
        }
        const double r1 = optimal_root - vk;
        out.R1 += r1;
        out.R2 += vk - vpi;
        if (trace.good_event)
            out.worst_good_event_R1 = std::max(out.worst_good_event_R1, r1);

        if (record_eta) {
            if (trace.episode.states.size() != H || trace.episode.actions.size() != H)
                throw ContractError("decompose_regret: episode " + std::to_string(k) +
                                    " has no trajectory");
            const auto delta = [&](std::size_t h, std::size_t s) {
                return trace.optimistic_values(h, s) - trace.policy_values(h, s);
            };
            for (std::size_t h = 1; h < H; ++h) {
                const auto p = mdp.row(h - 1, trace.episode.states[h - 1], trace.episode.actions[h - 1]);
                double expected = 0.0;
                for (std::size_t j = 0; j < S; ++j)
                    expected += p[j] * delta(h, j);
                out.eta_increments.push_back(delta(h, trace.episode.states[h]) - expected);
            }
        }
    }
    return out;
}

// **********************************************************************
// L1 concentration
// **********************************************************************

struct ConcentrationProbe {
    double exceed_rate = 0.0;
    /// min{1, 2^S exp(-n eps^2 / 2)}.
    double weissman_bound = 1.0;
    /// 3 sqrt(rate (1 - rate) / trials).
    double slack = 0.0;

    bool dominated() const noexcept { return exceed_rate <= weissman_bound + slack; }
};

inline double weissman_bound(std::size_t S, std::uint64_t n, double eps) {
    const double log_bound = static_cast<double>(S) * std::numbers::ln2 -
                             static_cast<double>(n) * eps * eps / 2.0;
    return log_bound >= 0.0 ? 1.0 : std::exp(log_bound);
}

/**
 * Fraction of `trials` empirical distributions of n draws whose L1 distance
 * from `row` exceeds eps (strictly).
 */
inline ConcentrationProbe l1_concentration_probe(std::span<const double> row, std::uint64_t n,
                                                 std::uint64_t trials, double eps, Rng& rng) {
    if (row.empty())
        throw DomainError("l1_concentration_probe: empty row");
    double mass = 0.0;
    for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw DomainError("l1_concentration_probe: row has a negative or non-finite entry");
        mass += p;
    }
    if (std::abs(mass - 1.0) > kDpRowTolerance)
        throw DomainError("l1_concentration_probe: row does not sum to one");
    if (n == 0 || trials == 0 || !(eps > 0.0))
        throw DomainError("l1_concentration_probe: need n >= 1, trials >= 1 and eps > 0");

    const std::size_t S = row.size();
    std::vector<double> cumulative(S);
    std::vector<double> expected(S);
    double running = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
        running += row[i];
        cumulative[i] = running;
        expected[i] = static_cast<double>(n) * row[i];
    }
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < S; ++i)
        if (row[i] > 0.0)
            last_positive = i;

    std::vector<std::uint64_t> counts(S);
    std::uint64_t exceed = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::uint64_t draw = 0; draw < n; ++draw) {
            const double u = rng.uniform();
            std::size_t j = 0;
            while (j < S && !(u < cumulative[j]))
                ++j;
            ++counts[j < S ? j : last_positive];
        }
        // Accumulating |count - n p| keeps the boundary case (L1 == eps) exact
        // when n p is representable.
        double deviation = 0.0;
        for (std::size_t i = 0; i < S; ++i)
            deviation += std::abs(static_cast<double>(counts[i]) - expected[i]);
        if (deviation / static_cast<double>(n) > eps)
            ++exceed;
    }

    ConcentrationProbe out;
    out.exceed_rate = static_cast<double>(exceed) / static_cast<double>(trials);
    out.weissman_bound = weissman_bound(S, n, eps);
    out.slack = 3.0 * std::sqrt(out.exceed_rate * (1.0 - out.exceed_rate) / static_cast<double>(trials));
    return out;
}

// **********************************************************************
// Bonus-sum lemma
// **********************************************************************

struct LemmaSumCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double log_lhs = -kInfinity;
    double log_rhs = -kInfinity;

    /// lhs <= rhs (1 + 1e-9), compared in log space so underflow cannot fake a pass.
    bool holds() const noexcept { return log_lhs <= log_rhs + std::log1p(1e-9); }
    /// lhs / rhs, from the logarithms.
    double ratio() const noexcept { return std::exp(log_lhs - log_rhs); }
};

/**
 * lhs = sum_{n=1}^{K} exp(-2n (b_h^{max(n, ceil(K^gamma))}(n) / (H-h-1))^2)
 * rhs = 2^{-S} K exp(-2 mu K^alpha)            (KD)
 *       2^{-S} K exp(-2 mu K^{gamma alpha})    (KI)
 * The squared ratio is formed as budget / n directly, so h = H-1 is legal.
 */
inline LemmaSumCheck lemma1_sum_check(const BonusConfig& cfg, std::size_t H, std::size_t S,
                                      std::size_t h, double gamma) {
    cfg.validate();
    if (h >= H)
        throw DomainError("lemma1_sum_check: stage out of range");
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw DomainError("lemma1_sum_check: gamma must lie in [0,1]");
    const std::size_t K = cfg.total_episodes;
    const std::uint64_t burn = burn_in_episodes(K, gamma);

    // log-sum-exp over the summands.
    std::vector<double> exponents;
    exponents.reserve(K);
    for (std::uint64_t n = 1; n <= K; ++n) {
        const std::uint64_t episode = std::max(n, burn);
        const double squared_ratio = exploration_budget(cfg, episode, S) / static_cast<double>(n);
        exponents.push_back(-2.0 * static_cast<double>(n) * squared_ratio);
    }
    const double peak = *std::max_element(exponents.begin(), exponents.end());
    double scaled = 0.0;
    for (double e : exponents)
        scaled += std::exp(e - peak);

    LemmaSumCheck out;
    out.log_lhs = peak + std::log(scaled);
    const double Kd = static_cast<double>(K);
    const double exponent = cfg.schedule == BonusSchedule::KD ? cfg.alpha : gamma * cfg.alpha;
    out.log_rhs = -static_cast<double>(S) * std::numbers::ln2 + std::log(Kd) -
                  2.0 * cfg.mu * budget_power(Kd, exponent);
    out.lhs = std::exp(out.log_lhs);
    out.rhs = std::exp(out.log_rhs);
    return out;
}

// **********************************************************************
// Perturbation lemma
// **********************************************************************

struct TransferCheck {
    bool conditions_hold = false;
    bool subset_holds = false;
    /// Largest L1 / threshold and |r~ - r| / threshold over all entries.
    double kernel_ratio = 0.0;
    double reward_ratio = 0.0;
};

inline double lemma2_kernel_threshold(double gap, std::size_t H, std::size_t h) {
    return gap / (2.0 * static_cast<double>(H) * static_cast<double>(H - h - 1));
}
inline double lemma2_reward_threshold(double gap, std::size_t H) {
    return gap / (4.0 * static_cast<double>(H));
}

/**
 * Checks the closeness conditions of `perturbed` against `truth` and whether
 * the optimal action sets of `perturbed` sit inside those of `truth`.
 * The last-stage rewards must coincide exactly.
 */
inline TransferCheck lemma2_transfer_check(const TabularMDP& truth, const TabularMDP& perturbed) {
    if (!truth.same_shape(perturbed))
        throw ShapeError("lemma2_transfer_check: models have different shapes");
    const std::size_t S = truth.num_states(), A = truth.num_actions(), H = truth.horizon();
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            if (truth.reward(H - 1, s, a) != perturbed.reward(H - 1, s, a))
                throw ContractError("lemma2_transfer_check: last-stage rewards must be identical");

    const OptimalSolution original = backward_induction(truth);
    const OptimalSolution shifted = backward_induction(perturbed);
    const double gap = original.gaps.gap_star;

    TransferCheck out;
    if (std::isfinite(gap)) {
        for (std::size_t h = 0; h + 1 < H; ++h)
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t a = 0; a < A; ++a)
                    out.kernel_ratio = std::max(
                        out.kernel_ratio, l1_distance(truth.row(h, s, a), perturbed.row(h, s, a)) /
                                              lemma2_kernel_threshold(gap, H, h));
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t a = 0; a < A; ++a)
                    out.reward_ratio = std::max(
                        out.reward_ratio,
                        std::abs(truth.reward(h, s, a) - perturbed.reward(h, s, a)) /
                            lemma2_reward_threshold(gap, H));
    }
    out.conditions_hold = out.kernel_ratio <= 1.0 && out.reward_ratio <= 1.0;

    out.subset_holds = true;
    for (std::size_t h = 0; h < H && out.subset_holds; ++h)
        for (std::size_t s = 0; s < S && out.subset_holds; ++s)
            for (std::size_t a = 0; a < A; ++a)
                if (shifted.gaps.is_optimal_action(h, s, a) && !original.gaps.is_optimal_action(h, s, a)) {
                    out.subset_holds = false;
                    break;
                }
    return out;
}

/**
 * Random model inside the closeness thresholds of `truth`.
 *
 * Each kernel row moves toward a uniformly drawn point of the simplex by an L1
 * distance uniform in (0, threshold), capped at the distance to that point, so
 * the row stays a distribution and keeps at least the support of the original.
 * Rewards before the last stage shift uniformly within their threshold and are
 * clamped to [0,1]; last-stage rewards are copied.
 */
inline TabularMDP sample_lemma2_perturbation(const TabularMDP& truth, double gap, Rng& rng) {
    if (!std::isfinite(gap) || !(gap > 0.0))
        throw DomainError("sample_lemma2_perturbation: needs a finite positive gap");
    const std::size_t S = truth.num_states(), A = truth.num_actions(), H = truth.horizon();
    constexpr double inside = 1.0 - 1e-9;
    TabularMDP out = truth;

    std::vector<double> target(S);
    for (std::size_t h = 0; h + 1 < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                double total = 0.0;
                for (auto& q : target) {
                    q = rng.exponential();
                    total += q;
                }
                for (auto& q : target)
                    q /= total;
                const auto original = truth.row(h, s, a);
                const double distance = l1_distance(original, target);
                const double step = rng.uniform() * lemma2_kernel_threshold(gap, H, h) * inside;
                if (distance <= 0.0)
                    continue;
                const double weight = std::min(step, distance) / distance;
                auto row = out.row(h, s, a);
                double mass = 0.0;
                for (std::size_t j = 0; j < S; ++j) {
                    row[j] = (1.0 - weight) * original[j] + weight * target[j];
                    mass += row[j];
                }
                for (auto& p : row)
                    p /= mass;
            }
    const double reward_radius = lemma2_reward_threshold(gap, H) * inside;
    for (std::size_t h = 0; h + 1 < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                out.reward(h, s, a) =
                    std::clamp(truth.reward(h, s, a) + rng.uniform(-reward_radius, reward_radius), 0.0, 1.0);
    out.validate();
    return out;
}

// **********************************************************************
// Sufficient-visit stopping
// **********************************************************************

struct StoppingReport {
    bool holds = true;
    /// Episodes where every reachable count exceeded its threshold and the good event held.
    std::uint64_t active_episodes = 0;
    std::uint64_t violations = 0;
};

/// pi[h][s] optimal at every (s,h) flagged in `mask` (layout [h*S + s]).
inline bool is_optimal_on(const MarkovPolicy& policy, const GapSummary& gaps,
                          const std::vector<bool>& mask) {
    for (std::size_t h = 0; h < policy.horizon(); ++h)
        for (std::size_t s = 0; s < policy.num_states(); ++s)
            if (mask[h * policy.num_states() + s] && !gaps.is_optimal_action(h, s, policy(h, s)))
                return false;
    return true;
}

/**
 * Once every count exceeds n_bar_h and the good event holds, the played
 * policy must be optimal.
 *
 * Counts and optimality are both taken over the (s,h) pairs reachable from s0:
 * a pair no policy can visit never accumulates counts, so including it would
 * make the premise unsatisfiable for any instance with S > 1.
 */
inline StoppingReport n_bar_stopping_check(const RunHistory& history, const BoundInputs& in,
                                           const TabularMDP& mdp, const GapSummary& gaps) {
    StoppingReport out;
    if (!gaps.has_finite_gap())
        return out;
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    std::vector<double> thresholds(H);
    for (std::size_t h = 0; h < H; ++h)
        thresholds[h] = compute_n_bar(in, h);
    const std::vector<bool> reachable = reachable_states(mdp);

    for (const EpisodeTrace& trace : history) {
        if (trace.pair_counts.size() != H * S * A)
            throw ContractError("n_bar_stopping_check: episode has no count snapshot");
        if (!trace.good_event)
            continue;
        bool saturated = true;
        for (std::size_t h = 0; h < H && saturated; ++h)
            for (std::size_t s = 0; s < S && saturated; ++s) {
                // n_bar is zero on the last stage, where counts never enter the plan.
                if (!reachable[h * S + s] || thresholds[h] == 0.0)
                    continue;
                for (std::size_t a = 0; a < A; ++a)
                    if (!(static_cast<double>(trace.pair_counts[(h * S + s) * A + a]) > thresholds[h])) {
                        saturated = false;
                        break;
                    }
            }
        if (!saturated)
            continue;
        ++out.active_episodes;
        if (!is_optimal_on(trace.policy, gaps, reachable)) {
            ++out.violations;
            out.holds = false;
        }
    }
    return out;
}

} // namespace regret_lab
