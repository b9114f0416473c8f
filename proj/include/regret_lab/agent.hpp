#pragma once

#include "regret_lab/errors.hpp"
#include "regret_lab/mdp.hpp"
#include "regret_lab/random.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace regret_lab {

// **********************************************************************
// Bonus schedules
// **********************************************************************

/// KD: the exploration budget uses the total episode count K.
/// KI: it uses the current episode index, (k+1).
enum class BonusSchedule { KD, KI };

inline std::string_view to_string(BonusSchedule schedule) noexcept {
    return schedule == BonusSchedule::KD ? "KD" : "KI";
}

inline BonusSchedule parse_schedule(std::string_view text) {
    if (text == "KD" || text == "kd")
        return BonusSchedule::KD;
    if (text == "KI" || text == "ki")
        return BonusSchedule::KI;
    throw DomainError("unknown bonus schedule '" + std::string(text) + "' (expected KD or KI)");
}

struct BonusConfig {
    BonusSchedule schedule = BonusSchedule::KD;
    double alpha = 0.5;
    double mu = 1.0;
    std::size_t total_episodes = 1;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw DomainError("BonusConfig: alpha must lie in [0,1]");
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw DomainError("BonusConfig: mu must be positive");
        if (total_episodes < 1)
            throw DomainError("BonusConfig: K must be at least 1");
    }
};

/// base^alpha with the corner exponents evaluated exactly.
inline double budget_power(double base, double alpha) {
    if (alpha == 0.0)
        return 1.0;
    if (alpha == 1.0)
        return base;
    return std::pow(base, alpha);
}

/**
 * Numerator of the squared bonus radius at episode k:
 * 0.5 S ln2 + mu K^alpha (KD) or 0.5 S ln2 + mu (k+1)^alpha (KI).
 * Defined for any k >= 0, including k >= K.
 */
inline double exploration_budget(const BonusConfig& cfg, std::uint64_t k, std::size_t S) {
    const double base = cfg.schedule == BonusSchedule::KD
                            ? static_cast<double>(cfg.total_episodes)
                            : static_cast<double>(k) + 1.0;
    return 0.5 * static_cast<double>(S) * std::numbers::ln2 + cfg.mu * budget_power(base, cfg.alpha);
}

/// b_h^k(n); +infinity when n = 0.
inline double bonus(const BonusConfig& cfg, std::size_t h, std::uint64_t k, std::uint64_t n,
                    std::size_t S, std::size_t H) {
    if (n == 0)
        return kInfinity;
    const double multiplier = static_cast<double>(H - h - 1);
    return multiplier * std::sqrt(exploration_budget(cfg, k, S) / static_cast<double>(n));
}

// **********************************************************************
// Agent state
// **********************************************************************

/// One rollout: s[h], a[h] for h = 0..H-1, plus the caller-filled score.
struct EpisodeRecord {
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;
    double regret = 0.0;
    bool policy_was_optimal = false;
};

/**
 * Visit counts and the empirical kernel.
 *
 * Transition counts n_h(s,a,s') exist for h <= H-2. Pair counts n_h(s,a) exist
 * for every stage including H-1, where no successor is observed; the bonus at
 * the last stage needs them. The integer counts are authoritative and the
 * empirical rows are cached from them.
 */
class AgentState {
public:
    AgentState(std::size_t num_states, std::size_t num_actions, std::size_t horizon)
        : S_(num_states), A_(num_actions), H_(horizon) {
        if (S_ == 0 || A_ == 0 || H_ == 0)
            throw ShapeError("AgentState: S, A and H must all be positive");
        const std::size_t rows = (H_ - 1) * S_ * A_;
        triple_counts_.assign(rows * S_, 0);
        pair_counts_.assign(H_ * S_ * A_, 0);
        empirical_.assign(rows * S_, 1.0 / static_cast<double>(S_));
    }

    explicit AgentState(const TabularMDP& mdp)
        : AgentState(mdp.num_states(), mdp.num_actions(), mdp.horizon()) {}

    std::size_t num_states() const noexcept { return S_; }
    std::size_t num_actions() const noexcept { return A_; }
    std::size_t horizon() const noexcept { return H_; }
    std::uint64_t episode_index() const noexcept { return episode_; }

    std::uint64_t triple_count(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const {
        return triple_counts_[row_offset(h, s, a) + next];
    }
    std::uint64_t pair_count(std::size_t h, std::size_t s, std::size_t a) const {
        return pair_counts_[(h * S_ + s) * A_ + a];
    }
    std::span<const double> empirical_row(std::size_t h, std::size_t s, std::size_t a) const {
        return {empirical_.data() + row_offset(h, s, a), S_};
    }
    const std::vector<std::uint64_t>& pair_counts() const noexcept { return pair_counts_; }
    const std::vector<std::uint64_t>& triple_counts() const noexcept { return triple_counts_; }

    /// Folds one trajectory into the counts and advances the episode index.
    void record(const EpisodeRecord& episode) {
        if (episode.states.size() != H_ || episode.actions.size() != H_)
            throw ShapeError("AgentState::record: trajectory length differs from H");
        for (std::size_t h = 0; h < H_; ++h)
            if (episode.states[h] >= S_ || episode.actions[h] >= A_)
                throw ShapeError("AgentState::record: index out of range at h = " +
                                 std::to_string(h));
        for (std::size_t h = 0; h < H_; ++h) {
            const std::size_t s = episode.states[h], a = episode.actions[h];
            ++pair_counts_[(h * S_ + s) * A_ + a];
            if (h + 1 < H_) {
                ++triple_counts_[row_offset(h, s, a) + episode.states[h + 1]];
                refresh_row(h, s, a);
            }
        }
        ++episode_;
    }

    /// Throws ContractError if counts, kernel rows or totals disagree.
    void check_invariants() const {
        for (std::size_t h = 0; h < H_; ++h) {
            std::uint64_t total = 0;
            for (std::size_t s = 0; s < S_; ++s)
                for (std::size_t a = 0; a < A_; ++a) {
                    const std::uint64_t n = pair_count(h, s, a);
                    total += n;
                    if (h + 1 == H_)
                        continue;
                    std::uint64_t sum = 0;
                    double mass = 0.0;
                    for (std::size_t next = 0; next < S_; ++next) {
                        sum += triple_count(h, s, a, next);
                        mass += empirical_row(h, s, a)[next];
                    }
                    if (sum != n)
                        throw ContractError("pair count differs from the sum of transition counts");
                    if (std::abs(mass - 1.0) > kRowSumTolerance)
                        throw ContractError("empirical row does not sum to one");
                    if (n == 0)
                        for (double p : empirical_row(h, s, a))
                            if (p != 1.0 / static_cast<double>(S_))
                                throw ContractError("unvisited empirical row is not uniform");
                }
            if (total != episode_)
                throw ContractError("stage " + std::to_string(h) + " counts sum to " +
                                    std::to_string(total) + " after " + std::to_string(episode_) +
                                    " episodes");
        }
    }

private:
    std::size_t row_offset(std::size_t h, std::size_t s, std::size_t a) const noexcept {
        return ((h * S_ + s) * A_ + a) * S_;
    }

    void refresh_row(std::size_t h, std::size_t s, std::size_t a) {
        const std::size_t offset = row_offset(h, s, a);
        const double n = static_cast<double>(pair_count(h, s, a));
        for (std::size_t next = 0; next < S_; ++next)
            empirical_[offset + next] = static_cast<double>(triple_counts_[offset + next]) / n;
    }

    std::size_t S_, A_, H_;
    std::uint64_t episode_ = 0;
    std::vector<std::uint64_t> triple_counts_;
    std::vector<std::uint64_t> pair_counts_;
    std::vector<double> empirical_;
};

/// Functional form of AgentState::record.
inline AgentState update(AgentState state, const EpisodeRecord& episode) {
    state.record(episode);
    return state;
}

// **********************************************************************
// Planning
// **********************************************************************

struct OptimisticPlan {
    QTable q_values;
    ValueTable values;
    MarkovPolicy policy;
};

/**
 * Optimistic backward pass on the empirical model:
 * Q_h(s,a) = min{ r_h(s,a) + P_hat V_{h+1} + b_h^k(n_h(s,a)), H-h },
 * greedy in Q with ties going to the lowest action. Only the rewards of `mdp`
 * are read; the agent never sees the true kernel here.
 */
inline OptimisticPlan plan(const TabularMDP& mdp, const AgentState& state,
                           const BonusConfig& cfg) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    if (state.num_states() != S || state.num_actions() != A || state.horizon() != H)
        throw ShapeError("plan: agent state and MDP shapes differ");
    const std::uint64_t k = state.episode_index();

    OptimisticPlan out{QTable(H, S, A), ValueTable(H, S), MarkovPolicy(H, S)};
    for (std::size_t h = H; h-- > 0;) {
        const double cap = static_cast<double>(H - h);
        for (std::size_t s = 0; s < S; ++s) {
            double best = -kInfinity;
            std::size_t argmax = 0;
            for (std::size_t a = 0; a < A; ++a) {
                const std::uint64_t n = state.pair_count(h, s, a);
                double q = cap;
                // n = 0 carries an infinite bonus; the clip makes it exactly H-h.
                if (n > 0) {
                    double estimate = mdp.reward(h, s, a) + bonus(cfg, h, k, n, S, H);
                    if (h + 1 < H) {
                        const auto p = state.empirical_row(h, s, a);
                        const auto next = out.values.stage(h + 1);
                        for (std::size_t j = 0; j < S; ++j)
                            estimate += p[j] * next[j];
                    }
                    q = std::min(estimate, cap);
                }
                out.q_values(h, s, a) = q;
                if (q > best) {
                    best = q;
                    argmax = a;
                }
            }
            out.values(h, s) = best;
            out.policy(h, s) = argmax;
        }
    }
    return out;
}

// **********************************************************************
// Execution
// **********************************************************************

/// Inverse-CDF draw over the row in state-index order.
inline std::size_t sample_next_state(std::span<const double> row, Rng& rng) {
    double mass = 0.0;
    for (double p : row)
        mass += p;
    if (mass < 1.0 - kDpRowTolerance)
        throw SamplingError("kernel row mass " + std::to_string(mass) + " is too far below one to sample from");
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        cumulative += row[j];
        if (row[j] > 0.0)
            last_positive = j;
        if (u < cumulative)
            return j;
    }
    return last_positive;
}

/// Rolls the policy out from s0 under the true kernel. The record is unscored.
inline EpisodeRecord act_and_step(const TabularMDP& mdp, const MarkovPolicy& policy, Rng& rng) {
    check_policy_shape(mdp, policy);
    const std::size_t H = mdp.horizon();
    EpisodeRecord out;
    out.states.resize(H);
    out.actions.resize(H);
    std::size_t s = mdp.initial_state();
    for (std::size_t h = 0; h < H; ++h) {
        const std::size_t a = policy(h, s);
        out.states[h] = s;
        out.actions[h] = a;
        if (h + 1 < H)
            s = sample_next_state(mdp.row(h, s, a), rng);
    }
    return out;
}

/// Rollout plus exact scoring: regret = V*_0(s0) - V^pi_0(s0).
inline EpisodeRecord act_and_step(const TabularMDP& mdp, const MarkovPolicy& policy,
                                  const OptimalSolution& optimum, Rng& rng) {
    EpisodeRecord out = act_and_step(mdp, policy, rng);
    const ValueTable value = evaluate_policy(mdp, policy);
    const std::size_t s0 = mdp.initial_state();
    out.regret = optimum.values(0, s0) - value(0, s0);
    out.policy_was_optimal = is_optimal_policy(policy, optimum.gaps);
    return out;
}

} // namespace regret_lab
