#pragma once

#include "regret_lab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace regret_lab {

/// Kernel rows of a well-formed model sum to one within this.
inline constexpr double kRowSumTolerance = 1e-12;
/// Looser row check applied by the dynamic-programming entry points.
inline constexpr double kDpRowTolerance = 1e-9;
/// Actions within this of the stage maximum are optimal.
inline constexpr double kOptimalActionTolerance = 1e-9;
/// Absolute tolerance on value comparisons.
inline constexpr double kValueTolerance = 1e-9;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// **********************************************************************
// Model
// **********************************************************************

/**
 * Finite-horizon tabular MDP with deterministic rewards.
 *
 * Stages run 0..H-1. Rewards r[h][s][a] exist for every stage, transition rows
 * P[h][s][a][.] only for h <= H-2 (an H = 1 model has an empty kernel).
 * A freshly constructed model has zero rewards and uniform rows, so it already
 * satisfies every invariant; edit it through reward() / row() and call
 * validate() when done.
 */
class TabularMDP {
public:
    TabularMDP(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
               std::size_t initial_state = 0)
        : S_(num_states), A_(num_actions), H_(horizon), s0_(initial_state) {
        if (S_ == 0 || A_ == 0 || H_ == 0)
            throw ModelError("TabularMDP: S, A and H must all be positive");
        if (s0_ >= S_)
            throw ModelError("TabularMDP: initial state " + std::to_string(s0_) +
                             " out of range for S = " + std::to_string(S_));
        rewards_.assign(H_ * S_ * A_, 0.0);
        kernel_.assign((H_ - 1) * S_ * A_ * S_, 1.0 / static_cast<double>(S_));
    }

    std::size_t num_states() const noexcept { return S_; }
    std::size_t num_actions() const noexcept { return A_; }
    std::size_t horizon() const noexcept { return H_; }
    std::size_t initial_state() const noexcept { return s0_; }

    double reward(std::size_t h, std::size_t s, std::size_t a) const {
        return rewards_[reward_index(h, s, a)];
    }
    double& reward(std::size_t h, std::size_t s, std::size_t a) {
        return rewards_[reward_index(h, s, a)];
    }

    /// Next-state distribution P_h(.|s,a); requires h <= H-2.
    std::span<const double> row(std::size_t h, std::size_t s, std::size_t a) const {
        return {kernel_.data() + row_offset(h, s, a), S_};
    }
    std::span<double> row(std::size_t h, std::size_t s, std::size_t a) {
        return {kernel_.data() + row_offset(h, s, a), S_};
    }

    const std::vector<double>& rewards() const noexcept { return rewards_; }
    const std::vector<double>& kernel() const noexcept { return kernel_; }

    /// Throws ModelError naming the first violated invariant and its indices.
    void validate(double row_tolerance = kRowSumTolerance) const {
        for (std::size_t h = 0; h < H_; ++h)
            for (std::size_t s = 0; s < S_; ++s)
                for (std::size_t a = 0; a < A_; ++a) {
                    const double r = reward(h, s, a);
                    if (!(r >= 0.0 && r <= 1.0)) {
                        std::ostringstream msg;
                        msg << "reward r[" << h << "][" << s << "][" << a << "] = " << r
                            << " outside [0,1]";
                        throw ModelError(msg.str());
                    }
                }
        for (std::size_t h = 0; h + 1 < H_; ++h)
            for (std::size_t s = 0; s < S_; ++s)
                for (std::size_t a = 0; a < A_; ++a) {
                    double sum = 0.0;
                    const auto p = row(h, s, a);
                    for (std::size_t next = 0; next < S_; ++next) {
                        if (!(p[next] >= 0.0) || !std::isfinite(p[next])) {
                            std::ostringstream msg;
                            msg << "kernel P[" << h << "][" << s << "][" << a << "][" << next
                                << "] = " << p[next] << " is not a probability";
                            throw ModelError(msg.str());
                        }
                        sum += p[next];
                    }
                    if (std::abs(sum - 1.0) > row_tolerance) {
                        std::ostringstream msg;
                        msg.precision(17);
                        msg << "kernel row P[" << h << "][" << s << "][" << a << "] sums to "
                            << sum;
                        throw ModelError(msg.str());
                    }
                }
    }

    bool same_shape(const TabularMDP& other) const noexcept {
        return S_ == other.S_ && A_ == other.A_ && H_ == other.H_;
    }

    friend bool operator==(const TabularMDP&, const TabularMDP&) = default;

private:
    std::size_t reward_index(std::size_t h, std::size_t s, std::size_t a) const noexcept {
        return (h * S_ + s) * A_ + a;
    }
    std::size_t row_offset(std::size_t h, std::size_t s, std::size_t a) const noexcept {
        return ((h * S_ + s) * A_ + a) * S_;
    }

    std::size_t S_, A_, H_, s0_;
    std::vector<double> rewards_;
    std::vector<double> kernel_;
};

// **********************************************************************
// Policies and value tables
// **********************************************************************

/// Deterministic Markov policy pi[h][s].
class MarkovPolicy {
public:
    MarkovPolicy() = default;
    MarkovPolicy(std::size_t horizon, std::size_t num_states)
        : H_(horizon), S_(num_states), actions_(horizon * num_states, 0) {}

    std::size_t horizon() const noexcept { return H_; }
    std::size_t num_states() const noexcept { return S_; }

    std::size_t operator()(std::size_t h, std::size_t s) const { return actions_[h * S_ + s]; }
    std::size_t& operator()(std::size_t h, std::size_t s) { return actions_[h * S_ + s]; }

    const std::vector<std::size_t>& actions() const noexcept { return actions_; }

    friend bool operator==(const MarkovPolicy&, const MarkovPolicy&) = default;

private:
    std::size_t H_ = 0, S_ = 0;
    std::vector<std::size_t> actions_;
};

/// v[h][s] for h = 0..H; stage H is the terminal zero row.
class ValueTable {
public:
    ValueTable() = default;
    ValueTable(std::size_t horizon, std::size_t num_states)
        : H_(horizon), S_(num_states), values_((horizon + 1) * num_states, 0.0) {}

    std::size_t horizon() const noexcept { return H_; }
    std::size_t num_states() const noexcept { return S_; }
    bool empty() const noexcept { return values_.empty(); }

    double operator()(std::size_t h, std::size_t s) const { return values_[h * S_ + s]; }
    double& operator()(std::size_t h, std::size_t s) { return values_[h * S_ + s]; }

    std::span<const double> stage(std::size_t h) const { return {values_.data() + h * S_, S_}; }

    friend bool operator==(const ValueTable&, const ValueTable&) = default;

private:
    std::size_t H_ = 0, S_ = 0;
    std::vector<double> values_;
};

/// q[h][s][a] for h = 0..H-1.
class QTable {
public:
    QTable() = default;
    QTable(std::size_t horizon, std::size_t num_states, std::size_t num_actions)
        : H_(horizon), S_(num_states), A_(num_actions),
          values_(horizon * num_states * num_actions, 0.0) {}

    std::size_t horizon() const noexcept { return H_; }
    std::size_t num_states() const noexcept { return S_; }
    std::size_t num_actions() const noexcept { return A_; }

    double operator()(std::size_t h, std::size_t s, std::size_t a) const {
        return values_[(h * S_ + s) * A_ + a];
    }
    double& operator()(std::size_t h, std::size_t s, std::size_t a) {
        return values_[(h * S_ + s) * A_ + a];
    }

    std::span<const double> actions(std::size_t h, std::size_t s) const {
        return {values_.data() + (h * S_ + s) * A_, A_};
    }

private:
    std::size_t H_ = 0, S_ = 0, A_ = 0;
    std::vector<double> values_;
};

/**
 * Optimal action sets and the global Q*-gap of an instance.
 *
 * gap_star is +infinity when every action is optimal at every (s,h); bounds
 * that divide by the gap then treat 1/gap_star as zero.
 */
class GapSummary {
public:
    GapSummary() = default;
    GapSummary(std::size_t horizon, std::size_t num_states, std::size_t num_actions)
        : H_(horizon), S_(num_states), A_(num_actions),
          optimal_(horizon * num_states * num_actions, 0) {}

    double gap_star = kInfinity;
    ValueTable optimal_value;

    std::size_t horizon() const noexcept { return H_; }
    std::size_t num_states() const noexcept { return S_; }
    std::size_t num_actions() const noexcept { return A_; }

    bool has_finite_gap() const noexcept { return std::isfinite(gap_star); }
    double inverse_gap() const noexcept { return has_finite_gap() ? 1.0 / gap_star : 0.0; }

    bool is_optimal_action(std::size_t h, std::size_t s, std::size_t a) const {
        return optimal_[(h * S_ + s) * A_ + a] != 0;
    }
    void set_optimal_action(std::size_t h, std::size_t s, std::size_t a, bool optimal) {
        optimal_[(h * S_ + s) * A_ + a] = optimal ? 1 : 0;
    }

    std::vector<std::size_t> optimal_actions(std::size_t h, std::size_t s) const {
        std::vector<std::size_t> out;
        for (std::size_t a = 0; a < A_; ++a)
            if (is_optimal_action(h, s, a))
                out.push_back(a);
        return out;
    }

    /// Lowest-index optimal action at (h, s).
    std::size_t first_optimal_action(std::size_t h, std::size_t s) const {
        for (std::size_t a = 0; a < A_; ++a)
            if (is_optimal_action(h, s, a))
                return a;
        return 0;
    }

private:
    std::size_t H_ = 0, S_ = 0, A_ = 0;
    std::vector<unsigned char> optimal_;
};

/// Everything backward induction produces for one instance.
struct OptimalSolution {
    ValueTable values;
    QTable q_values;
    GapSummary gaps;
    /// Lowest-index optimal action everywhere.
    MarkovPolicy greedy;
};

// **********************************************************************
// Dynamic programming
// **********************************************************************

/// Q = r_h(s,a) + sum_s' P_h(s'|s,a) next(s'); the kernel term is absent at h = H-1.
inline double bellman_backup(const TabularMDP& mdp, const ValueTable& values, std::size_t h,
                             std::size_t s, std::size_t a) {
    double q = mdp.reward(h, s, a);
    if (h + 1 < mdp.horizon()) {
        const auto p = mdp.row(h, s, a);
        const auto next = values.stage(h + 1);
        for (std::size_t n = 0; n < p.size(); ++n)
            q += p[n] * next[n];
    }
    return q;
}

/**
 * Bellman optimality recursion with V*_H = 0. Also returns the optimal action
 * sets (tolerance kOptimalActionTolerance) and gap_star, the smallest
 * separation between the stage maximum and any non-optimal action.
 */
inline OptimalSolution backward_induction(const TabularMDP& mdp) {
    mdp.validate(kDpRowTolerance);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();

    OptimalSolution out{ValueTable(H, S), QTable(H, S, A), GapSummary(H, S, A),
                        MarkovPolicy(H, S)};
    double gap = kInfinity;
    for (std::size_t h = H; h-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            double best = -kInfinity;
            for (std::size_t a = 0; a < A; ++a) {
                const double q = bellman_backup(mdp, out.values, h, s, a);
                out.q_values(h, s, a) = q;
                best = std::max(best, q);
            }
            out.values(h, s) = best;
            bool chosen = false;
            for (std::size_t a = 0; a < A; ++a) {
                const double q = out.q_values(h, s, a);
                const bool optimal = best - q <= kOptimalActionTolerance;
                out.gaps.set_optimal_action(h, s, a, optimal);
                if (optimal && !chosen) {
                    out.greedy(h, s) = a;
                    chosen = true;
                }
                if (!optimal)
                    gap = std::min(gap, best - q);
            }
        }
    }
    out.gaps.gap_star = gap;
    out.gaps.optimal_value = out.values;
    return out;
}

inline void check_policy_shape(const TabularMDP& mdp, const MarkovPolicy& policy) {
    if (policy.horizon() != mdp.horizon() || policy.num_states() != mdp.num_states())
        throw ShapeError("policy is " + std::to_string(policy.horizon()) + "x" +
                         std::to_string(policy.num_states()) + " but the MDP has H = " +
                         std::to_string(mdp.horizon()) + ", S = " +
                         std::to_string(mdp.num_states()));
    for (std::size_t h = 0; h < policy.horizon(); ++h)
        for (std::size_t s = 0; s < policy.num_states(); ++s)
            if (policy(h, s) >= mdp.num_actions())
                throw ShapeError("policy action at (h=" + std::to_string(h) +
                                 ", s=" + std::to_string(s) + ") is out of range");
}

/// Exact value of a deterministic Markov policy by backward recursion.
inline ValueTable evaluate_policy(const TabularMDP& mdp, const MarkovPolicy& policy) {
    check_policy_shape(mdp, policy);
    ValueTable values(mdp.horizon(), mdp.num_states());
    for (std::size_t h = mdp.horizon(); h-- > 0;)
        for (std::size_t s = 0; s < mdp.num_states(); ++s)
            values(h, s) = bellman_backup(mdp, values, h, s, policy(h, s));
    return values;
}

/// Stagewise membership: pi[h][s] must be optimal at every (s,h), reachable or not.
inline bool is_optimal_policy(const MarkovPolicy& policy, const GapSummary& gaps) {
    if (policy.horizon() != gaps.horizon() || policy.num_states() != gaps.num_states())
        throw ShapeError("policy and gap summary have different shapes");
    for (std::size_t h = 0; h < policy.horizon(); ++h)
        for (std::size_t s = 0; s < policy.num_states(); ++s)
            if (policy(h, s) >= gaps.num_actions() ||
                !gaps.is_optimal_action(h, s, policy(h, s)))
                return false;
    return true;
}

/// max - min over one stage of a value table.
inline double span(std::span<const double> values) {
    if (values.empty())
        return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo;
}

/**
 * reachable[h*S + s] is true when state s can be occupied at stage h under
 * some policy, i.e. it lies on a positive-probability path from s0.
 */
inline std::vector<bool> reachable_states(const TabularMDP& mdp) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    std::vector<bool> reach(H * S, false);
    reach[mdp.initial_state()] = true;
    for (std::size_t h = 0; h + 1 < H; ++h)
        for (std::size_t s = 0; s < S; ++s) {
            if (!reach[h * S + s])
                continue;
            for (std::size_t a = 0; a < A; ++a) {
                const auto p = mdp.row(h, s, a);
                for (std::size_t n = 0; n < S; ++n)
                    if (p[n] > 0.0)
                        reach[(h + 1) * S + n] = true;
            }
        }
    return reach;
}

// **********************************************************************
// Enumeration oracle
// **********************************************************************

inline constexpr std::uint64_t kEnumerationGuard = 1'000'000;

struct EnumerationResult {
    double best_value = -kInfinity;
    /// All policies reaching best_value at (0, s0) within kValueTolerance.
    std::vector<MarkovPolicy> witnesses;
    /// Entrywise maximum of V^pi over all enumerated policies.
    ValueTable optimal_values;
    std::uint64_t policies_enumerated = 0;
};

/**
 * Evaluates every deterministic Markov policy. Independent of
 * backward_induction: only evaluate_policy is used.
 */
inline EnumerationResult enumerate_policies_oracle(const TabularMDP& mdp,
                                                   std::uint64_t guard = kEnumerationGuard) {
    mdp.validate(kDpRowTolerance);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const std::size_t slots = S * H;

    std::uint64_t total = 1;
    for (std::size_t i = 0; i < slots; ++i) {
        if (total > guard / A)
            throw RefusalError("enumerate_policies_oracle: A^(S*H) = " + std::to_string(A) +
                               "^" + std::to_string(slots) + " exceeds the guard of " +
                               std::to_string(guard) + " policies");
        total *= A;
    }

    EnumerationResult out;
    out.optimal_values = ValueTable(H, S);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            out.optimal_values(h, s) = -kInfinity;

    const auto decode = [&](std::uint64_t code, MarkovPolicy& policy) {
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t s = 0; s < S; ++s) {
                policy(h, s) = static_cast<std::size_t>(code % A);
                code /= A;
            }
    };

    std::vector<double> root_values(static_cast<std::size_t>(total));
    MarkovPolicy policy(H, S);
    for (std::uint64_t index = 0; index < total; ++index) {
        decode(index, policy);
        const ValueTable v = evaluate_policy(mdp, policy);
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t s = 0; s < S; ++s)
                out.optimal_values(h, s) = std::max(out.optimal_values(h, s), v(h, s));
        root_values[index] = v(0, mdp.initial_state());
        out.best_value = std::max(out.best_value, root_values[index]);
    }
    out.policies_enumerated = total;
    for (std::uint64_t index = 0; index < total; ++index)
        if (out.best_value - root_values[index] <= kValueTolerance) {
            decode(index, policy);
            out.witnesses.push_back(policy);
        }
    return out;
}

} // namespace regret_lab
