#pragma once

#include "regret_lab/errors.hpp"
#include "regret_lab/mdp.hpp"
#include "regret_lab/random.hpp"

#include <json.hpp>

#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace regret_lab {

enum class EnvKind { RandomGap, Chain, Bandit };

inline std::string_view to_string(EnvKind kind) noexcept {
    switch (kind) {
    case EnvKind::RandomGap: return "RANDOM_GAP";
    case EnvKind::Chain: return "CHAIN";
    case EnvKind::Bandit: return "BANDIT";
    }
    return "?";
}

inline EnvKind parse_env_kind(std::string_view text) {
    if (text == "RANDOM_GAP")
        return EnvKind::RandomGap;
    if (text == "CHAIN")
        return EnvKind::Chain;
    if (text == "BANDIT")
        return EnvKind::Bandit;
    throw DomainError("unknown environment kind '" + std::string(text) +
                      "' (expected RANDOM_GAP, CHAIN or BANDIT)");
}

inline constexpr std::size_t kRejectionAttempts = 10'000;

/// Default CHAIN rewards: staying at the start, start state at the last stage, goal.
inline constexpr double kChainStayReward = 0.2;
inline constexpr double kChainFinalStartReward = 0.1;
inline constexpr double kChainGoalReward = 1.0;

/**
 * Instance recipe.
 *
 * RANDOM_GAP: random model redrawn until gap* >= gap_floor.
 * CHAIN: two states, two actions, H >= 2. `rewards` may override
 *        {stay, final_start, goal}.
 * BANDIT: A arms at the last stage of every state; earlier stages (if H > 1)
 *         pay nothing and move uniformly. `rewards` may override the arm
 *         values, which default to 1.0 descending evenly to 0.3.
 */
struct EnvSpec {
    EnvKind kind = EnvKind::Chain;
    std::size_t S = 2, A = 2, H = 2;
    double gap_floor = 0.1;
    std::uint64_t seed = 0;
    std::vector<double> rewards;

    void validate() const {
        if (S == 0 || A == 0 || H == 0)
            throw DomainError("EnvSpec: S, A and H must be positive");
        if (kind == EnvKind::RandomGap && !(gap_floor > 0.0))
            throw DomainError("EnvSpec: RANDOM_GAP needs gap_floor > 0");
        if (kind == EnvKind::Chain) {
            if (S != 2 || A != 2 || H < 2)
                throw DomainError("EnvSpec: CHAIN needs S = 2, A = 2 and H >= 2");
            if (!rewards.empty() && rewards.size() != 3)
                throw DomainError("EnvSpec: CHAIN rewards are {stay, final_start, goal}");
        }
        if (kind == EnvKind::Bandit && !rewards.empty() && rewards.size() != A)
            throw DomainError("EnvSpec: BANDIT needs one reward per arm");
    }
};

/// Rewards uniform on [0,1]; kernel rows are normalized unit-rate exponentials.
inline TabularMDP random_mdp(std::size_t S, std::size_t A, std::size_t H, Rng& rng,
                             std::size_t initial_state = 0) {
    TabularMDP mdp(S, A, H, initial_state);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                mdp.reward(h, s, a) = rng.uniform();
    for (std::size_t h = 0; h + 1 < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                auto row = mdp.row(h, s, a);
                double total = 0.0;
                for (auto& p : row) {
                    p = rng.exponential();
                    total += p;
                }
                for (auto& p : row)
                    p /= total;
            }
    return mdp;
}

inline TabularMDP make_chain(std::size_t H, double stay = kChainStayReward,
                             double final_start = kChainFinalStartReward,
                             double goal = kChainGoalReward) {
    constexpr std::size_t start = 0, target = 1;
    TabularMDP mdp(2, 2, H, start);
    for (std::size_t h = 0; h + 1 < H; ++h) {
        mdp.reward(h, start, 0) = stay;
        mdp.reward(h, start, 1) = 0.0;
        mdp.reward(h, target, 0) = goal;
        mdp.reward(h, target, 1) = goal;
        for (std::size_t a = 0; a < 2; ++a) {
            auto from_start = mdp.row(h, start, a);
            from_start[start] = a == 0 ? 1.0 : 0.0;
            from_start[target] = a == 0 ? 0.0 : 1.0;
            auto from_target = mdp.row(h, target, a);
            from_target[start] = 0.0;
            from_target[target] = 1.0;
        }
    }
    for (std::size_t a = 0; a < 2; ++a) {
        mdp.reward(H - 1, start, a) = final_start;
        mdp.reward(H - 1, target, a) = goal;
    }
    mdp.validate();
    return mdp;
}

inline std::vector<double> default_arm_rewards(std::size_t A) {
    std::vector<double> arms(A, 1.0);
    for (std::size_t a = 1; a < A; ++a)
        arms[a] = 1.0 - 0.7 * static_cast<double>(a) / static_cast<double>(A - 1);
    return arms;
}

inline TabularMDP make_bandit(std::size_t S, std::size_t H, const std::vector<double>& arms) {
    TabularMDP mdp(S, arms.size(), H, 0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < arms.size(); ++a)
            mdp.reward(H - 1, s, a) = arms[a];
    mdp.validate();
    return mdp;
}

/// Deterministic in spec.seed.
inline TabularMDP generate(const EnvSpec& spec) {
    spec.validate();
    switch (spec.kind) {
    case EnvKind::Chain:
        if (spec.rewards.empty())
            return make_chain(spec.H);
        return make_chain(spec.H, spec.rewards[0], spec.rewards[1], spec.rewards[2]);
    case EnvKind::Bandit:
        return make_bandit(spec.S, spec.H,
                           spec.rewards.empty() ? default_arm_rewards(spec.A) : spec.rewards);
    case EnvKind::RandomGap: {
        Rng rng(spec.seed);
        double best_gap = 0.0;
        for (std::size_t attempt = 1; attempt <= kRejectionAttempts; ++attempt) {
            TabularMDP mdp = random_mdp(spec.S, spec.A, spec.H, rng);
            const double gap = backward_induction(mdp).gaps.gap_star;
            if (gap >= spec.gap_floor)
                return mdp;
            best_gap = std::max(best_gap, gap);
        }
        std::ostringstream msg;
        msg << "RANDOM_GAP: no instance with gap* >= " << spec.gap_floor << " after "
            << kRejectionAttempts << " attempts (best gap seen " << best_gap << ")";
        throw GenerationError(msg.str());
    }
    }
    throw DomainError("generate: unknown kind");
}

inline nlohmann::json env_spec_to_json(const EnvSpec& spec) {
    nlohmann::json j{{"kind", to_string(spec.kind)}, {"S", spec.S},
                     {"A", spec.A},                  {"H", spec.H},
                     {"gap_floor", spec.gap_floor},  {"seed", spec.seed}};
    if (!spec.rewards.empty())
        j["rewards"] = spec.rewards;
    return j;
}

inline EnvSpec env_spec_from_json(const nlohmann::json& j) {
    EnvSpec spec;
    try {
        spec.kind = parse_env_kind(j.at("kind").get<std::string>());
        spec.S = j.value("S", spec.S);
        spec.A = j.value("A", spec.A);
        spec.H = j.value("H", spec.H);
        spec.gap_floor = j.value("gap_floor", spec.gap_floor);
        spec.seed = j.value("seed", spec.seed);
        if (j.contains("rewards"))
            spec.rewards = j.at("rewards").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("env spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

} // namespace regret_lab
