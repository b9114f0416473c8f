#include "regret_lab/env_zoo.hpp"
#include "regret_lab/mdp.hpp"
#include "regret_lab/mdp_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace regret_lab;

namespace {

// Two-state deterministic chain, H = 2, built by hand.
TabularMDP hand_chain() {
    TabularMDP m(2, 2, 2);
    m.reward(0, 0, 0) = 0.2;
    m.reward(0, 0, 1) = 0.0;
    m.reward(0, 1, 0) = 1.0;
    m.reward(0, 1, 1) = 1.0;
    const double stay[] = {1.0, 0.0}, move[] = {0.0, 1.0};
    std::copy(stay, stay + 2, m.row(0, 0, 0).begin());
    std::copy(move, move + 2, m.row(0, 0, 1).begin());
    std::copy(move, move + 2, m.row(0, 1, 0).begin());
    std::copy(move, move + 2, m.row(0, 1, 1).begin());
    m.reward(1, 0, 0) = m.reward(1, 0, 1) = 0.1;
    m.reward(1, 1, 0) = m.reward(1, 1, 1) = 1.0;
    m.validate();
    return m;
}

TabularMDP constant_rewards(std::size_t S, std::size_t A, std::size_t H, double r) {
    TabularMDP m(S, A, H);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                m.reward(h, s, a) = r;
    return m;
}

/// Gap computed only from the enumeration oracle's entrywise-max values.
double oracle_gap(const TabularMDP& m, const EnumerationResult& e) {
    double gap = kInfinity;
    for (std::size_t h = 0; h < m.horizon(); ++h)
        for (std::size_t s = 0; s < m.num_states(); ++s) {
            std::vector<double> q(m.num_actions());
            for (std::size_t a = 0; a < m.num_actions(); ++a)
                q[a] = bellman_backup(m, e.optimal_values, h, s, a);
            const double best = *std::max_element(q.begin(), q.end());
            for (double v : q)
                if (best - v > 1e-9)
                    gap = std::min(gap, best - v);
        }
    return gap;
}

} // namespace

TEST(TabularMDP, RejectsInvalidModels) {
    EXPECT_THROW(TabularMDP(0, 1, 1), ModelError);
    EXPECT_THROW(TabularMDP(2, 1, 1, 2), ModelError);
    TabularMDP m(2, 1, 2);
    m.reward(1, 1, 0) = 1.5;
    EXPECT_THROW(m.validate(), ModelError);
    m.reward(1, 1, 0) = 0.5;
    m.row(0, 1, 0)[0] = 0.7;
    try {
        m.validate();
        FAIL() << "expected ModelError";
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find("P[0][1][0]"), std::string::npos);
    }
}

TEST(BackwardInduction, SingleActionAllOnes) {
    const TabularMDP m = constant_rewards(1, 1, 3, 1.0);
    const OptimalSolution opt = backward_induction(m);
    EXPECT_DOUBLE_EQ(opt.values(0, 0), 3.0);
    EXPECT_FALSE(opt.gaps.has_finite_gap());
    EXPECT_EQ(opt.gaps.inverse_gap(), 0.0);
}

TEST(BackwardInduction, OneStepBandit) {
    TabularMDP m(1, 2, 1);
    m.reward(0, 0, 0) = 1.0;
    m.reward(0, 0, 1) = 0.3;
    const OptimalSolution opt = backward_induction(m);
    EXPECT_DOUBLE_EQ(opt.values(0, 0), 1.0);
    EXPECT_EQ(opt.gaps.optimal_actions(0, 0), std::vector<std::size_t>{0});
    EXPECT_NEAR(opt.gaps.gap_star, 0.7, 1e-15);
}

TEST(BackwardInduction, ChainMatchesHandValues) {
    const TabularMDP m = hand_chain();
    const OptimalSolution opt = backward_induction(m);
    EXPECT_NEAR(opt.q_values(0, 0, 0), 0.3, 1e-15);
    EXPECT_NEAR(opt.q_values(0, 0, 1), 1.0, 1e-15);
    EXPECT_NEAR(opt.values(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(opt.gaps.gap_star, 0.7, 1e-12);
    EXPECT_EQ(enumerate_policies_oracle(m).best_value, 1.0);
    EXPECT_EQ(make_chain(2), m);
}

TEST(BackwardInduction, RejectsBadRowBeyondDpTolerance) {
    TabularMDP m(2, 1, 2);
    m.row(0, 0, 0)[0] = 0.5 + 1e-6;
    EXPECT_THROW(backward_induction(m), ModelError);
}

TEST(EvaluatePolicy, Examples) {
    const TabularMDP ones = constant_rewards(2, 2, 4, 1.0);
    MarkovPolicy any(4, 2);
    any(1, 0) = 1;
    any(3, 1) = 1;
    EXPECT_DOUBLE_EQ(evaluate_policy(ones, any)(0, 0), 4.0);

    const TabularMDP chain = hand_chain();
    MarkovPolicy stay(2, 2);
    EXPECT_NEAR(evaluate_policy(chain, stay)(0, 0), 0.3, 1e-15);

    const OptimalSolution opt = backward_induction(chain);
    const ValueTable v = evaluate_policy(chain, opt.greedy);
    for (std::size_t h = 0; h <= 2; ++h)
        for (std::size_t s = 0; s < 2; ++s)
            EXPECT_NEAR(v(h, s), opt.values(h, s), 1e-12);

    EXPECT_THROW(evaluate_policy(chain, MarkovPolicy(3, 2)), ShapeError);
    MarkovPolicy bad(2, 2);
    bad(0, 1) = 5;
    EXPECT_THROW(evaluate_policy(chain, bad), ShapeError);
}

TEST(IsOptimalPolicy, Examples) {
    const TabularMDP chain = hand_chain();
    const OptimalSolution opt = backward_induction(chain);
    EXPECT_TRUE(is_optimal_policy(opt.greedy, opt.gaps));
    MarkovPolicy stay = opt.greedy;
    stay(0, 0) = 0;
    EXPECT_FALSE(is_optimal_policy(stay, opt.gaps));

    const TabularMDP flat = constant_rewards(2, 3, 2, 0.4);
    const OptimalSolution flat_opt = backward_induction(flat);
    MarkovPolicy p(2, 2);
    for (std::size_t code = 0; code < 81; ++code) {
        std::size_t c = code;
        for (std::size_t h = 0; h < 2; ++h)
            for (std::size_t s = 0; s < 2; ++s, c /= 3)
                p(h, s) = c % 3;
        EXPECT_TRUE(is_optimal_policy(p, flat_opt.gaps));
    }
}

TEST(Span, Examples) {
    const double constant[] = {0.4, 0.4, 0.4};
    EXPECT_EQ(span(constant), 0.0);
    const double two[] = {0.1, 1.0};
    EXPECT_NEAR(span(two), 0.9, 1e-15);
    const OptimalSolution opt = backward_induction(hand_chain());
    EXPECT_NEAR(span(opt.values.stage(1)), 0.9, 1e-15);
    EXPECT_LE(span(opt.values.stage(1)), 1.0);
}

TEST(EnumerationOracle, Examples) {
    const EnumerationResult single = enumerate_policies_oracle(constant_rewards(3, 1, 2, 0.5));
    EXPECT_EQ(single.policies_enumerated, 1u);
    EXPECT_EQ(single.witnesses.size(), 1u);

    const EnumerationResult flat = enumerate_policies_oracle(constant_rewards(2, 2, 3, 0.7));
    EXPECT_EQ(flat.policies_enumerated, 64u);
    EXPECT_EQ(flat.witnesses.size(), 64u);

    try {
        enumerate_policies_oracle(TabularMDP(4, 4, 4));
        FAIL() << "expected RefusalError";
    } catch (const RefusalError& e) {
        EXPECT_NE(std::string(e.what()).find("guard"), std::string::npos);
    }
}

TEST(Properties, RandomInstancesAgreeWithEnumeration) {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t S = 1 + rng.next_u64() % 3;
        const std::size_t A = 1 + rng.next_u64() % 2;
        const std::size_t H = 1 + rng.next_u64() % 3;
        const TabularMDP m = random_mdp(S, A, H, rng);
        const OptimalSolution opt = backward_induction(m);
        const EnumerationResult e = enumerate_policies_oracle(m);
        ASSERT_NEAR(opt.values(0, 0), e.best_value, 1e-9);

        const double gap = oracle_gap(m, e);
        if (std::isfinite(gap))
            ASSERT_NEAR(opt.gaps.gap_star, gap, 1e-9);
        else
            ASSERT_FALSE(opt.gaps.has_finite_gap());

        for (std::size_t h = 0; h < H; ++h) {
            const double cap = static_cast<double>(H - h);
            ASSERT_LE(span(opt.values.stage(h + 1)), cap - 1.0 + 1e-12);
            for (std::size_t s = 0; s < S; ++s) {
                ASSERT_NEAR(opt.values(h, s), e.optimal_values(h, s), 1e-9);
                ASSERT_GE(opt.values(h, s), 0.0);
                ASSERT_LE(opt.values(h, s), cap + 1e-12);
                for (std::size_t a = 0; a < A; ++a) {
                    const double q = opt.q_values(h, s, a);
                    ASSERT_GE(q, 0.0);
                    ASSERT_LE(q, cap + 1e-12);
                    if (!opt.gaps.is_optimal_action(h, s, a))
                        ASSERT_GE(opt.values(h, s) - q, opt.gaps.gap_star - 1e-9);
                }
            }
        }
        for (const MarkovPolicy& p : e.witnesses) {
            const ValueTable v = evaluate_policy(m, p);
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t s = 0; s < S; ++s)
                    ASSERT_LE(v(h, s), opt.values(h, s) + 1e-9);
        }
    }
}

TEST(ReachableStates, Chain) {
    const auto reach = reachable_states(hand_chain());
    EXPECT_EQ(reach, (std::vector<bool>{true, false, true, true}));
}

TEST(MdpFile, RoundTripAndErrors) {
    Rng rng(3);
    const TabularMDP m = random_mdp(3, 2, 3, rng);
    const auto path = std::filesystem::temp_directory_path() / "regret_lab_mdp_roundtrip.json";
    save_mdp(m, path);
    EXPECT_EQ(load_mdp(path), m);
    std::filesystem::remove(path);

    auto doc = mdp_to_json(m);
    doc["kernel"][1][2][0][1] = -0.25;
    try {
        mdp_from_json(doc);
        FAIL() << "expected ModelError";
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find("[1][2][0][1]"), std::string::npos) << e.what();
    }
    doc = mdp_to_json(m);
    doc["rewards"][0].erase(1);
    EXPECT_THROW(mdp_from_json(doc), ModelError);
    doc = mdp_to_json(m);
    doc.erase("s0");
    EXPECT_THROW(mdp_from_json(doc), ModelError);
    EXPECT_THROW(load_mdp("/nonexistent/regret_lab.json"), IoError);
}
