#include "regret_lab/agent.hpp"
#include "regret_lab/env_zoo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace regret_lab;

namespace {

EpisodeRecord trajectory(std::vector<std::size_t> states, std::vector<std::size_t> actions) {
    EpisodeRecord e;
    e.states = std::move(states);
    e.actions = std::move(actions);
    return e;
}

} // namespace

TEST(Bonus, Examples) {
    const BonusConfig kd{BonusSchedule::KD, 1.0, 0.5, 16};
    EXPECT_TRUE(std::isinf(bonus(kd, 0, 0, 0, 2, 3)));
    EXPECT_EQ(bonus(kd, 2, 5, 7, 2, 3), 0.0);
    const double ln2 = std::numbers::ln2;
    EXPECT_NEAR(bonus(kd, 0, 0, 4, 2, 3), 2.0 * std::sqrt((ln2 + 8.0) / 4.0), 1e-14);
    EXPECT_NEAR(bonus(kd, 0, 0, 4, 2, 3), 2.948, 5e-4);

    const BonusConfig ki{BonusSchedule::KI, 1.0, 0.5, 16};
    EXPECT_NEAR(bonus(ki, 0, 3, 1, 2, 3), 2.0 * std::sqrt(ln2 + 2.0), 1e-14);
    EXPECT_NEAR(bonus(ki, 0, 3, 1, 2, 3), 3.2822, 5e-5);
}

TEST(Bonus, Monotonicity) {
    for (BonusSchedule schedule : {BonusSchedule::KD, BonusSchedule::KI})
        for (double alpha : {0.0, 0.3, 1.0}) {
            const BonusConfig cfg{schedule, alpha, 0.7, 50};
            for (std::uint64_t n = 1; n < 200; ++n)
                ASSERT_LE(bonus(cfg, 0, 10, n + 1, 3, 4), bonus(cfg, 0, 10, n, 3, 4));
            for (std::uint64_t k = 0; k < 49; ++k) {
                ASSERT_GE(bonus(cfg, 1, k, 5, 3, 4), 0.0);
                if (schedule == BonusSchedule::KI)
                    ASSERT_GE(bonus(cfg, 1, k + 1, 5, 3, 4), bonus(cfg, 1, k, 5, 3, 4));
            }
        }
}

TEST(BonusConfig, Validation) {
    EXPECT_THROW((BonusConfig{BonusSchedule::KD, 1.5, 1.0, 1}.validate()), DomainError);
    EXPECT_THROW((BonusConfig{BonusSchedule::KD, 0.5, 0.0, 1}.validate()), DomainError);
    EXPECT_THROW((BonusConfig{BonusSchedule::KD, 0.5, 1.0, 0}.validate()), DomainError);
    EXPECT_EQ(parse_schedule("KI"), BonusSchedule::KI);
    EXPECT_THROW(parse_schedule("XX"), DomainError);
}

TEST(Plan, FirstEpisodeIsFullyClipped) {
    Rng rng(5);
    const TabularMDP m = random_mdp(3, 2, 4, rng);
    const AgentState state(m);
    const OptimisticPlan p = plan(m, state, {BonusSchedule::KD, 0.5, 1.0, 10});
    for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t a = 0; a < 2; ++a)
                EXPECT_EQ(p.q_values(h, s, a), static_cast<double>(4 - h));
            EXPECT_EQ(p.policy(h, s), 0u);
        }
    EXPECT_EQ(p.values(0, 0), 4.0);
    EXPECT_GE(p.values(0, 0), backward_induction(m).values(0, 0));
}

TEST(Plan, HorizonOne) {
    TabularMDP m(1, 2, 1);
    m.reward(0, 0, 0) = 0.4;
    m.reward(0, 0, 1) = 0.9;
    AgentState state(m);
    const BonusConfig cfg{BonusSchedule::KD, 0.5, 1.0, 5};
    EXPECT_EQ(plan(m, state, cfg).q_values(0, 0, 1), 1.0);
    state.record(trajectory({0}, {1}));
    // b at the last stage is 0 once visited; the unvisited action stays at 1.
    const OptimisticPlan p = plan(m, state, cfg);
    EXPECT_EQ(p.q_values(0, 0, 1), 0.9);
    EXPECT_EQ(p.q_values(0, 0, 0), 1.0);
    EXPECT_EQ(p.policy(0, 0), 0u);
}

TEST(Plan, ConvergesWithinBonusSum) {
    TabularMDP m(1, 1, 3);
    for (std::size_t h = 0; h < 3; ++h)
        m.reward(h, 0, 0) = 0.3;
    AgentState state(m);
    const BonusConfig cfg{BonusSchedule::KD, 0.0, 0.01, 1};
    for (int k = 0; k < 100000; ++k)
        state.record(trajectory({0, 0, 0}, {0, 0, 0}));
    const OptimisticPlan p = plan(m, state, cfg);
    double bonus_sum = 0.0;
    for (std::size_t h = 0; h < 3; ++h)
        bonus_sum += bonus(cfg, h, state.episode_index(), state.pair_count(h, 0, 0), 1, 3);
    EXPECT_LT(bonus_sum, 0.02);
    EXPECT_GE(p.values(0, 0), 0.9 - 1e-12);
    EXPECT_LE(p.values(0, 0), 0.9 + bonus_sum + 1e-12);
}

TEST(Update, Examples) {
    const TabularMDP m = make_chain(2);
    AgentState state(m);
    state = update(state, trajectory({0, 1}, {1, 0}));
    EXPECT_EQ(state.episode_index(), 1u);
    std::uint64_t ones = 0;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t a = 0; a < 2; ++a)
            ones += state.pair_count(0, s, a);
    EXPECT_EQ(ones, 1u);
    EXPECT_EQ(state.pair_count(0, 0, 1), 1u);
    EXPECT_EQ(state.empirical_row(0, 0, 1)[0], 0.0);
    EXPECT_EQ(state.empirical_row(0, 0, 1)[1], 1.0);
    EXPECT_EQ(state.empirical_row(0, 0, 0)[0], 0.5);

    TabularMDP coin(2, 1, 2);
    AgentState counts(coin);
    for (std::size_t next : {0, 0, 1, 0})
        counts.record(trajectory({0, next}, {0, 0}));
    EXPECT_EQ(counts.empirical_row(0, 0, 0)[0], 0.75);
    EXPECT_EQ(counts.empirical_row(0, 0, 0)[1], 0.25);
    EXPECT_EQ(counts.empirical_row(0, 1, 0)[0], 0.5);
    EXPECT_NO_THROW(counts.check_invariants());

    EXPECT_THROW(counts.record(trajectory({0}, {0})), ShapeError);
    EXPECT_THROW(counts.record(trajectory({0, 2}, {0, 0})), ShapeError);
}

TEST(ActAndStep, Examples) {
    const TabularMDP chain = make_chain(2);
    const OptimalSolution opt = backward_induction(chain);
    Rng a(1), b(999);
    MarkovPolicy stay(2, 2);
    const EpisodeRecord ea = act_and_step(chain, stay, opt, a);
    const EpisodeRecord eb = act_and_step(chain, stay, opt, b);
    EXPECT_EQ(ea.states, eb.states);
    EXPECT_EQ(ea.states[0], chain.initial_state());
    EXPECT_NEAR(ea.regret, 0.7, 1e-12);
    EXPECT_FALSE(ea.policy_was_optimal);

    const EpisodeRecord best = act_and_step(chain, opt.greedy, opt, a);
    EXPECT_NEAR(best.regret, 0.0, 1e-9);
    EXPECT_TRUE(best.policy_was_optimal);
}

TEST(ActAndStep, DegenerateRowIsASamplingError) {
    Rng rng(0);
    const double row[] = {0.2, 0.3};
    EXPECT_THROW(sample_next_state(row, rng), SamplingError);
    const double fine[] = {0.0, 1.0 - 1e-12};
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(sample_next_state(fine, rng), 1u);
}

TEST(Properties, CountsClippingAndDeterminism) {
    const TabularMDP m = generate(EnvSpec{EnvKind::RandomGap, 3, 2, 3, 0.05, 17, {}});
    const OptimalSolution opt = backward_induction(m);
    for (BonusSchedule schedule : {BonusSchedule::KD, BonusSchedule::KI}) {
        const BonusConfig cfg{schedule, 0.5, 1.0, 300};
        AgentState first(m), second(m);
        Rng r1(42), r2(42);
        for (std::size_t k = 0; k < cfg.total_episodes; ++k) {
            const OptimisticPlan p1 = plan(m, first, cfg);
            const OptimisticPlan p2 = plan(m, second, cfg);
            for (std::size_t h = 0; h < 3; ++h)
                for (std::size_t s = 0; s < 3; ++s)
                    for (std::size_t a = 0; a < 2; ++a) {
                        ASSERT_LE(p1.q_values(h, s, a), static_cast<double>(3 - h));
                        ASSERT_GE(p1.q_values(h, s, a), 0.0);
                    }
            const EpisodeRecord e1 = act_and_step(m, p1.policy, opt, r1);
            const EpisodeRecord e2 = act_and_step(m, p2.policy, opt, r2);
            ASSERT_EQ(e1.states, e2.states);
            ASSERT_GE(e1.regret, -1e-9);
            first.record(e1);
            second.record(e2);
            ASSERT_NO_THROW(first.check_invariants());
        }
        EXPECT_EQ(first.triple_counts(), second.triple_counts());
        EXPECT_EQ(first.pair_counts(), second.pair_counts());
    }
}
