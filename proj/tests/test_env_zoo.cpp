#include "regret_lab/env_zoo.hpp"

#include <gtest/gtest.h>

using namespace regret_lab;

TEST(EnvZoo, BanditGap) {
    EnvSpec spec;
    spec.kind = EnvKind::Bandit;
    spec.S = 1;
    spec.A = 2;
    spec.H = 1;
    spec.rewards = {1.0, 0.3};
    const TabularMDP m = generate(spec);
    EXPECT_EQ(m.horizon(), 1u);
    EXPECT_NEAR(backward_induction(m).gaps.gap_star, 0.7, 1e-15);

    spec.rewards.clear();
    spec.A = 4;
    const TabularMDP defaults = generate(spec);
    EXPECT_EQ(defaults.reward(0, 0, 0), 1.0);
    EXPECT_NEAR(defaults.reward(0, 0, 3), 0.3, 1e-15);
    EXPECT_NEAR(backward_induction(defaults).gaps.gap_star, 0.7 / 3.0, 1e-12);
}

TEST(EnvZoo, ChainDefault) {
    EnvSpec spec;
    spec.kind = EnvKind::Chain;
    for (std::size_t H : {2, 3, 5}) {
        spec.H = H;
        const TabularMDP m = generate(spec);
        const OptimalSolution opt = backward_induction(m);
        EXPECT_NEAR(opt.gaps.gap_star, 0.7, 1e-12) << "H = " << H;
        EXPECT_NEAR(enumerate_policies_oracle(m).best_value, opt.values(0, 0), 1e-12);
    }
    spec.H = 2;
    spec.rewards = {0.5, 0.1, 0.9};
    EXPECT_NEAR(backward_induction(generate(spec)).values(0, 0), 0.9, 1e-15);
    spec.S = 3;
    EXPECT_THROW(generate(spec), DomainError);
}

TEST(EnvZoo, RandomGapDeterministicAndAboveFloor) {
    EnvSpec spec{EnvKind::RandomGap, 2, 2, 2, 0.2, 1, {}};
    const TabularMDP a = generate(spec);
    const TabularMDP b = generate(spec);
    EXPECT_EQ(a, b);
    EXPECT_GE(backward_induction(a).gaps.gap_star, 0.2);

    std::size_t differing = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        spec.seed = seed;
        spec.S = 3;
        spec.H = 3;
        const TabularMDP m = generate(spec);
        EXPECT_NO_THROW(m.validate());
        EXPECT_GE(backward_induction(m).gaps.gap_star, spec.gap_floor);
        spec.seed = seed + 1000;
        differing += generate(spec).kernel() != m.kernel() ? 1 : 0;
    }
    EXPECT_EQ(differing, 20u);
}

TEST(EnvZoo, RejectionGuard) {
    EnvSpec spec{EnvKind::RandomGap, 3, 3, 3, 0.99, 1, {}};
    try {
        generate(spec);
        FAIL() << "expected GenerationError";
    } catch (const GenerationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("10000 attempts"), std::string::npos) << msg;
        EXPECT_NE(msg.find("best gap"), std::string::npos) << msg;
    }
    spec.gap_floor = 0.0;
    EXPECT_THROW(generate(spec), DomainError);
}

TEST(EnvZoo, SpecJson) {
    const EnvSpec spec{EnvKind::Bandit, 2, 3, 2, 0.1, 9, {0.9, 0.5, 0.2}};
    const EnvSpec back = env_spec_from_json(env_spec_to_json(spec));
    EXPECT_EQ(generate(back), generate(spec));
    EXPECT_THROW(env_spec_from_json(nlohmann::json{{"kind", "MAZE"}}), DomainError);
    EXPECT_THROW(env_spec_from_json(nlohmann::json{{"S", 2}}), DomainError);
}
