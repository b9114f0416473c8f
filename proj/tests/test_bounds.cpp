#include "regret_lab/bounds.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace regret_lab;

namespace {

BoundInputs inputs(std::size_t S, std::size_t A, std::size_t H, std::size_t K, double alpha, double mu,
                   double gamma, double gap, BonusSchedule schedule = BonusSchedule::KD) {
    BoundInputs in;
    in.S = S;
    in.A = A;
    in.H = H;
    in.K = K;
    in.alpha = alpha;
    in.mu = mu;
    in.gamma = gamma;
    in.gap_star = gap;
    in.schedule = schedule;
    return in;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

const double ln2 = std::numbers::ln2;

} // namespace

TEST(MK, Examples) {
    EXPECT_EQ(compute_m_K(inputs(3, 2, 1, 50, 0.5, 1, 0, 0.2)), 0.0);
    EXPECT_EQ(compute_m_K(inputs(3, 2, 4, 50, 0.5, 1, 0, kInfinity)), 0.0);
    const double mk = compute_m_K(inputs(2, 2, 2, 100, 0.0, 1, 0, 0.5));
    EXPECT_NEAR(mk, 48.0 * 4.0 * (2.0 * ln2 + 2.0) / 1.5, 1e-10);
    EXPECT_LT(rel(mk, 433.45), 5e-5);
    EXPECT_THROW(compute_m_K(inputs(2, 2, 2, 1, 0, 1, 0, 0.0)), DomainError);
    EXPECT_THROW(compute_m_K(inputs(2, 2, 2, 1, 0, 1, 0, -1.0)), DomainError);
}

TEST(DeltaK, Examples) {
    EXPECT_EQ(compute_delta_K(inputs(2, 2, 2, 10, 1.0, 50, 0, 0.5)), 0.0);
    const double d = compute_delta_K(inputs(2, 2, 2, 100, 0.5, 1, 0, 0.5));
    EXPECT_NEAR(d, 800.0 * std::exp(-20.0), 1e-20);
    EXPECT_LT(rel(d, 1.649e-6), 5e-4);
    const double ki = compute_delta_K(inputs(2, 3, 4, 100, 0.5, 1.3, 0, 0.5, BonusSchedule::KI));
    EXPECT_NEAR(ki, 2 * 3 * 4 * 100 * std::exp(-2.6), 1e-12);
}

TEST(NBar, Examples) {
    const BoundInputs in = inputs(2, 2, 3, 100, 0.0, 1, 0, 0.5);
    EXPECT_EQ(compute_n_bar(in, 2), 0.0);
    const double n0 = compute_n_bar(in, 0);
    EXPECT_NEAR(n0, (4 * ln2 + 4) * 144 / 0.25, 1e-9);
    EXPECT_LT(rel(n0, 3901.0), 5e-5);
    BoundInputs doubled = in;
    doubled.gap_star = 1.0;
    EXPECT_NEAR(compute_n_bar(doubled, 0), n0 / 4.0, 1e-9);
    EXPECT_THROW(compute_n_bar(inputs(2, 2, 3, 1, 0, 1, 0, kInfinity), 0), DomainError);
    EXPECT_THROW(compute_n_bar(in, 3), DomainError);
}

TEST(TailBound, Examples) {
    const BoundInputs in = inputs(2, 2, 2, 100, 0.0, 1, 0, 0.5);
    EXPECT_EQ(tail_bound(in, 0.0), 1.0);
    const double mk = compute_m_K(in);
    EXPECT_EQ(tail_bound(in, 2.0 + mk), 1.0);
    EXPECT_GE(tail_bound_raw(in, 2.0 + mk), 1.0);
    EXPECT_THROW(tail_bound(in, -1.0), DomainError);

    // exp(-120^2 / (2 * 8 * 100)) with the delta_K of the alpha = 0.5 example.
    TailComponents t{2, 100, 1, mk, compute_delta_K(inputs(2, 2, 2, 100, 0.5, 1, 0, 0.5))};
    const double v = t.clipped(mk + 2.0 + 120.0);
    EXPECT_NEAR(v, std::exp(-9.0) + 800.0 * std::exp(-20.0), 1e-15);
    EXPECT_LT(rel(v, 1.251e-4), 5e-4);
}

TEST(TailBound, NonIncreasingAndClipped) {
    const BoundInputs in = inputs(3, 2, 3, 1000, 0.5, 0.5, 0.3, 0.4);
    double prev = 1.0;
    for (double x = 0.0; x < 1e6; x = x * 1.05 + 1.0) {
        const double v = tail_bound(in, x);
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
        ASSERT_LE(v, prev);
        prev = v;
    }
}

TEST(ExpectationBound, Examples) {
    const BoundInputs g1 = inputs(2, 2, 3, 40, 0.5, 1, 1.0, 0.5);
    EXPECT_NEAR(expectation_bound(g1), compute_m_K(g1) + 3.0 * 40.0, 1e-9);

    const BoundInputs sentinel = inputs(2, 2, 3, 40, 0.5, 1, 0.0, kInfinity);
    EXPECT_NEAR(expectation_bound(sentinel), 3.0 + 2 * 9 * 39 * compute_delta_K(sentinel), 1e-12);

    // m_K at alpha = 0 composed with delta_K at alpha = 0.5.
    const double mk = compute_m_K(inputs(2, 2, 2, 100, 0.0, 1, 0, 0.5));
    const double dk = compute_delta_K(inputs(2, 2, 2, 100, 0.5, 1, 0, 0.5));
    const double composed = mk + 2.0 + 8.0 * 99.0 * dk;
    EXPECT_LT(rel(composed, 435.45), 5e-5);
}

TEST(BurnIn, ExactCorners) {
    for (std::size_t K : {1, 7, 100, 12345}) {
        EXPECT_EQ(burn_in_episodes(K, 0.0), 1u);
        EXPECT_EQ(burn_in_episodes(K, 1.0), K);
    }
    EXPECT_EQ(burn_in_episodes(100, 0.5), 10u);
    EXPECT_EQ(burn_in_episodes(1000, 1.0 / 3.0), 10u);
    EXPECT_EQ(burn_in_episodes(101, 0.5), 11u);
}

TEST(Regimes, Examples) {
    BoundInputs kd = inputs(2, 2, 4, 900, 1.0, 1, 0, 0.5);
    EXPECT_NEAR(regime_threshold(kd), 8.0 * 900.0, 1e-9);
    BoundInputs ki = inputs(2, 2, 4, 900, 0.0, 1, 0, 0.5, BonusSchedule::KI);
    kd.alpha = 0.0;
    EXPECT_NEAR(regime_threshold(ki), 8.0 * 30.0, 1e-9);
    EXPECT_NEAR(regime_threshold(ki), regime_threshold(kd), 1e-9);
    const double t = regime_threshold(inputs(2, 2, 2, 10000, 0.5, 1, 0, 0.5));
    EXPECT_LT(rel(t, 2828.4), 5e-5);

    const RegimeClassification at_zero = classify_regimes(ki, 0.0);
    EXPECT_EQ(at_zero.gamma, 0.0);
    EXPECT_EQ(at_zero.regime, TailRegime::BelowBaseline);
    EXPECT_EQ(classify_regimes(kd, 1e9).regime, TailRegime::SubWeibull);
    EXPECT_NEAR(adaptive_gamma(100, 2, 4.0 * 10.0), 0.5, 1e-15);
    EXPECT_EQ(adaptive_gamma(100, 2, 1e9), 1.0);
}

TEST(Properties, MonotoneInMuAndScheduleAgreement) {
    for (double mu : {0.25, 0.5, 1.0, 2.0}) {
        const BoundInputs lo = inputs(3, 2, 3, 200, 0.5, mu, 0.5, 0.3);
        BoundInputs hi = lo;
        hi.mu = 2.0 * mu;
        EXPECT_LT(compute_m_K(lo), compute_m_K(hi));
        EXPECT_LT(compute_n_bar(lo, 0), compute_n_bar(hi, 0));
        EXPECT_GT(compute_delta_K(lo), compute_delta_K(hi));
        BoundInputs kd = lo, ki = lo;
        kd.gamma = ki.gamma = 1.0;
        ki.schedule = BonusSchedule::KI;
        EXPECT_EQ(compute_delta_K(kd), compute_delta_K(ki));
    }
    // Smaller gap, larger bound past the baseline.
    const BoundInputs wide = inputs(2, 2, 2, 100, 0.0, 1, 0, 0.8);
    BoundInputs narrow = wide;
    narrow.gap_star = 0.4;
    for (double x : {300.0, 500.0, 800.0, 2000.0})
        EXPECT_LE(tail_bound(wide, x), tail_bound(narrow, x));
}

TEST(Report, Fields) {
    const BoundReport r = make_bound_report(inputs(2, 2, 3, 100, 0.5, 1, 0.5, 0.5));
    EXPECT_EQ(r.burn_in_episodes, 10u);
    EXPECT_EQ(r.burn_in, 30.0);
    ASSERT_TRUE(r.n_bar_available);
    EXPECT_EQ(r.n_bar.size(), 3u);
    EXPECT_EQ(r.n_bar[2], 0.0);
    EXPECT_EQ(r.tail().clipped(0.0), 1.0);
    const BoundReport degenerate = make_bound_report(inputs(2, 2, 3, 100, 0.5, 1, 0.0, kInfinity));
    EXPECT_FALSE(degenerate.n_bar_available);
    EXPECT_EQ(degenerate.m_K, 0.0);
    EXPECT_THROW(make_bound_report(inputs(2, 2, 3, 100, 1.5, 1, 0.0, 1.0)), DomainError);
}
