#pragma once

#include "regret_lab/agent.hpp"
#include "regret_lab/errors.hpp"
#include "regret_lab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace regret_lab {

/// Parameters every closed-form bound depends on.
struct BoundInputs {
    std::size_t S = 1, A = 1, H = 1, K = 1;
    double alpha = 0.5;
    double mu = 1.0;
    /// Burn-in exponent; an analysis parameter, never seen by the agent.
    double gamma = 0.0;
    /// +infinity encodes "every action optimal everywhere".
    double gap_star = kInfinity;
    BonusSchedule schedule = BonusSchedule::KD;

    void validate() const {
        if (S == 0 || A == 0 || H == 0 || K == 0)
            throw DomainError("BoundInputs: S, A, H and K must be positive");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw DomainError("BoundInputs: alpha must lie in [0,1]");
        if (!(gamma >= 0.0 && gamma <= 1.0))
            throw DomainError("BoundInputs: gamma must lie in [0,1]");
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw DomainError("BoundInputs: mu must be positive");
        if (!(gap_star > 0.0))
            throw DomainError("BoundInputs: gap_star must be positive (or +infinity)");
    }
};

inline BoundInputs make_bound_inputs(const TabularMDP& mdp, const BonusConfig& cfg, double gamma,
                                     double gap_star) {
    BoundInputs in;
    in.S = mdp.num_states();
    in.A = mdp.num_actions();
    in.H = mdp.horizon();
    in.K = cfg.total_episodes;
    in.alpha = cfg.alpha;
    in.mu = cfg.mu;
    in.gamma = gamma;
    in.gap_star = gap_star;
    in.schedule = cfg.schedule;
    return in;
}

/**
 * ceil(K^gamma), exact at gamma = 0 and 1. Elsewhere the power is shrunk by a
 * relative 1e-12 before rounding up so that a power which should be an integer
 * but lands just above it does not gain an extra episode.
 */
inline std::uint64_t burn_in_episodes(std::size_t K, double gamma) {
    if (gamma == 0.0)
        return 1;
    if (gamma == 1.0)
        return K;
    const double v = std::pow(static_cast<double>(K), gamma);
    return static_cast<std::uint64_t>(std::ceil(v * (1.0 - 1e-12)));
}

/// Baseline regret level 4H^2(H-1)(2H-1)SA(S ln2 + 2 mu K^alpha) / (3 gap*).
inline double compute_m_K(const BoundInputs& in) {
    if (std::isnan(in.gap_star) || in.gap_star <= 0.0)
        throw DomainError("compute_m_K: gap_star must be positive");
    if (!std::isfinite(in.gap_star))
        return 0.0;
    const double H = static_cast<double>(in.H);
    const double S = static_cast<double>(in.S), A = static_cast<double>(in.A);
    const double budget =
        S * std::numbers::ln2 + 2.0 * in.mu * budget_power(static_cast<double>(in.K), in.alpha);
    return 4.0 * H * H * (H - 1.0) * (2.0 * H - 1.0) * S * A * budget / (3.0 * in.gap_star);
}

/// Bad-event mass SAHK exp(-2 mu K^alpha) (KD) or SAHK exp(-2 mu K^(gamma alpha)) (KI).
/// Unclipped.
inline double compute_delta_K(const BoundInputs& in) {
    const double K = static_cast<double>(in.K);
    const double exponent = in.schedule == BonusSchedule::KD ? in.alpha : in.gamma * in.alpha;
    const double scale = static_cast<double>(in.S) * static_cast<double>(in.A) *
                         static_cast<double>(in.H) * K;
    return scale * std::exp(-2.0 * in.mu * budget_power(K, exponent));
}

/// Sufficient-visit threshold (2S ln2 + 4 mu K^alpha)(2H(H-h-1))^2 / gap*^2.
inline double compute_n_bar(const BoundInputs& in, std::size_t h) {
    if (h >= in.H)
        throw DomainError("compute_n_bar: stage out of range");
    if (!std::isfinite(in.gap_star))
        throw DomainError("compute_n_bar: gap_star is infinite, so every policy is optimal and "
                          "the visit threshold does not apply; skip it");
    if (!(in.gap_star > 0.0))
        throw DomainError("compute_n_bar: gap_star must be positive");
    const double S = static_cast<double>(in.S);
    const double budget = 2.0 * S * std::numbers::ln2 +
                          4.0 * in.mu * budget_power(static_cast<double>(in.K), in.alpha);
    const double width = 2.0 * static_cast<double>(in.H) * static_cast<double>(in.H - h - 1);
    return budget * width * width / (in.gap_star * in.gap_star);
}

/**
 * The pieces the tail bound is assembled from. Holding them separately lets a
 * caller evaluate the curve with an m_K and delta_K computed elsewhere.
 */
struct TailComponents {
    std::size_t H = 1, K = 1;
    std::uint64_t burn_in_episodes = 1;
    double m_K = 0.0;
    double delta_K = 0.0;

    /// exp(-(x - H ceil(K^gamma) - m_K)_+^2 / (2 H^3 K)) + delta_K, may exceed 1.
    double raw(double x) const {
        const double H_ = static_cast<double>(H);
        const double shift = H_ * static_cast<double>(burn_in_episodes) + m_K;
        const double excess = std::max(x - shift, 0.0);
        return std::exp(-excess * excess / (2.0 * H_ * H_ * H_ * static_cast<double>(K))) +
               delta_K;
    }
    double clipped(double x) const { return std::min(1.0, raw(x)); }
};

inline TailComponents tail_components(const BoundInputs& in) {
    return {in.H, in.K, burn_in_episodes(in.K, in.gamma), compute_m_K(in), compute_delta_K(in)};
}

inline double tail_bound_raw(const BoundInputs& in, double x) { return tail_components(in).raw(x); }

/// Upper bound on P(R_K >= x), clipped to a probability.
inline double tail_bound(const BoundInputs& in, double x) {
    if (!(x >= 0.0))
        throw DomainError("tail_bound: x must be non-negative");
    return tail_components(in).clipped(x);
}

/// m_K + H ceil(K^gamma) + 2H^2 (K - ceil(K^gamma)) delta_K.
inline double expectation_bound(const BoundInputs& in) {
    const double H = static_cast<double>(in.H);
    const auto burn = burn_in_episodes(in.K, in.gamma);
    const double rest = static_cast<double>(in.K) - static_cast<double>(burn);
    return compute_m_K(in) + H * static_cast<double>(burn) + 2.0 * H * H * rest * compute_delta_K(in);
}

// **********************************************************************
// Two-regime classification
// **********************************************************************

enum class TailRegime { BelowBaseline, SubGaussian, SubWeibull };

inline std::string_view to_string(TailRegime regime) noexcept {
    switch (regime) {
    case TailRegime::BelowBaseline: return "BELOW_BASELINE";
    case TailRegime::SubGaussian: return "SUB_GAUSSIAN";
    case TailRegime::SubWeibull: return "SUB_WEIBULL";
    }
    return "?";
}

/// clamp(log_K(x / 2H), 0, 1); 0 whenever the logarithm would be non-positive or undefined.
inline double adaptive_gamma(std::size_t K, std::size_t H, double x) {
    if (K <= 1)
        return 0.0;
    const double ratio = x / (2.0 * static_cast<double>(H));
    if (!(ratio > 1.0))
        return 0.0;
    return std::clamp(std::log(ratio) / std::log(static_cast<double>(K)), 0.0, 1.0);
}

/// Leading term H^4 SA(S + K^alpha)/gap*; 0 for the infinite-gap sentinel.
inline double sub_gaussian_floor(const BoundInputs& in) {
    if (!std::isfinite(in.gap_star))
        return 0.0;
    const double H = static_cast<double>(in.H);
    const double S = static_cast<double>(in.S);
    return H * H * H * H * S * static_cast<double>(in.A) *
           (S + budget_power(static_cast<double>(in.K), in.alpha)) / in.gap_star;
}

/// H^{3/2} K^{(1+alpha)/2} (KD) or H^{3/(2-alpha)} K^{1/(2-alpha)} (KI).
inline double regime_threshold(const BoundInputs& in) {
    const double H = static_cast<double>(in.H), K = static_cast<double>(in.K);
    if (in.schedule == BonusSchedule::KD)
        return std::pow(H, 1.5) * std::pow(K, 0.5 * (1.0 + in.alpha));
    const double d = 2.0 - in.alpha;
    return std::pow(H, 3.0 / d) * std::pow(K, 1.0 / d);
}

struct RegimeClassification {
    TailRegime regime = TailRegime::BelowBaseline;
    double sub_gaussian_lo = 0.0;
    double regime_threshold = 0.0;
    /// The per-x gamma a KI curve would use; 0 for KD.
    double gamma = 0.0;
};

/**
 * Locates x relative to the two regimes. Both boundaries are the displayed
 * leading terms with logarithmic factors dropped, so they mark orders of
 * magnitude rather than sharp constants.
 */
inline RegimeClassification classify_regimes(const BoundInputs& in, double x) {
    if (!(x >= 0.0))
        throw DomainError("classify_regimes: x must be non-negative");
    RegimeClassification out;
    out.sub_gaussian_lo = sub_gaussian_floor(in);
    out.regime_threshold = regime_threshold(in);
    out.gamma = in.schedule == BonusSchedule::KI ? adaptive_gamma(in.K, in.H, x) : 0.0;
    if (x < out.sub_gaussian_lo)
        out.regime = TailRegime::BelowBaseline;
    else if (x <= out.regime_threshold)
        out.regime = TailRegime::SubGaussian;
    else
        out.regime = TailRegime::SubWeibull;
    return out;
}

// **********************************************************************
// Report
// **********************************************************************

struct BoundReport {
    BoundInputs inputs;
    double m_K = 0.0;
    double delta_K = 0.0;
    std::uint64_t burn_in_episodes = 1;
    /// H ceil(K^gamma).
    double burn_in = 0.0;
    bool n_bar_available = false;
    std::vector<double> n_bar;
    double expectation_bound = 0.0;
    double regime_threshold = 0.0;
    double sub_gaussian_lo = 0.0;

    TailComponents tail() const { return {inputs.H, inputs.K, burn_in_episodes, m_K, delta_K}; }
};

inline BoundReport make_bound_report(const BoundInputs& in) {
    in.validate();
    BoundReport r;
    r.inputs = in;
    r.m_K = compute_m_K(in);
    r.delta_K = compute_delta_K(in);
    r.burn_in_episodes = burn_in_episodes(in.K, in.gamma);
    r.burn_in = static_cast<double>(in.H) * static_cast<double>(r.burn_in_episodes);
    r.n_bar_available = std::isfinite(in.gap_star);
    if (r.n_bar_available)
        for (std::size_t h = 0; h < in.H; ++h)
            r.n_bar.push_back(compute_n_bar(in, h));
    r.expectation_bound = expectation_bound(in);
    r.regime_threshold = regime_threshold(in);
    r.sub_gaussian_lo = sub_gaussian_floor(in);
    return r;
}

/// Tail bound for a KI run at the per-x gamma choice.
inline double adaptive_tail_bound_raw(const BoundInputs& in, double x) {
    BoundInputs local = in;
    local.gamma = adaptive_gamma(in.K, in.H, x);
    return tail_bound_raw(local, x);
}

} // namespace regret_lab
