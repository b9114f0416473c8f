#pragma once

#include "regret_lab/agent.hpp"
#include "regret_lab/bounds.hpp"
#include "regret_lab/diagnostics.hpp"
#include "regret_lab/env_zoo.hpp"
#include "regret_lab/errors.hpp"
#include "regret_lab/mdp.hpp"
#include "regret_lab/mdp_io.hpp"
#include "regret_lab/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace regret_lab {

namespace fs = std::filesystem;

// **********************************************************************
// Configuration
// **********************************************************************

struct ExperimentConfig {
    /// Exactly one of env_spec / env_path is used; env_spec wins when both are set.
    std::optional<EnvSpec> env_spec;
    fs::path env_path;
    BonusConfig bonus;
    /// Reporting parameter for the bounds; the agent never sees it.
    double gamma = 0.0;
    std::size_t replications = 1;
    std::uint64_t master_seed = 0;
    fs::path output_dir;
    bool record_diagnostics = false;
    bool record_trajectories = false;

    void validate() const {
        if (!env_spec && env_path.empty())
            throw DomainError("config: 'env' must be an environment spec or an MDP file path");
        if (env_spec)
            env_spec->validate();
        bonus.validate();
        if (!(gamma >= 0.0 && gamma <= 1.0))
            throw DomainError("config: gamma must lie in [0,1]");
        if (replications < 1)
            throw DomainError("config: replications must be at least 1");
    }
};

inline nlohmann::json bonus_to_json(const BonusConfig& cfg) {
    return {{"schedule", to_string(cfg.schedule)},
            {"alpha", cfg.alpha},
            {"mu", cfg.mu},
            {"total_episodes", cfg.total_episodes}};
}

inline BonusConfig bonus_from_json(const nlohmann::json& j) {
    BonusConfig cfg;
    for (const auto& [key, _] : j.items())
        if (key != "schedule" && key != "alpha" && key != "mu" && key != "total_episodes")
            throw DomainError("config: unknown bonus field '" + key + "'");
    cfg.schedule = parse_schedule(j.value("schedule", std::string("KD")));
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.mu = j.value("mu", cfg.mu);
    cfg.total_episodes = j.at("total_episodes").get<std::size_t>();
    cfg.validate();
    return cfg;
}

/// Everything that determines the experiment's numbers. The output directory
/// is left out so that the same experiment written to two places hashes equal.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    if (cfg.env_spec)
        j["env"] = env_spec_to_json(*cfg.env_spec);
    else
        j["env"] = cfg.env_path.generic_string();
    j["bonus"] = bonus_to_json(cfg.bonus);
    j["gamma"] = cfg.gamma;
    j["replications"] = cfg.replications;
    j["master_seed"] = cfg.master_seed;
    j["record_diagnostics"] = cfg.record_diagnostics;
    j["record_trajectories"] = cfg.record_trajectories;
    return j;
}

/// Relative MDP paths resolve against `base_dir`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
    static const char* const known[] = {"env",         "bonus",      "gamma",
                                        "replications", "master_seed", "output_dir",
                                        "record_diagnostics", "record_trajectories"};
    if (!j.is_object())
        throw DomainError("config: top level must be an object");
    for (const auto& [key, _] : j.items())
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw DomainError("config: unknown field '" + key + "'");

    ExperimentConfig cfg;
    try {
        const auto& env = j.at("env");
        if (env.is_string()) {
            fs::path p = env.get<std::string>();
            cfg.env_path = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).lexically_normal();
        } else {
            cfg.env_spec = env_spec_from_json(env);
        }
        cfg.bonus = bonus_from_json(j.at("bonus"));
        cfg.gamma = j.value("gamma", cfg.gamma);
        cfg.replications = j.value("replications", cfg.replications);
        cfg.master_seed = j.value("master_seed", cfg.master_seed);
        if (j.contains("output_dir")) {
            fs::path out = j.at("output_dir").get<std::string>();
            cfg.output_dir = (out.is_relative() && !base_dir.empty() ? base_dir / out : out).lexically_normal();
        }
        cfg.record_diagnostics = j.value("record_diagnostics", cfg.record_diagnostics);
        cfg.record_trajectories = j.value("record_trajectories", cfg.record_trajectories);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError("config file " + path.string() + ": " + e.what());
    }
    return config_from_json(doc, path.parent_path());
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_to_json(cfg).dump())));
    return buf;
}

inline TabularMDP resolve_environment(const ExperimentConfig& cfg) {
    return cfg.env_spec ? generate(*cfg.env_spec) : load_mdp(cfg.env_path);
}

// **********************************************************************
// Replications
// **********************************************************************

struct DiagnosticsCounters {
    std::uint64_t episodes_checked = 0;
    std::uint64_t good_event_failures = 0;
    std::uint64_t optimism_failures = 0;
    /// Episodes with the good event but without optimism. Must stay 0.
    std::uint64_t good_event_without_optimism = 0;
    /// Good-event episodes whose R1 contribution exceeded 1e-9. Must stay 0.
    std::uint64_t good_event_r1_violations = 0;
    /// Episodes with regret below -1e-9. Must stay 0.
    std::uint64_t negative_regret_episodes = 0;
    double max_decomposition_residual = 0.0;
    /// max over replications of R0 - H ceil(K^gamma).
    double max_burn_in_excess = -kInfinity;
    std::uint64_t n_bar_active_episodes = 0;
    std::uint64_t n_bar_violations = 0;

    void merge(const DiagnosticsCounters& o) {
        episodes_checked += o.episodes_checked;
        good_event_failures += o.good_event_failures;
        optimism_failures += o.optimism_failures;
        good_event_without_optimism += o.good_event_without_optimism;
        good_event_r1_violations += o.good_event_r1_violations;
        negative_regret_episodes += o.negative_regret_episodes;
        max_decomposition_residual = std::max(max_decomposition_residual, o.max_decomposition_residual);
        max_burn_in_excess = std::max(max_burn_in_excess, o.max_burn_in_excess);
        n_bar_active_episodes += o.n_bar_active_episodes;
        n_bar_violations += o.n_bar_violations;
    }
};

struct ReplicationOptions {
    bool trajectory = false;
    bool diagnostics = false;
    /// Keep the per-episode history in the result (implies diagnostics).
    bool keep_history = false;
    bool record_eta = false;
    /// Burn-in exponent used by the decomposition.
    double gamma = 0.0;
};

struct ReplicationResult {
    double regret = 0.0;
    /// Cumulative regret after each episode, when requested.
    std::vector<double> trajectory;
    DiagnosticsCounters diagnostics;
    std::optional<DecompositionTrace> decomposition;
    RunHistory history;
};

/**
 * K episodes of plan, roll out, update. Regret is scored with exact policy
 * evaluation against `optimum`.
 */
inline ReplicationResult run_replication(const TabularMDP& mdp, const OptimalSolution& optimum,
                                         const BonusConfig& cfg, std::uint64_t seed,
                                         const ReplicationOptions& options = {}) {
    cfg.validate();
    const bool diagnostics = options.diagnostics || options.keep_history;
    const std::size_t K = cfg.total_episodes;
    Rng rng(seed);
    AgentState state(mdp);

    ReplicationResult out;
    if (options.trajectory)
        out.trajectory.reserve(K);
    RunHistory history;
    if (diagnostics)
        history.reserve(K);

    for (std::size_t k = 0; k < K; ++k) {
        OptimisticPlan planned = plan(mdp, state, cfg);
        EpisodeRecord episode = act_and_step(mdp, planned.policy, optimum, rng);
        out.regret += episode.regret;
        if (options.trajectory)
            out.trajectory.push_back(out.regret);

        if (diagnostics) {
            DiagnosticsCounters& d = out.diagnostics;
            const bool good = good_event_check(mdp, state, cfg).holds;
            const bool optimistic = optimism_check(planned.values, optimum.values).holds;
            ++d.episodes_checked;
            d.good_event_failures += good ? 0 : 1;
            d.optimism_failures += optimistic ? 0 : 1;
            d.good_event_without_optimism += (good && !optimistic) ? 1 : 0;
            d.negative_regret_episodes += episode.regret < -kValueTolerance ? 1 : 0;
            history.push_back(EpisodeTrace{planned.policy, std::move(planned.values),
                                           evaluate_policy(mdp, planned.policy), episode, good,
                                           state.pair_counts()});
        }
        state.record(episode);
    }

    if (diagnostics) {
        DiagnosticsCounters& d = out.diagnostics;
        DecompositionTrace trace =
            decompose_regret(history, mdp, optimum.gaps, options.gamma, options.record_eta);
        d.max_decomposition_residual = std::abs(trace.total() - out.regret);
        d.max_burn_in_excess = trace.R0 - static_cast<double>(mdp.horizon()) *
                                              static_cast<double>(trace.burn_in_episodes);
        if (trace.worst_good_event_R1 > kValueTolerance) {
            const std::size_t s0 = mdp.initial_state();
            for (std::size_t k = trace.burn_in_episodes; k < history.size(); ++k) {
                const EpisodeTrace& t = history[k];
                if (t.good_event && !is_optimal_policy(t.policy, optimum.gaps) &&
                    optimum.values(0, s0) - t.optimistic_values(0, s0) > kValueTolerance)
                    ++d.good_event_r1_violations;
            }
        }
        if (optimum.gaps.has_finite_gap()) {
            const BoundInputs in = make_bound_inputs(mdp, cfg, options.gamma, optimum.gaps.gap_star);
            const StoppingReport stop = n_bar_stopping_check(history, in, mdp, optimum.gaps);
            d.n_bar_active_episodes = stop.active_episodes;
            d.n_bar_violations = stop.violations;
        }
        out.decomposition = std::move(trace);
        if (options.keep_history)
            out.history = std::move(history);
    }
    return out;
}

/// REGRET_LAB_THREADS if set and positive, otherwise the hardware concurrency.
inline std::size_t worker_count(std::optional<std::size_t> requested = std::nullopt) {
    std::size_t n = 0;
    if (requested) {
        n = *requested;
    } else if (const char* env = std::getenv("REGRET_LAB_THREADS")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw DomainError("REGRET_LAB_THREADS must be a non-negative integer");
        n = static_cast<std::size_t>(v);
    }
    if (n == 0)
        n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

/**
 * Runs task(i) for i in [0, count) on up to `workers` threads. Results must be
 * written by index; the first exception by index is rethrown.
 */
template <class Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    const auto drain = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        drain();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(drain);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

// **********************************************************************
// Experiments
// **********************************************************************

/// Fraction of samples >= x.
inline double empirical_ccdf(std::span<const double> samples, double x) {
    if (samples.empty())
        throw DomainError("empirical_ccdf: no samples");
    const auto hits = std::count_if(samples.begin(), samples.end(), [x](double v) { return v >= x; });
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

/// Same quantity over an ascending copy, in O(log R).
inline double sorted_ccdf(std::span<const double> sorted, double x) {
    if (sorted.empty())
        throw DomainError("empirical_ccdf: no samples");
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(sorted.end() - first) / static_cast<double>(sorted.size());
}

struct ExperimentResult {
    ExperimentConfig config;
    std::string config_hash;
    std::size_t S = 0, A = 0, H = 0;
    double gap_star = kInfinity;
    double optimal_value = 0.0;
    BoundReport bound_report;
    std::vector<std::uint64_t> seeds;
    std::vector<double> regret_samples;
    /// Ascending copy of regret_samples.
    std::vector<double> sorted_samples;
    std::vector<std::vector<double>> trajectories;
    std::optional<DiagnosticsCounters> diagnostics;

    double ccdf(double x) const { return sorted_ccdf(sorted_samples, x); }
    /// Two-pass mean; the second pass removes the first pass's rounding drift.
    double mean() const {
        const double n = static_cast<double>(regret_samples.size());
        double total = 0.0;
        for (double v : regret_samples)
            total += v;
        const double first = total / n;
        double correction = 0.0;
        for (double v : regret_samples)
            correction += v - first;
        return first + correction / n;
    }
    double stddev() const {
        if (regret_samples.size() < 2)
            return 0.0;
        const double m = mean();
        double acc = 0.0;
        for (double v : regret_samples)
            acc += (v - m) * (v - m);
        return std::sqrt(acc / static_cast<double>(regret_samples.size() - 1));
    }
};

struct RunOptions {
    /// Overrides REGRET_LAB_THREADS.
    std::optional<std::size_t> threads;
};

inline void ensure_writable_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("output directory " + dir.string() + " cannot be created");
    const fs::path probe = dir / ".regret_lab_probe";
    {
        std::ofstream out(probe, std::ios::binary);
        if (!out || !(out << "probe"))
            throw IoError("output directory " + dir.string() + " is not writable");
    }
    fs::remove(probe, ec);
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {}) {
    cfg.validate();
    if (!cfg.output_dir.empty())
        ensure_writable_directory(cfg.output_dir);

    const TabularMDP mdp = resolve_environment(cfg);
    const OptimalSolution optimum = backward_induction(mdp);

    ExperimentResult result;
    result.config = cfg;
    result.config_hash = config_hash(cfg);
    result.S = mdp.num_states();
    result.A = mdp.num_actions();
    result.H = mdp.horizon();
    result.gap_star = optimum.gaps.gap_star;
    result.optimal_value = optimum.values(0, mdp.initial_state());
    result.bound_report = make_bound_report(make_bound_inputs(mdp, cfg.bonus, cfg.gamma, result.gap_star));

    const std::size_t R = cfg.replications;
    result.seeds.resize(R);
    for (std::size_t i = 0; i < R; ++i)
        result.seeds[i] = replication_seed(cfg.master_seed, i);

    ReplicationOptions rep_options;
    rep_options.trajectory = cfg.record_trajectories;
    rep_options.diagnostics = cfg.record_diagnostics;
    rep_options.gamma = cfg.gamma;

    std::vector<ReplicationResult> reps(R);
    parallel_for(R, worker_count(options.threads), [&](std::size_t i) {
        reps[i] = run_replication(mdp, optimum, cfg.bonus, result.seeds[i], rep_options);
    });

    result.regret_samples.reserve(R);
    if (cfg.record_diagnostics)
        result.diagnostics.emplace();
    for (auto& rep : reps) {
        result.regret_samples.push_back(rep.regret);
        if (cfg.record_trajectories)
            result.trajectories.push_back(std::move(rep.trajectory));
        if (cfg.record_diagnostics)
            result.diagnostics->merge(rep.diagnostics);
    }
    result.sorted_samples = result.regret_samples;
    std::sort(result.sorted_samples.begin(), result.sorted_samples.end());
    return result;
}

// **********************************************************************
// Tail grid
// **********************************************************************

inline constexpr std::size_t kTailGridPoints = 512;

/// 512 evenly spaced points on [0, 1.1 max] plus every sample, ascending and
/// deduplicated. The upper end falls back to 1 when no sample is positive.
inline std::vector<double> tail_grid(std::span<const double> samples) {
    double top = 0.0;
    for (double v : samples)
        top = std::max(top, v);
    const double upper = top > 0.0 ? 1.1 * top : 1.0;
    std::vector<double> grid;
    grid.reserve(kTailGridPoints + samples.size());
    for (std::size_t i = 0; i < kTailGridPoints; ++i)
        grid.push_back(upper * static_cast<double>(i) / static_cast<double>(kTailGridPoints - 1));
    grid.insert(grid.end(), samples.begin(), samples.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

struct TailRow {
    double x = 0.0;
    double empirical_ccdf = 0.0;
    double raw_bound = 0.0;
    double clipped_bound = 0.0;
    /// Only meaningful for the per-x curve.
    double gamma = 0.0;
};

inline std::vector<TailRow> tail_table(const ExperimentResult& result) {
    const TailComponents tail = result.bound_report.tail();
    std::vector<TailRow> rows;
    for (double x : tail_grid(result.regret_samples))
        rows.push_back({x, result.ccdf(x), tail.raw(x), tail.clipped(x), result.config.gamma});
    return rows;
}

/// KI curve with gamma chosen per x.
inline std::vector<TailRow> adaptive_tail_table(const ExperimentResult& result) {
    const BoundInputs& in = result.bound_report.inputs;
    std::vector<TailRow> rows;
    for (double x : tail_grid(result.regret_samples)) {
        BoundInputs local = in;
        local.gamma = adaptive_gamma(in.K, in.H, x);
        const TailComponents tail = tail_components(local);
        rows.push_back({x, result.ccdf(x), tail.raw(x), tail.clipped(x), local.gamma});
    }
    return rows;
}

// **********************************************************************
// Serialization
// **********************************************************************

/// 17 significant digits, enough to round-trip any double.
inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::json real_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json bound_report_to_json(const BoundReport& r) {
    const BoundInputs& in = r.inputs;
    return {{"inputs",
             {{"S", in.S},
              {"A", in.A},
              {"H", in.H},
              {"K", in.K},
              {"alpha", in.alpha},
              {"mu", in.mu},
              {"gamma", in.gamma},
              {"gap_star", real_or_null(in.gap_star)},
              {"schedule", to_string(in.schedule)}}},
            {"m_K", r.m_K},
            {"delta_K", r.delta_K},
            {"burn_in_episodes", r.burn_in_episodes},
            {"burn_in", r.burn_in},
            {"n_bar_available", r.n_bar_available},
            {"n_bar", r.n_bar},
            {"expectation_bound", r.expectation_bound},
            {"regime_threshold", r.regime_threshold},
            {"sub_gaussian_lo", r.sub_gaussian_lo}};
}

inline nlohmann::json diagnostics_to_json(const DiagnosticsCounters& d) {
    return {{"episodes_checked", d.episodes_checked},
            {"good_event_failures", d.good_event_failures},
            {"optimism_failures", d.optimism_failures},
            {"good_event_without_optimism", d.good_event_without_optimism},
            {"good_event_r1_violations", d.good_event_r1_violations},
            {"negative_regret_episodes", d.negative_regret_episodes},
            {"max_decomposition_residual", d.max_decomposition_residual},
            {"max_burn_in_excess", real_or_null(d.max_burn_in_excess)},
            {"n_bar_active_episodes", d.n_bar_active_episodes},
            {"n_bar_violations", d.n_bar_violations}};
}

inline nlohmann::json summary_to_json(const ExperimentResult& result) {
    nlohmann::json j;
    j["config"] = config_to_json(result.config);
    j["config_hash"] = result.config_hash;
    j["instance"] = {{"S", result.S},
                     {"A", result.A},
                     {"H", result.H},
                     {"gap_star", real_or_null(result.gap_star)},
                     {"optimal_value", result.optimal_value}};
    j["bound_report"] = bound_report_to_json(result.bound_report);
    j["diagnostics"] = result.diagnostics ? diagnostics_to_json(*result.diagnostics) : nlohmann::json(nullptr);
    j["seeds"] = result.seeds;
    j["regret_samples"] = result.regret_samples;
    j["statistics"] = {{"mean", result.mean()},
                       {"stddev", result.stddev()},
                       {"min", result.sorted_samples.front()},
                       {"max", result.sorted_samples.back()}};
    return j;
}

inline std::string tail_csv(const std::vector<TailRow>& rows, bool with_gamma) {
    std::string out = with_gamma ? "x,gamma,empirical_ccdf,raw_bound,clipped_bound\n"
                                 : "x,empirical_ccdf,raw_bound,clipped_bound\n";
    for (const TailRow& r : rows) {
        out += format_real(r.x);
        if (with_gamma)
            out += ',' + format_real(r.gamma);
        out += ',' + format_real(r.empirical_ccdf) + ',' + format_real(r.raw_bound) + ',' +
               format_real(r.clipped_bound) + '\n';
    }
    return out;
}

inline std::string trajectories_csv(const ExperimentResult& result) {
    std::string out = "rep,episode,cumulative_regret\n";
    for (std::size_t rep = 0; rep < result.trajectories.size(); ++rep)
        for (std::size_t k = 0; k < result.trajectories[rep].size(); ++k)
            out += std::to_string(rep) + ',' + std::to_string(k) + ',' +
                   format_real(result.trajectories[rep][k]) + '\n';
    return out;
}

/**
 * Writes each file under a temporary name and renames the whole set at the
 * end. On failure every file this call produced is removed.
 */
class FileSetWriter {
public:
    explicit FileSetWriter(fs::path dir) : dir_(std::move(dir)) {}
    FileSetWriter(const FileSetWriter&) = delete;
    FileSetWriter& operator=(const FileSetWriter&) = delete;
    ~FileSetWriter() {
        if (!committed_)
            discard();
    }

    void add(const std::string& name, const std::string& contents) {
        const fs::path tmp = dir_ / (name + ".tmp");
        staged_.push_back({tmp, dir_ / name});
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out || !out.write(contents.data(), static_cast<std::streamsize>(contents.size())) ||
            !out.flush())
            throw IoError("failed writing " + tmp.string());
    }

    std::vector<fs::path> commit() {
        std::vector<fs::path> written;
        for (const auto& [tmp, final_path] : staged_) {
            std::error_code ec;
            fs::rename(tmp, final_path, ec);
            if (ec)
                throw IoError("failed to move " + tmp.string() + " into place: " + ec.message());
            renamed_.push_back(final_path);
            written.push_back(final_path);
        }
        committed_ = true;
        return written;
    }

private:
    void discard() noexcept {
        std::error_code ec;
        for (const auto& [tmp, _] : staged_)
            fs::remove(tmp, ec);
        for (const auto& p : renamed_)
            fs::remove(p, ec);
    }

    fs::path dir_;
    std::vector<std::pair<fs::path, fs::path>> staged_;
    std::vector<fs::path> renamed_;
    bool committed_ = false;
};

/// tail.csv, summary.json, plus trajectories.csv and tail_adaptive.csv when applicable.
inline std::vector<fs::path> emit_results(const ExperimentResult& result, const fs::path& dir) {
    ensure_writable_directory(dir);
    FileSetWriter writer(dir);
    writer.add("tail.csv", tail_csv(tail_table(result), false));
    if (result.bound_report.inputs.schedule == BonusSchedule::KI)
        writer.add("tail_adaptive.csv", tail_csv(adaptive_tail_table(result), true));
    writer.add("summary.json", summary_to_json(result).dump(2) + "\n");
    if (!result.trajectories.empty())
        writer.add("trajectories.csv", trajectories_csv(result));
    return writer.commit();
}

// **********************************************************************
// Loaders
// **********************************************************************

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Rows of a numeric CSV; the header is returned separately.
inline std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::string* header = nullptr) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line))
        throw IoError(path.string() + " is empty");
    if (header)
        *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string cell = line.substr(start, comma - start);
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw IoError(path.string() + ": malformed cell '" + cell + "'");
            row.push_back(v);
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<TailRow> load_tail_csv(const fs::path& path) {
    std::string header;
    const auto raw = read_numeric_csv(path, &header);
    const bool with_gamma = header == "x,gamma,empirical_ccdf,raw_bound,clipped_bound";
    if (!with_gamma && header != "x,empirical_ccdf,raw_bound,clipped_bound")
        throw IoError(path.string() + ": unexpected header '" + header + "'");
    std::vector<TailRow> rows;
    for (const auto& r : raw) {
        if (r.size() != (with_gamma ? 5u : 4u))
            throw IoError(path.string() + ": wrong column count");
        rows.push_back(with_gamma ? TailRow{r[0], r[2], r[3], r[4], r[1]}
                                  : TailRow{r[0], r[1], r[2], r[3], 0.0});
    }
    return rows;
}

inline std::vector<std::vector<double>> load_trajectories_csv(const fs::path& path) {
    std::string header;
    const auto raw = read_numeric_csv(path, &header);
    if (header != "rep,episode,cumulative_regret")
        throw IoError(path.string() + ": unexpected header '" + header + "'");
    std::vector<std::vector<double>> out;
    for (const auto& r : raw) {
        if (r.size() != 3)
            throw IoError(path.string() + ": wrong column count");
        const auto rep = static_cast<std::size_t>(r[0]);
        if (rep >= out.size())
            out.resize(rep + 1);
        out[rep].push_back(r[2]);
    }
    return out;
}

inline nlohmann::json load_summary(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace regret_lab
