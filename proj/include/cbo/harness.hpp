#pragma once

#include "cbo/acquisition.hpp"
#include "cbo/benchmarks.hpp"
#include "cbo/kernel.hpp"
#include "cbo/laplace.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cbo {

enum class RunMode { Binary, Preferential, Psychophysics };

std::string to_string(RunMode mode);
/// Accepts "binary", "preferential" ("pref") and "psychophysics".
RunMode run_mode_from_string(const std::string& name);

struct RunConfig {
    std::string rule;
    std::string benchmark;
    RunMode mode = RunMode::Binary;
    int iterations = 60;
    int initial_samples = 5;
    std::uint64_t seed = 0;
    /// Full classification kernel over (s, x); preference-wrapped in preferential mode.
    KernelSpec kernel;
    AcquisitionConfig acquisition;
};

/// Throws std::invalid_argument on unknown rules, mode mismatches and counts < 1.
void validate(const RunConfig& config);

/// Source of observations and of the noise-free objective used for scoring.
class ExperimentOracle {
public:
    virtual ~ExperimentOracle() = default;
    virtual std::string name() const = 0;
    virtual RunMode mode() const = 0;
    virtual Box context_box() const = 0;
    virtual Box param_box() const = 0;
    /// One binary outcome; duels compare x against x2.
    virtual int query(const InputPoint& p) = 0;
    /// Noise-free objective (higher is better) and its maximum over the box.
    virtual double objective(const Vector& x) const = 0;
    virtual double objective_max() const = 0;
    /// Secondary reading stored next to the objective (visual acuity); none by default.
    virtual std::optional<double> secondary(const Vector&) const { return std::nullopt; }
    /// Context at which the inferred optimum is taken.
    virtual Vector estimate_context() const { return context_box().upper; }
};

/// Benchmark oracle with the probit wrapper Phi(s g(x)) on S = [0, 1].
class BenchmarkOracle final : public ExperimentOracle {
public:
    BenchmarkOracle(const BenchmarkSpec& spec, bool preferential, RngStream rng);

    std::string name() const override { return oracle_.spec().name; }
    RunMode mode() const override { return preferential_ ? RunMode::Preferential : RunMode::Binary; }
    Box context_box() const override { return ContextualOracle::context_box(); }
    Box param_box() const override { return oracle_.spec().box; }
    int query(const InputPoint& p) override;
    double objective(const Vector& x) const override { return oracle_.spec().standardized(x); }
    double objective_max() const override { return max_; }

private:
    ContextualOracle oracle_;
    bool preferential_;
    double max_;
};

/// Classification kernel for a benchmark: the dot-product context times the
/// pre-fitted base kernel, preference-wrapped in preferential mode.
KernelSpec benchmark_run_kernel(const KernelSpec& base, bool preferential);

struct TrialRecord {
    int iteration = 0;
    bool initial = false;  ///< drawn uniformly at random before the rule takes over
    Vector s;
    Vector x;
    std::optional<Vector> x2;
    int outcome = 0;
    double acquisition_value = 0.0;
    Vector x_hat;     ///< posterior-mean argmax at the estimate context
    double g_hat = 0.0;  ///< noise-free objective at x_hat
    std::optional<double> secondary;
    double regret = 0.0;       ///< objective_max - g_hat
    double best_regret = 0.0;  ///< running minimum of regret
    double wall_seconds = 0.0;  ///< cumulative
};

struct Trace {
    RunConfig config;
    std::string oracle;
    double objective_max = 0.0;
    bool valid = true;
    std::string error;
    std::vector<TrialRecord> records;

    /// Objective at the last inferred optimum.
    double final_value() const;
    /// Best objective over the inferred optima of the run.
    double best_value() const;
};

/// Equality of everything except wall time.
bool same_outcome(const Trace& a, const Trace& b);

/// Stepwise form of the experiment loop: propose, then submit the outcome.
/// Round t draws its randomness from (seed, t) alone.
class OptimizationLoop {
public:
    /// The oracle supplies boxes and scoring; it must outlive the loop.
    OptimizationLoop(RunConfig config, const ExperimentOracle& oracle);

    int iteration() const { return static_cast<int>(trace_.records.size()); }
    bool done() const { return iteration() >= trace_.config.iterations || !trace_.valid; }
    /// Outstanding query; computed once per round, so repeated calls agree.
    const Decision& proposal();
    /// Records the outcome of the outstanding query, refits and re-estimates.
    /// Failures mark the trace invalid and rethrow.
    const TrialRecord& submit(int outcome);

    const LaplaceState& state() const { return state_; }
    const Trace& trace() const { return trace_; }
    /// Marks the trace invalid with `message`.
    void abort(const std::string& message);

private:
    const ExperimentOracle& oracle_;
    Trace trace_;
    std::shared_ptr<const FeatureMap> map_;
    LaplaceState state_;
    std::optional<Decision> pending_;
    double best_regret_;
    std::chrono::steady_clock::time_point start_;
};

/// Per-iteration hook; `state` already contains the new observation.
using TrialObserver = std::function<void(const TrialRecord&, const LaplaceState&)>;

/// Initial uniformly random queries, then one rule application per round.
/// Each round refits the Laplace posterior, records the posterior-mean argmax
/// and its true objective. Rule or fit failures end the run with valid = false.
Trace run_experiment(const RunConfig& config, ExperimentOracle& oracle, const TrialObserver& observer = {});

/// Prefit cache directory: $CBO_CACHE_DIR, else <tmp>/cbo-prefit.
std::filesystem::path default_cache_dir();

/// Benchmark run with the oracle stream (seed, "oracle:<benchmark>").
Trace run_benchmark_experiment(const RunConfig& config);

/// One experiment step reused by interactive sessions: the query for round
/// `iteration` given the current posterior.
Decision propose_query(const RunConfig& config, const ExperimentOracle& oracle, const LaplaceState& state,
                       std::shared_ptr<const FeatureMap> map, int iteration);

/// Posterior-mean argmax at the oracle's estimate context.
ArgmaxResult infer_optimum(const LaplaceState& state, const ExperimentOracle& oracle);

/// Shared feature map for the sampling rules, or null when the rule needs none.
std::shared_ptr<const FeatureMap> run_feature_map(const RunConfig& config, const ExperimentOracle& oracle);

// ---------------------------------------------------------------------------
// Persistence

class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(const std::string& what, int line) : std::runtime_error(what), line_(line) {}
    /// 1-based line of the offending record, 0 when not line-specific.
    int line() const { return line_; }

private:
    int line_;
};

inline constexpr int kTraceVersion = 1;

/// Header line followed by one record per line.
void write_trace(std::ostream& out, const Trace& trace);
Trace read_trace(std::istream& in);
void save_trace(const std::filesystem::path& path, const Trace& trace);
Trace load_trace(const std::filesystem::path& path);

std::string kernel_to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const std::string& text);

/// File name used by the CLI: <benchmark>__<rule>__<mode>__seed<k>.jsonl.
std::string trace_file_name(const RunConfig& config);

}  // namespace cbo
