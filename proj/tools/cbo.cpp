#include "cbo/psychophysics.hpp"
#include "cbo/service.hpp"
#include "cbo/stats.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace cbo;

namespace {

struct SeedRange {
    std::uint64_t first = 0, last = 0;
};

// "A..B" (inclusive) or a single seed.
SeedRange parse_seeds(const std::string& text) {
    SeedRange r;
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            r.first = r.last = std::stoull(text);
        } else {
            r.first = std::stoull(text.substr(0, dots));
            r.last = std::stoull(text.substr(dots + 2));
        }
    } catch (const std::exception&) {
        throw CLI::ValidationError("--seeds", "expected A..B or a single seed, got " + text);
    }
    if (r.last < r.first) throw CLI::ValidationError("--seeds", "empty range " + text);
    return r;
}

struct RunArgs {
    std::string rule, benchmark, mode = "binary", seeds = "0..19", out = "traces", cache;
    int iters = 60, initial = 5;
};

int cmd_run(const RunArgs& a) {
    const SeedRange seeds = parse_seeds(a.seeds);
    const RunMode mode = run_mode_from_string(a.mode);
    if (mode == RunMode::Psychophysics) throw CLI::ValidationError("--mode", "use the psychophysics command");
    const bool pref = mode == RunMode::Preferential;
    const BenchmarkSpec& spec = benchmark(a.benchmark);
    PrefitOptions prefit;
    prefit.cache_dir = a.cache.empty() ? default_cache_dir() : std::filesystem::path(a.cache);
    const KernelSpec base = prefit_benchmark_kernel(spec, prefit);
    std::filesystem::create_directories(a.out);

    int failures = 0;
    for (std::uint64_t seed = seeds.first; seed <= seeds.last; ++seed) {
        RunConfig c;
        c.rule = a.rule;
        c.benchmark = spec.name;
        c.mode = mode;
        c.iterations = a.iters;
        c.initial_samples = a.initial;
        c.seed = seed;
        c.kernel = benchmark_run_kernel(base, pref);
        const Trace t = run_benchmark_experiment(c);
        const auto path = std::filesystem::path(a.out) / trace_file_name(c);
        save_trace(path, t);
        if (!t.valid) {
            ++failures;
            std::cerr << path.string() << ": " << t.error << "\n";
            continue;
        }
        std::printf("%s seed %llu: final regret %.6g, best regret %.6g, %.2fs\n", spec.name.c_str(),
                    static_cast<unsigned long long>(seed), t.records.back().regret, t.records.back().best_regret,
                    t.records.back().wall_seconds);
    }
    return failures == 0 ? 0 : 1;
}

int cmd_analyze(const std::string& in, double alpha, const std::string& out) {
    const auto runs = load_summaries(in);
    if (runs.empty()) {
        std::cerr << "no traces under " << in << "\n";
        return 1;
    }
    const StatsReport report = stratified_ranking(runs, alpha);
    std::ofstream file(out);
    if (!file) throw std::runtime_error("cannot write " + out);
    write_report(file, report);

    std::printf("%zu runs, alpha %g\n", runs.size(), alpha);
    for (const auto& [bench, br] : report.benchmarks) {
        std::printf("%-24s", bench.c_str());
        for (const auto& [rule, score] : br.borda) std::printf(" %s=%d", rule.c_str(), score);
        std::printf("\n");
    }
    std::printf("ranking:");
    for (const auto& rule : report.ranking) std::printf(" %s (%d)", rule.c_str(), report.aggregate.at(rule));
    std::printf("\n");
    return 0;
}

struct PsyArgs {
    double slope = 5.0;
    std::string seeds = "0..19", rule = "ucb-ald", out, cache;
    int iters = 260;
};

int cmd_psychophysics(const PsyArgs& a) {
    const SeedRange seeds = parse_seeds(a.seeds);
    SurrogatePrefitOptions prefit;
    prefit.cache_dir = a.cache.empty() ? default_cache_dir() : std::filesystem::path(a.cache);
    const KernelSpec kernel = surrogate_kernel(a.slope, prefit);
    if (!a.out.empty()) std::filesystem::create_directories(a.out);

    int failures = 0, done = 0;
    double va_sum = 0.0;
    for (std::uint64_t seed = seeds.first; seed <= seeds.last; ++seed) {
        const RunConfig c = va_run_config(a.rule, seed, kernel, a.iters);
        const Trace t = run_va_experiment(c, a.slope);
        if (!a.out.empty()) save_trace(std::filesystem::path(a.out) / trace_file_name(c), t);
        if (!t.valid) {
            ++failures;
            std::cerr << "seed " << seed << ": " << t.error << "\n";
            continue;
        }
        const PatientModel p = simulated_patient(seed, a.slope);
        const TrialRecord& last = t.records.back();
        std::printf("seed %llu: truth (%.3f, %.3f) estimate (%.3f, %.3f) VA %.4f logMAR\n",
                    static_cast<unsigned long long>(seed), p.truth[0], p.truth[1], last.x_hat[0], last.x_hat[1],
                    *last.secondary);
        va_sum += *last.secondary;
        ++done;
    }
    if (done > 0) std::printf("mean final VA %.4f logMAR over %d runs\n", va_sum / done, done);
    return failures == 0 ? 0 : 1;
}

int cmd_serve(const std::string& host, int port, double slope, const std::string& cache) {
    SurrogatePrefitOptions prefit;
    prefit.cache_dir = cache.empty() ? default_cache_dir() : std::filesystem::path(cache);
    SessionManager manager(surrogate_kernel(slope, prefit));
    SessionService service(manager);
    std::printf("listening on %s:%d\n", host.c_str(), port);
    std::fflush(stdout);
    return service.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual binary and preferential Bayesian optimization"};
    app.require_subcommand(1);

    RunArgs run;
    auto* r = app.add_subcommand("run", "Benchmark runs, one trace file per seed");
    r->add_option("--rule", run.rule, "Acquisition rule")->required()->check(CLI::IsMember(rule_ids()));
    r->add_option("--benchmark", run.benchmark, "Benchmark name")->required();
    r->add_option("--mode", run.mode, "binary or pref")->check(CLI::IsMember({"binary", "pref", "preferential"}));
    r->add_option("--seeds", run.seeds, "Seed range A..B");
    r->add_option("--iters", run.iters, "Iterations per run")->check(CLI::PositiveNumber);
    r->add_option("--initial", run.initial, "Initial random queries")->check(CLI::NonNegativeNumber);
    r->add_option("--out", run.out, "Output directory");
    r->add_option("--cache", run.cache, "Prefit cache directory");

    std::string in, report = "report.json";
    double alpha = 5e-4;
    auto* an = app.add_subcommand("analyze", "Stratified Mann-Whitney/Borda ranking of a trace directory");
    an->add_option("--in", in, "Trace directory")->required()->check(CLI::ExistingDirectory);
    an->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    an->add_option("--out", report, "Report file");

    PsyArgs psy;
    auto* ps = app.add_subcommand("psychophysics", "Simulated visual-acuity optimization");
    ps->add_option("--slope", psy.slope, "Psychometric slope")->check(CLI::PositiveNumber);
    ps->add_option("--seeds", psy.seeds, "Seed range A..B");
    ps->add_option("--iters", psy.iters, "Trials per run")->check(CLI::PositiveNumber);
    ps->add_option("--rule", psy.rule, "Acquisition rule")->check(CLI::IsMember(rule_ids()));
    ps->add_option("--out", psy.out, "Trace directory");
    ps->add_option("--cache", psy.cache, "Prefit cache directory");

    std::string host = "127.0.0.1", serve_cache;
    int port = 8080;
    double serve_slope = 5.0;
    auto* sv = app.add_subcommand("serve", "Acuity session service over HTTP");
    sv->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
    sv->add_option("--host", host, "Bind address");
    sv->add_option("--slope", serve_slope, "Slope used for the surrogate prefit")->check(CLI::PositiveNumber);
    sv->add_option("--cache", serve_cache, "Prefit cache directory");

    app.add_subcommand("benchmarks", "List benchmark names");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*r) return cmd_run(run);
        if (*an) return cmd_analyze(in, alpha, report);
        if (*ps) return cmd_psychophysics(psy);
        if (*sv) return cmd_serve(host, port, serve_slope, serve_cache);
        for (const auto& name : benchmark_names()) std::printf("%s\n", name.c_str());
        return 0;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
