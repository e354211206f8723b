#include "cbo/harness.hpp"

#include "cbo/json_io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cbo {

using Json = nlohmann::json;

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Binary: return "binary";
        case RunMode::Preferential: return "preferential";
        case RunMode::Psychophysics: return "psychophysics";
    }
    return "unknown";
}

RunMode run_mode_from_string(const std::string& name) {
    if (name == "binary") return RunMode::Binary;
    if (name == "preferential" || name == "pref") return RunMode::Preferential;
    if (name == "psychophysics") return RunMode::Psychophysics;
    throw std::invalid_argument("unknown mode: " + name);
}

void validate(const RunConfig& c) {
    if (c.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
    if (c.initial_samples < 0) throw std::invalid_argument("initial samples must be non-negative");
    const auto& ids = rule_ids();
    if (std::find(ids.begin(), ids.end(), c.rule) == ids.end()) throw std::invalid_argument("unknown rule: " + c.rule);
    const bool pref_rule = rule_is_preferential(c.rule);
    const bool pref_kernel = c.kernel.family == KernelFamily::Preference;
    if (c.mode == RunMode::Preferential) {
        if (!pref_kernel) throw std::invalid_argument("preferential runs need a preference kernel");
        if (c.rule != "random" && !pref_rule) throw std::invalid_argument(c.rule + " does not query duels");
    } else {
        if (pref_kernel) throw std::invalid_argument("preference kernel outside preferential mode");
        if (pref_rule) throw std::invalid_argument(c.rule + " only queries duels");
    }
    validate(c.kernel);
    validate(c.acquisition);
}

// ---------------------------------------------------------------------------

BenchmarkOracle::BenchmarkOracle(const BenchmarkSpec& spec, bool preferential, RngStream rng)
    : oracle_(spec, std::move(rng)), preferential_(preferential), max_(spec.standardized_max()) {}

int BenchmarkOracle::query(const InputPoint& p) {
    if (p.is_duel() != preferential_)
        throw std::invalid_argument(preferential_ ? "this oracle answers duels" : "this oracle answers single points");
    return p.is_duel() ? oracle_.duel_query(p.s, p.x, *p.x2) : oracle_.binary_query(p.s, p.x);
}

KernelSpec benchmark_run_kernel(const KernelSpec& base, bool preferential) {
    KernelSpec k = product_context(base);
    return preferential ? preference(std::move(k)) : k;
}

// ---------------------------------------------------------------------------

double Trace::final_value() const {
    if (records.empty()) throw std::logic_error("empty trace");
    return records.back().g_hat;
}

double Trace::best_value() const {
    if (records.empty()) throw std::logic_error("empty trace");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) best = std::max(best, r.g_hat);
    return best;
}

namespace {

bool same_vec(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

bool same_record(const TrialRecord& a, const TrialRecord& b) {
    return a.iteration == b.iteration && a.initial == b.initial && same_vec(a.s, b.s) && same_vec(a.x, b.x) &&
           a.x2.has_value() == b.x2.has_value() && (!a.x2 || same_vec(*a.x2, *b.x2)) && a.outcome == b.outcome &&
           (a.acquisition_value == b.acquisition_value ||
            (std::isnan(a.acquisition_value) && std::isnan(b.acquisition_value))) &&
           same_vec(a.x_hat, b.x_hat) && a.g_hat == b.g_hat && a.secondary == b.secondary && a.regret == b.regret &&
           a.best_regret == b.best_regret;
}

}  // namespace

bool same_outcome(const Trace& a, const Trace& b) {
    if (a.records.size() != b.records.size() || a.valid != b.valid || a.oracle != b.oracle) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i)
        if (!same_record(a.records[i], b.records[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const FeatureMap> run_feature_map(const RunConfig& config, const ExperimentOracle& oracle) {
    if (!rule_needs_features(config.rule)) return nullptr;
    return std::make_shared<const FeatureMap>(
        build_feature_map(config.kernel, oracle.context_box(), oracle.param_box()));
}

Decision propose_query(const RunConfig& config, const ExperimentOracle& oracle, const LaplaceState& state,
                       std::shared_ptr<const FeatureMap> map, int iteration) {
    RngStream rng(config.seed, "round", {static_cast<std::uint64_t>(iteration)});
    const bool duel = config.mode == RunMode::Preferential;
    if (iteration < config.initial_samples) {
        Decision d;
        d.s = rng.uniform_in(oracle.context_box());
        d.x = rng.uniform_in(oracle.param_box());
        if (duel) d.x2 = rng.uniform_in(oracle.param_box());
        return d;
    }
    const AcquisitionProblem problem{state, oracle.context_box(), oracle.param_box(), duel, std::move(map),
                                     config.acquisition};
    return apply_rule(rule_from_id(config.rule), problem, rng);
}

ArgmaxResult infer_optimum(const LaplaceState& state, const ExperimentOracle& oracle) {
    return posterior_mean_argmax(state, oracle.estimate_context(), oracle.param_box());
}

OptimizationLoop::OptimizationLoop(RunConfig config, const ExperimentOracle& oracle)
    : oracle_(oracle),
      state_(LaplaceState::prior(config.kernel)),
      best_regret_(std::numeric_limits<double>::infinity()),
      start_(std::chrono::steady_clock::now()) {
    validate(config);
    if (oracle.mode() != config.mode) throw std::invalid_argument("oracle mode does not match the run mode");
    trace_.config = std::move(config);
    trace_.oracle = oracle.name();
    trace_.objective_max = oracle.objective_max();
    map_ = run_feature_map(trace_.config, oracle);
}

const Decision& OptimizationLoop::proposal() {
    if (done()) throw std::logic_error("the run is finished");
    if (!pending_) {
        try {
            pending_ = propose_query(trace_.config, oracle_, state_, map_, iteration());
        } catch (const std::exception& e) {
            abort("iteration " + std::to_string(iteration()) + ": " + e.what());
            throw;
        }
    }
    return *pending_;
}

const TrialRecord& OptimizationLoop::submit(int outcome) {
    if (!pending_) throw std::logic_error("no outstanding query");
    if (outcome != 0 && outcome != 1) throw std::invalid_argument("outcome must be 0 or 1");
    const Decision d = std::move(*pending_);
    pending_.reset();
    const int t = iteration();
    try {
        const BinaryObservation obs{d.point(), outcome};
        try {
            state_ = fit_laplace_extended(state_, obs);
        } catch (const ConvergenceError&) {
            std::vector<BinaryObservation> data = state_.data();
            data.push_back(obs);
            state_ = fit_laplace(std::move(data), trace_.config.kernel);
        }
        const ArgmaxResult est = infer_optimum(state_, oracle_);

        TrialRecord r;
        r.iteration = t;
        r.initial = t < trace_.config.initial_samples;
        r.s = d.s;
        r.x = d.x;
        r.x2 = d.x2;
        r.outcome = outcome;
        r.acquisition_value = d.value;
        r.x_hat = est.x;
        r.g_hat = oracle_.objective(est.x);
        r.secondary = oracle_.secondary(est.x);
        r.regret = trace_.objective_max - r.g_hat;
        best_regret_ = std::min(best_regret_, r.regret);
        r.best_regret = best_regret_;
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        trace_.records.push_back(std::move(r));
    } catch (const std::exception& e) {
        abort("iteration " + std::to_string(t) + ": " + e.what());
        throw;
    }
    return trace_.records.back();
}

void OptimizationLoop::abort(const std::string& message) {
    trace_.valid = false;
    trace_.error = message;
    pending_.reset();
}

Trace run_experiment(const RunConfig& config, ExperimentOracle& oracle, const TrialObserver& observer) {
    OptimizationLoop loop(config, oracle);
    while (!loop.done()) {
        try {
            const Decision& d = loop.proposal();
            const int c = oracle.query(d.point());
            const TrialRecord& r = loop.submit(c);
            if (observer) observer(r, loop.state());
        } catch (const std::exception& e) {
            if (loop.trace().valid) loop.abort("iteration " + std::to_string(loop.iteration()) + ": " + e.what());
        }
    }
    return loop.trace();
}

std::filesystem::path default_cache_dir() {
    if (const char* env = std::getenv("CBO_CACHE_DIR"); env && *env) return env;
    return std::filesystem::temp_directory_path() / "cbo-prefit";
}

Trace run_benchmark_experiment(const RunConfig& config) {
    validate(config);
    if (config.mode == RunMode::Psychophysics) throw std::invalid_argument("not a benchmark mode");
    const BenchmarkSpec& spec = benchmark(config.benchmark);
    BenchmarkOracle oracle(spec, config.mode == RunMode::Preferential, RngStream(config.seed, "oracle:" + spec.name));
    return run_experiment(config, oracle);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

Json config_json(const RunConfig& c) {
    const auto& a = c.acquisition;
    Json acq{{"ucb_beta", json::number(a.ucb_beta)},
             {"x_restarts", a.x_restarts},
             {"quadrature_order", a.quadrature_order},
             {"s_grid", a.s_grid},
             {"joint_screen", a.joint_screen},
             {"ckg_screen", a.ckg_screen},
             {"ckg_polish", a.ckg_polish},
             {"ckg_max_steps", a.ckg_max_steps},
             {"kg_inner_restarts", a.kg_inner_restarts},
             {"kg_refit_tolerance", json::number(a.kg_refit_tolerance)},
             {"sample_screen", a.sample_argmax.screen},
             {"sample_polish", a.sample_argmax.polish},
             {"sample_max_steps", a.sample_argmax.max_steps},
             {"sample_scramble_seed", a.sample_argmax.scramble_seed}};
    return Json{{"rule", c.rule},
                {"benchmark", c.benchmark},
                {"mode", to_string(c.mode)},
                {"iterations", c.iterations},
                {"initial_samples", c.initial_samples},
                {"seed", c.seed},
                {"kernel", json::kernel(c.kernel)},
                {"acquisition", acq}};
}

RunConfig config_from_json(const Json& j) {
    RunConfig c;
    c.rule = j.at("rule").get<std::string>();
    c.benchmark = j.at("benchmark").get<std::string>();
    c.mode = run_mode_from_string(j.at("mode").get<std::string>());
    c.iterations = j.at("iterations").get<int>();
    c.initial_samples = j.at("initial_samples").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.kernel = json::to_kernel(j.at("kernel"));
    const Json& a = j.at("acquisition");
    auto& q = c.acquisition;
    q.ucb_beta = json::to_number(a.at("ucb_beta"));
    q.x_restarts = a.at("x_restarts").get<int>();
    q.quadrature_order = a.at("quadrature_order").get<int>();
    q.s_grid = a.at("s_grid").get<int>();
    q.joint_screen = a.at("joint_screen").get<int>();
    q.ckg_screen = a.at("ckg_screen").get<int>();
    q.ckg_polish = a.at("ckg_polish").get<int>();
    q.ckg_max_steps = a.at("ckg_max_steps").get<int>();
    q.kg_inner_restarts = a.at("kg_inner_restarts").get<int>();
    q.kg_refit_tolerance = json::to_number(a.at("kg_refit_tolerance"));
    q.sample_argmax.screen = a.at("sample_screen").get<int>();
    q.sample_argmax.polish = a.at("sample_polish").get<int>();
    q.sample_argmax.max_steps = a.at("sample_max_steps").get<int>();
    q.sample_argmax.scramble_seed = a.at("sample_scramble_seed").get<std::uint64_t>();
    return c;
}

Json record_json(const TrialRecord& r) {
    return Json{{"iteration", r.iteration},
                {"initial", r.initial},
                {"s", json::vector(r.s)},
                {"x", json::vector(r.x)},
                {"x2", json::optional_vector(r.x2)},
                {"c", r.outcome},
                {"acquisition_value", json::number(r.acquisition_value)},
                {"x_hat", json::vector(r.x_hat)},
                {"g_hat", json::number(r.g_hat)},
                {"secondary", r.secondary ? json::number(*r.secondary) : Json(nullptr)},
                {"regret", json::number(r.regret)},
                {"best_regret", json::number(r.best_regret)},
                {"wall_seconds", json::number(r.wall_seconds)}};
}

TrialRecord record_from_json(const Json& j) {
    TrialRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.initial = j.at("initial").get<bool>();
    r.s = json::to_vector(j.at("s"));
    r.x = json::to_vector(j.at("x"));
    r.x2 = json::to_optional_vector(j.at("x2"));
    r.outcome = j.at("c").get<int>();
    if (r.outcome != 0 && r.outcome != 1) throw std::invalid_argument("outcome must be 0 or 1");
    r.acquisition_value = json::to_number(j.at("acquisition_value"));
    r.x_hat = json::to_vector(j.at("x_hat"));
    r.g_hat = json::to_number(j.at("g_hat"));
    if (!j.at("secondary").is_null()) r.secondary = json::to_number(j.at("secondary"));
    r.regret = json::to_number(j.at("regret"));
    r.best_regret = json::to_number(j.at("best_regret"));
    r.wall_seconds = json::to_number(j.at("wall_seconds"));
    return r;
}

}  // namespace

void write_trace(std::ostream& out, const Trace& t) {
    const Json header{{"schema", "cbo-trace"},
                      {"version", kTraceVersion},
                      {"config", config_json(t.config)},
                      {"oracle", t.oracle},
                      {"objective_max", json::number(t.objective_max)},
                      {"valid", t.valid},
                      {"error", t.error},
                      {"records", t.records.size()}};
    out << header.dump() << '\n';
    for (const auto& r : t.records) out << record_json(r).dump() << '\n';
}

Trace read_trace(std::istream& in) {
    std::string line;
    int lineno = 0;
    auto next = [&](const char* what) -> Json {
        ++lineno;
        if (!std::getline(in, line))
            throw TraceFormatError("truncated trace: missing " + std::string(what) + " at line " +
                                       std::to_string(lineno),
                                   lineno);
        if (in.eof()) throw TraceFormatError("truncated trace: line " + std::to_string(lineno) + " is unterminated", lineno);
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw TraceFormatError("malformed " + std::string(what) + " at line " + std::to_string(lineno), lineno);
        return j;
    };

    const Json header = next("header");
    Trace t;
    try {
        if (header.value("schema", "") != "cbo-trace") throw std::invalid_argument("not a cbo trace");
        const int version = header.at("version").get<int>();
        if (version != kTraceVersion)
            throw std::invalid_argument("unsupported trace version " + std::to_string(version));
        t.config = config_from_json(header.at("config"));
        t.oracle = header.at("oracle").get<std::string>();
        t.objective_max = json::to_number(header.at("objective_max"));
        t.valid = header.at("valid").get<bool>();
        t.error = header.at("error").get<std::string>();
    } catch (const TraceFormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw TraceFormatError(std::string("bad header at line 1: ") + e.what(), 1);
    }
    const auto count = header.at("records").get<std::size_t>();
    for (std::size_t i = 0; i < count; ++i) {
        const Json j = next("record");
        try {
            t.records.push_back(record_from_json(j));
        } catch (const std::exception& e) {
            throw TraceFormatError("bad record at line " + std::to_string(lineno) + ": " + e.what(), lineno);
        }
    }
    if (std::getline(in, line) && !line.empty())
        throw TraceFormatError("unexpected content at line " + std::to_string(lineno + 1), lineno + 1);
    return t;
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_trace(out, trace);
}

Trace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_trace(in);
}

std::string kernel_to_json(const KernelSpec& k) { return json::kernel(k).dump(); }

KernelSpec kernel_from_json(const std::string& text) { return json::to_kernel(Json::parse(text)); }

std::string trace_file_name(const RunConfig& c) {
    return c.benchmark + "__" + c.rule + "__" + to_string(c.mode) + "__seed" + std::to_string(c.seed) + ".jsonl";
}

}  // namespace cbo
