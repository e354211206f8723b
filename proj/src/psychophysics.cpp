#include "cbo/psychophysics.hpp"

#include "cbo/json_io.hpp"
#include "cbo/normal.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace cbo {

double blur(double rs, double rc) { return std::sqrt(0.5 * (rs * rs + (rs + rc) * (rs + rc))); }

double visual_acuity(double beta) { return std::log10(1.0 + beta * beta); }

Box va_param_box() { return Box::cube(2, -4.0, 4.0); }

Box va_context_box() { return Box::cube(1, -1.0, 2.0); }

double PatientModel::va(const Vector& x) const {
    if (x.size() != 2) throw DimensionError("a correction has two components (S, C)");
    return visual_acuity(blur(x[0] - truth[0], x[1] - truth[1]));
}

double PatientModel::response_prob(double s, const Vector& x) const {
    return guess_rate + (1.0 - guess_rate) * normal_cdf(slope * (s - va(x)));
}

void validate(const PatientModel& p) {
    if (p.truth.size() != 2 || !p.truth.allFinite()) throw std::invalid_argument("patient truth must be (S*, C*)");
    if (!(p.slope > 0.0) || !std::isfinite(p.slope)) throw std::invalid_argument("psychometric slope must be positive");
    if (!(p.guess_rate > 0.0 && p.guess_rate < 1.0)) throw std::invalid_argument("guess rate must lie in (0, 1)");
}

PatientModel simulated_patient(std::uint64_t seed, double slope) {
    RngStream rng(seed, "patient-truth");
    PatientModel p;
    p.truth = rng.uniform_in(Box::cube(2, -2.0, 2.0));
    p.slope = slope;
    validate(p);
    return p;
}

RngStream patient_response_stream(std::uint64_t seed) { return RngStream(seed, "patient-responses"); }

int simulate_response(const PatientModel& patient, double s, const Vector& x, RngStream& rng) {
    return rng.bernoulli(patient.response_prob(s, x)) ? 1 : 0;
}

// ---------------------------------------------------------------------------

PsychophysicsOracle::PsychophysicsOracle(std::optional<PatientModel> patient, RngStream rng)
    : patient_(std::move(patient)), rng_(std::move(rng)) {
    if (patient_) validate(*patient_);
}

std::string PsychophysicsOracle::name() const {
    if (!patient_) return "psychophysics-live";
    std::ostringstream s;
    s << "psychophysics-slope" << patient_->slope;
    return s.str();
}

int PsychophysicsOracle::query(const InputPoint& p) {
    if (!patient_) throw std::logic_error("a live observer answers through the session");
    if (p.is_duel()) throw std::invalid_argument("acuity trials are single points");
    if (p.s.size() != 1) throw DimensionError("letter size is one-dimensional");
    if (!va_context_box().contains(p.s, 1e-12)) throw OutOfBoxError("letter size outside [-1, 2] logMAR");
    if (!va_param_box().contains(p.x, 1e-12)) throw OutOfBoxError("correction outside [-4, 4] diopters");
    return simulate_response(*patient_, p.s[0], p.x, rng_);
}

double PsychophysicsOracle::objective(const Vector& x) const {
    return patient_ ? -patient_->va(x) : std::numeric_limits<double>::quiet_NaN();
}

double PsychophysicsOracle::objective_max() const {
    return patient_ ? 0.0 : std::numeric_limits<double>::quiet_NaN();
}

std::optional<double> PsychophysicsOracle::secondary(const Vector& x) const {
    if (!patient_) return std::nullopt;
    return patient_->va(x);
}

// ---------------------------------------------------------------------------

KernelSpec surrogate_kernel(double slope, const SurrogatePrefitOptions& o) {
    static std::mutex mutex;
    static std::map<std::string, KernelSpec> memo;
    std::ostringstream key_stream;
    key_stream.precision(17);
    key_stream << "va-slope" << slope << "-n" << o.responses << "-seed" << o.seed << "-g" << o.guess_rate << "-r" << o.fit.restarts << "-it"
               << o.fit.max_iterations << "-fs" << o.fit.seed;
    const std::string key = key_stream.str();
    {
        std::lock_guard lock(mutex);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
    }
    const std::filesystem::path file = o.cache_dir.empty() ? std::filesystem::path() : o.cache_dir / (key + ".json");
    if (!file.empty() && std::filesystem::exists(file)) {
        std::ifstream in(file);
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (!j.is_discarded() && j.contains("kernel")) {
            const KernelSpec k = json::to_kernel(j["kernel"]);
            std::lock_guard lock(mutex);
            return memo.emplace(key, k).first->second;
        }
    }

    PatientModel patient = simulated_patient(o.seed, slope);
    patient.guess_rate = o.guess_rate;
    RngStream rng(o.seed, "surrogate-prefit");
    std::vector<BinaryObservation> data;
    for (int i = 0; i < o.responses; ++i) {
        const Vector s = rng.uniform_in(va_context_box());
        const Vector x = rng.uniform_in(va_param_box());
        const int c = simulate_response(patient, s[0], x, rng);
        data.push_back({make_point(s, x), c});
    }
    const KernelSpec initial = linear_context_sum(slope * slope, squared_exponential(Vector::Constant(2, 2.0), 4.0));
    HyperBounds bounds{Vector(4), Vector(4)};
    bounds.lower << 1e-2, 0.1, 0.1, 1e-2;
    bounds.upper << 1e3, 16.0, 16.0, 1e3;
    const ClassificationFit fit = fit_hyperparameters(data, initial, bounds, o.fit);

    if (!file.empty()) {
        std::filesystem::create_directories(o.cache_dir);
        nlohmann::json j;
        j["slope"] = slope;
        j["kernel"] = json::kernel(fit.kernel);
        j["log_evidence"] = json::number(fit.log_evidence);
        std::ofstream(file) << j.dump(2) << '\n';
    }
    std::lock_guard lock(mutex);
    return memo.emplace(key, fit.kernel).first->second;
}

double predicted_va(const LaplaceState& state, const Vector& x) {
    const double h = state.mean(make_point(Vector::Zero(1), x));
    const double c = state.mean(make_point(Vector::Ones(1), x)) - h;
    if (!(c > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return -h / c;
}

RunConfig va_run_config(const std::string& rule, std::uint64_t seed, const KernelSpec& kernel, int iterations) {
    RunConfig c;
    c.rule = rule;
    c.benchmark = "psychophysics";
    c.mode = RunMode::Psychophysics;
    c.iterations = iterations;
    c.seed = seed;
    c.kernel = kernel;
    return c;
}

Trace run_va_experiment(const RunConfig& config, double slope) {
    PsychophysicsOracle oracle(simulated_patient(config.seed, slope), patient_response_stream(config.seed));
    return run_experiment(config, oracle);
}

}  // namespace cbo
