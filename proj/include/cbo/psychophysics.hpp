#pragma once

#include "cbo/harness.hpp"
#include "cbo/hyperparameters.hpp"
#include "cbo/rng.hpp"

#include <filesystem>
#include <optional>

namespace cbo {

/// Chance rate of a 26-letter forced choice.
inline constexpr double kLetterGuessRate = 1.0 / 26.0;

/// Blur in diopters of a spherico-cylindrical residual: sqrt((S^2 + (S + C)^2) / 2).
double blur(double residual_sphere, double residual_cylinder);

/// logMAR acuity log10(1 + beta^2); 0 at zero blur.
double visual_acuity(double beta);

/// Corrections x = (S, C) in diopters.
Box va_param_box();
/// Letter sizes s in logMAR.
Box va_context_box();

/// Simulated observer. The residual of a correction x is x - truth.
struct PatientModel {
    Vector truth = Vector::Zero(2);  ///< (S*, C*)
    double slope = 5.0;              ///< a, logMAR^-1, the same for every correction
    double guess_rate = kLetterGuessRate;

    double va(const Vector& x) const;
    /// gamma + (1 - gamma) Phi(a (s - VA(x))).
    double response_prob(double s, const Vector& x) const;
};

void validate(const PatientModel& patient);

/// Patient with truth drawn uniformly from [-2, 2]^2, keyed by seed.
PatientModel simulated_patient(std::uint64_t seed, double slope);

/// Response stream used for a simulated patient in run `seed`.
RngStream patient_response_stream(std::uint64_t seed);

int simulate_response(const PatientModel& patient, double s, const Vector& x, RngStream& rng);

/// Oracle for the acuity experiment. The objective is -VA(x) with maximum 0
/// and VA(x) is kept as the secondary reading. Without a patient (a live
/// observer) the objective is NaN and query() throws.
class PsychophysicsOracle final : public ExperimentOracle {
public:
    PsychophysicsOracle(std::optional<PatientModel> patient, RngStream rng);

    std::string name() const override;
    RunMode mode() const override { return RunMode::Psychophysics; }
    Box context_box() const override { return va_context_box(); }
    Box param_box() const override { return va_param_box(); }
    int query(const InputPoint& p) override;
    double objective(const Vector& x) const override;
    double objective_max() const override;
    std::optional<double> secondary(const Vector& x) const override;

    const std::optional<PatientModel>& patient() const { return patient_; }

private:
    std::optional<PatientModel> patient_;
    RngStream rng_;
};

struct SurrogatePrefitOptions {
    int responses = 1000;
    std::uint64_t seed = 5;
    /// Guess rate of the simulated observer that produces the fitting data.
    double guess_rate = kLetterGuessRate;
    HyperFitOptions fit{3, 100, 0};
    /// Directory for cached fits; empty disables the disk cache.
    std::filesystem::path cache_dir;
};

/// theta s s' + SE(x, x'), with theta and the SE parameters fitted by Laplace
/// evidence on simulated responses of a slope-`slope` patient at uniform (s, x).
/// The surrogate has no guess-rate term. Memoised per (slope, options).
KernelSpec surrogate_kernel(double slope, const SurrogatePrefitOptions& options = {});

/// Acuity the surrogate predicts at x: the s where the posterior mean crosses 0.
/// NaN when the mean does not increase with s.
double predicted_va(const LaplaceState& state, const Vector& x);

RunConfig va_run_config(const std::string& rule, std::uint64_t seed, const KernelSpec& kernel, int iterations = 260);

/// Full simulated run: patient simulated_patient(seed, slope), responses from
/// patient_response_stream(seed).
Trace run_va_experiment(const RunConfig& config, double slope);

}  // namespace cbo
