#pragma once

#include "cbo/hyperparameters.hpp"
#include "cbo/kernel.hpp"
#include "cbo/rng.hpp"
#include "cbo/types.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace cbo {

class UnknownBenchmarkError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class OutOfBoxError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A synthetic objective. `raw` is the published minimisation form; the
/// optimisers see g = (-raw - mean) / stddev.
struct BenchmarkSpec {
    std::string name;
    Box box;
    KernelFamily family = KernelFamily::SquaredExponential;
    std::function<double(const Vector&)> raw;
    /// A published global minimiser and the published minimum of `raw`.
    Vector optimum;
    double optimum_value = 0.0;
    /// Half a unit in the last published digit (1e-6 for exact optima).
    double optimum_tolerance = 1e-6;
    double mean = 0.0;    ///< of -raw under the uniform distribution on the box
    double stddev = 1.0;  ///< same, > 0

    Eigen::Index dim() const { return box.dim(); }
    /// -raw(x), after checking the box.
    double value(const Vector& x) const;
    /// (value(x) - mean) / stddev.
    double standardized(const Vector& x) const;
    /// Largest standardized value, attained at `optimum`.
    double standardized_max() const { return (-raw(optimum) - mean) / stddev; }
};

/// Canonical names in table order.
const std::vector<std::string>& benchmark_names();

/// Lower-cases, hyphenates and resolves aliases such as "Forrester et al (2008)".
std::string canonical_benchmark_name(const std::string& name);

/// Registry lookup; standardization constants are computed on first use.
const BenchmarkSpec& benchmark(const std::string& name);

/// Maximisation-oriented value -raw(x). Throws on unknown names and points
/// outside the box.
double eval_benchmark(const std::string& name, const Vector& x);

struct Standardization {
    double mean = 0.0;
    double stddev = 1.0;
};

inline constexpr std::uint64_t kStandardizationSeed = 20221114;
inline constexpr int kStandardizationSamples = 1000000;

/// Sample mean and standard deviation of g over n uniform draws in the box.
/// Throws std::domain_error when g is constant.
Standardization standardize(const std::function<double(const Vector&)>& g, const Box& box, int n,
                            std::uint64_t seed = kStandardizationSeed);

/// Contextual wrapper f(s, x) = s g(x) with the probit link, on S = [0, 1].
class ContextualOracle {
public:
    ContextualOracle(const BenchmarkSpec& spec, RngStream rng);

    const BenchmarkSpec& spec() const { return *spec_; }
    static Box context_box() { return Box::cube(1, 0.0, 1.0); }

    /// Phi(s g(x)).
    double success_probability(const Vector& s, const Vector& x) const;
    /// Phi(s (g(x) - g(x2))); the two orders sum to exactly 1.
    double duel_probability(const Vector& s, const Vector& x, const Vector& x2) const;
    int binary_query(const Vector& s, const Vector& x);
    int duel_query(const Vector& s, const Vector& x, const Vector& x2);

private:
    void check(const Vector& s, const Vector& x) const;

    const BenchmarkSpec* spec_;
    RngStream rng_;
};

struct PrefitOptions {
    int samples = 1000;
    std::uint64_t seed = 7;
    HyperFitOptions fit{3, 100, 0};
    /// Directory for cached fits; empty disables the disk cache.
    std::filesystem::path cache_dir;
};

/// Base kernel on x for the benchmark's designated family, fitted by GP
/// regression maximum likelihood on standardized values at uniform samples.
/// Results are memoised per (name, options) and optionally cached on disk.
KernelSpec prefit_benchmark_kernel(const BenchmarkSpec& spec, const PrefitOptions& options = {});

}  // namespace cbo
