#include "cbo/benchmarks.hpp"

#include "cbo/normal.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace cbo {

namespace {

using std::numbers::pi;

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

double ackley(const Vector& x) {
    const double d = static_cast<double>(x.size());
    const double a = 20.0, b = 0.2, c = 2.0 * pi;
    return -a * std::exp(-b * std::sqrt(x.squaredNorm() / d)) - std::exp((c * x.array()).cos().sum() / d) + a +
           std::numbers::e;
}

double beale(const Vector& v) {
    const double x = v[0], y = v[1];
    return std::pow(1.5 - x + x * y, 2) + std::pow(2.25 - x + x * y * y, 2) + std::pow(2.625 - x + x * y * y * y, 2);
}

double bohachevsky(const Vector& x) {
    return x[0] * x[0] + 2.0 * x[1] * x[1] - 0.3 * std::cos(3.0 * pi * x[0]) - 0.4 * std::cos(4.0 * pi * x[1]) + 0.7;
}

double three_hump_camel(const Vector& x) {
    const double a = x[0], b = x[1];
    return 2.0 * a * a - 1.05 * std::pow(a, 4) + std::pow(a, 6) / 6.0 + a * b + b * b;
}

double six_hump_camel(const Vector& x) {
    const double a = x[0], b = x[1];
    return (4.0 - 2.1 * a * a + std::pow(a, 4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b;
}

double colville(const Vector& x) {
    return 100.0 * std::pow(x[0] * x[0] - x[1], 2) + std::pow(x[0] - 1.0, 2) + std::pow(x[2] - 1.0, 2) +
           90.0 * std::pow(x[2] * x[2] - x[3], 2) + 10.1 * (std::pow(x[1] - 1.0, 2) + std::pow(x[3] - 1.0, 2)) +
           19.8 * (x[1] - 1.0) * (x[3] - 1.0);
}

double cross_in_tray(const Vector& x) {
    const double e = std::exp(std::abs(100.0 - x.norm() / pi));
    return -1e-4 * std::pow(std::abs(std::sin(x[0]) * std::sin(x[1]) * e) + 1.0, 0.1);
}

double dixon_price(const Vector& x) {
    double f = std::pow(x[0] - 1.0, 2);
    for (Eigen::Index i = 1; i < x.size(); ++i) f += (i + 1.0) * std::pow(2.0 * x[i] * x[i] - x[i - 1], 2);
    return f;
}

double drop_wave(const Vector& x) {
    const double r2 = x.squaredNorm();
    return -(1.0 + std::cos(12.0 * std::sqrt(r2))) / (0.5 * r2 + 2.0);
}

double eggholder(const Vector& v) {
    const double x = v[0], y = v[1];
    return -(y + 47.0) * std::sin(std::sqrt(std::abs(y + x / 2.0 + 47.0))) -
           x * std::sin(std::sqrt(std::abs(x - (y + 47.0))));
}

double forrester(const Vector& x) { return std::pow(6.0 * x[0] - 2.0, 2) * std::sin(12.0 * x[0] - 4.0); }

double goldstein_price(const Vector& v) {
    const double x = v[0], y = v[1];
    const double a = 1.0 + std::pow(x + y + 1.0, 2) * (19.0 - 14.0 * x + 3.0 * x * x - 14.0 * y + 6.0 * x * y + 3.0 * y * y);
    const double b =
        30.0 + std::pow(2.0 * x - 3.0 * y, 2) * (18.0 - 32.0 * x + 12.0 * x * x + 48.0 * y - 36.0 * x * y + 27.0 * y * y);
    return a * b;
}

double griewank(const Vector& x) {
    double prod = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) prod *= std::cos(x[i] / std::sqrt(i + 1.0));
    return x.squaredNorm() / 4000.0 - prod + 1.0;
}

double gramacy_lee(const Vector& x) {
    return std::sin(10.0 * pi * x[0]) / (2.0 * x[0]) + std::pow(x[0] - 1.0, 4);
}

const Eigen::Matrix<double, 4, 6> kHartmannA6 = (Eigen::Matrix<double, 4, 6>() << 10, 3, 17, 3.5, 1.7, 8, 0.05, 10, 17,
                                                 0.1, 8, 14, 3, 3.5, 1.7, 10, 17, 8, 17, 8, 0.05, 10, 0.1, 14)
                                                    .finished();
const Eigen::Matrix<double, 4, 6> kHartmannP6 = 1e-4 * (Eigen::Matrix<double, 4, 6>() << 1312, 1696, 5569, 124, 8283,
                                                        5886, 2329, 4135, 8307, 3736, 1004, 9991, 2348, 1451, 3522,
                                                        2883, 3047, 6650, 4047, 8828, 8732, 5743, 1091, 381)
                                                           .finished();
const Eigen::Vector4d kHartmannAlpha(1.0, 1.2, 3.0, 3.2);

double hartmann_sum(const Vector& x, const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& P) {
    double f = 0.0;
    for (int i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (Eigen::Index j = 0; j < x.size(); ++j) inner += A(i, j) * std::pow(x[j] - P(i, j), 2);
        f += kHartmannAlpha[i] * std::exp(-inner);
    }
    return f;
}

double hartmann3(const Vector& x) {
    static const Matrix A = (Matrix(4, 3) << 3, 10, 30, 0.1, 10, 35, 3, 10, 30, 0.1, 10, 35).finished();
    static const Matrix P =
        1e-4 * (Matrix(4, 3) << 3689, 1170, 2673, 4699, 4387, 7470, 1091, 8732, 5547, 381, 5743, 8828).finished();
    return -hartmann_sum(x, A, P);
}

double hartmann4(const Vector& x) {
    return (1.1 - hartmann_sum(x, kHartmannA6.leftCols(4), kHartmannP6.leftCols(4))) / 0.839;
}

double hartmann6(const Vector& x) { return -hartmann_sum(x, kHartmannA6, kHartmannP6); }

double holder_table(const Vector& x) {
    return -std::abs(std::sin(x[0]) * std::cos(x[1]) * std::exp(std::abs(1.0 - x.norm() / pi)));
}

double langermann(const Vector& x) {
    static const double c[5] = {1, 2, 5, 2, 3};
    static const double A[5][2] = {{3, 5}, {5, 2}, {2, 1}, {1, 4}, {7, 9}};
    double f = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double s = std::pow(x[0] - A[i][0], 2) + std::pow(x[1] - A[i][1], 2);
        f += c[i] * std::exp(-s / pi) * std::cos(pi * s);
    }
    return f;
}

double levy(const Vector& x) {
    const Eigen::Index d = x.size();
    auto w = [&](Eigen::Index i) { return 1.0 + (x[i] - 1.0) / 4.0; };
    double f = std::pow(std::sin(pi * w(0)), 2);
    for (Eigen::Index i = 0; i + 1 < d; ++i)
        f += std::pow(w(i) - 1.0, 2) * (1.0 + 10.0 * std::pow(std::sin(pi * w(i) + 1.0), 2));
    return f + std::pow(w(d - 1) - 1.0, 2) * (1.0 + std::pow(std::sin(2.0 * pi * w(d - 1)), 2));
}

double levy13(const Vector& x) {
    return std::pow(std::sin(3.0 * pi * x[0]), 2) + std::pow(x[0] - 1.0, 2) * (1.0 + std::pow(std::sin(3.0 * pi * x[1]), 2)) +
           std::pow(x[1] - 1.0, 2) * (1.0 + std::pow(std::sin(2.0 * pi * x[1]), 2));
}

double perm0(const Vector& x) {
    const double beta = 10.0;
    const Eigen::Index d = x.size();
    double f = 0.0;
    for (Eigen::Index i = 1; i <= d; ++i) {
        double inner = 0.0;
        for (Eigen::Index j = 1; j <= d; ++j)
            inner += (j + beta) * (std::pow(x[j - 1], double(i)) - 1.0 / std::pow(double(j), double(i)));
        f += inner * inner;
    }
    return f;
}

double perm_d_beta(const Vector& x) {
    const double beta = 0.5;
    const Eigen::Index d = x.size();
    double f = 0.0;
    for (Eigen::Index i = 1; i <= d; ++i) {
        double inner = 0.0;
        for (Eigen::Index j = 1; j <= d; ++j)
            inner += (std::pow(double(j), double(i)) + beta) * (std::pow(x[j - 1] / j, double(i)) - 1.0);
        f += inner * inner;
    }
    return f;
}

double powell(const Vector& x) {
    double f = 0.0;
    for (Eigen::Index i = 0; i + 3 < x.size(); i += 4) {
        f += std::pow(x[i] + 10.0 * x[i + 1], 2) + 5.0 * std::pow(x[i + 2] - x[i + 3], 2) +
             std::pow(x[i + 1] - 2.0 * x[i + 2], 4) + 10.0 * std::pow(x[i] - x[i + 3], 4);
    }
    return f;
}

double rosenbrock(const Vector& x) {
    double f = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
        f += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(x[i] - 1.0, 2);
    return f;
}

double rotated_hyper_ellipsoid(const Vector& x) {
    double f = 0.0, partial = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        partial += x[i] * x[i];
        f += partial;
    }
    return f;
}

double schaffer_n4(const Vector& x) {
    const double a = std::cos(std::sin(std::abs(x[0] * x[0] - x[1] * x[1])));
    return 0.5 + (a * a - 0.5) / std::pow(1.0 + 0.001 * x.squaredNorm(), 2);
}

double schwefel(const Vector& x) {
    return 418.9829 * static_cast<double>(x.size()) - (x.array() * x.array().abs().sqrt().sin()).sum();
}

double shekel(const Vector& x) {
    static const double beta[10] = {0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};
    static const double C[4][10] = {{4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
                                    {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6},
                                    {4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
                                    {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6}};
    double f = 0.0;
    for (int i = 0; i < 10; ++i) {
        double s = beta[i];
        for (int j = 0; j < 4; ++j) s += std::pow(x[j] - C[j][i], 2);
        f -= 1.0 / s;
    }
    return f;
}

double shubert(const Vector& x) {
    double f = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double s = 0.0;
        for (int j = 1; j <= 5; ++j) s += j * std::cos((j + 1.0) * x[i] + j);
        f *= s;
    }
    return f;
}

double sphere(const Vector& x) { return x.squaredNorm(); }

double sum_squares(const Vector& x) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) f += (i + 1.0) * x[i] * x[i];
    return f;
}

double trid(const Vector& x) {
    double f = (x.array() - 1.0).square().sum();
    for (Eigen::Index i = 1; i < x.size(); ++i) f -= x[i] * x[i - 1];
    return f;
}

double ursem_waves(const Vector& x) {
    const double a = x[0], b = x[1];
    return -0.9 * a * a + (b * b - 4.5 * b * b) * a * b + 4.7 * std::cos(3.0 * a - b * b * (2.0 + a)) * std::sin(2.5 * pi * a);
}

struct Entry {
    const char* name;
    KernelFamily family;
    Box box;
    double (*f)(const Vector&);
    Vector optimum;
    double value;
    double tolerance;
};

std::vector<Entry> make_table() {
    using K = KernelFamily;
    const auto SE = K::SquaredExponential, M32 = K::Matern32, M52 = K::Matern52;
    auto cube = [](int d, double lo, double hi) { return Box::cube(d, lo, hi); };
    return {
        {"ackley", M32, cube(2, -32.768, 32.768), ackley, vec({0, 0}), 0.0, 1e-6},
        {"beale", SE, cube(2, -4.5, 4.5), beale, vec({3, 0.5}), 0.0, 1e-6},
        {"bohachevsky", SE, cube(2, -100, 100), bohachevsky, vec({0, 0}), 0.0, 1e-6},
        {"three-hump-camel", M52, cube(2, -5, 5), three_hump_camel, vec({0, 0}), 0.0, 1e-6},
        {"six-hump-camel", SE, Box(vec({-3, -2}), vec({3, 2})), six_hump_camel, vec({0.0898420136830, -0.7126564032704}),
         -1.0316, 5e-5},
        {"colville", M52, cube(4, -10, 10), colville, vec({1, 1, 1, 1}), 0.0, 1e-6},
        {"cross-in-tray", M52, cube(2, -10, 10), cross_in_tray, vec({1.349406608602, 1.349406608602}), -2.06261, 5e-6},
        {"dixon-price", M52, cube(2, -5, 5), dixon_price, vec({1.0, std::sqrt(0.5)}), 0.0, 1e-6},
        {"drop-wave", M32, cube(2, -5.12, 5.12), drop_wave, vec({0, 0}), -1.0, 1e-6},
        {"eggholder", SE, cube(2, -512, 512), eggholder, vec({512, 404.2318050}), -959.6407, 5e-5},
        {"forrester", SE, cube(1, 0, 1), forrester, vec({0.7572487144}), -6.02074, 5e-6},
        {"goldstein-price", SE, cube(2, -2, 2), goldstein_price, vec({0, -1}), 3.0, 1e-6},
        {"griewank", SE, cube(2, -600, 600), griewank, vec({0, 0}), 0.0, 1e-6},
        {"gramacy-lee", SE, cube(1, 0.5, 2.5), gramacy_lee, vec({0.548563444114526}), -0.869011134989500, 1e-6},
        {"hartmann-3d", SE, cube(3, 0, 1), hartmann3, vec({0.1145888, 0.5556489, 0.8525470}), -3.86278, 5e-6},
        {"hartmann-4d", SE, cube(4, 0, 1), hartmann4, vec({0.18739527, 0.19415153, 0.55791778, 0.26477962}), -3.13449,
         5e-6},
        {"hartmann-6d", SE, cube(6, 0, 1), hartmann6,
         vec({0.20168952, 0.15001069, 0.47687398, 0.27533243, 0.31165162, 0.65730054}), -3.32237, 5e-6},
        {"holder", SE, cube(2, -10, 10), holder_table, vec({8.05502347, 9.66459003}), -19.2085, 5e-5},
        {"langer", M32, cube(2, 0, 10), langermann, vec({2.79340221, 1.59723250}), -4.15581, 5e-6},
        {"levy", SE, cube(2, -10, 10), levy, vec({1, 1}), 0.0, 1e-6},
        {"levy-n13", M52, cube(2, -10, 10), levy13, vec({1, 1}), 0.0, 1e-6},
        {"perm-0-d-beta", SE, cube(2, -2, 2), perm0, vec({1.0, 0.5}), 0.0, 1e-6},
        {"perm-d-beta", SE, cube(2, -2, 2), perm_d_beta, vec({1.0, 2.0}), 0.0, 1e-6},
        {"powell", SE, cube(4, -4, 5), powell, vec({0, 0, 0, 0}), 0.0, 1e-6},
        {"rosenbrock", SE, cube(2, -2.048, 2.048), rosenbrock, vec({1, 1}), 0.0, 1e-6},
        {"rotated-hyper-ellipsoid", M32, cube(2, -65.536, 65.536), rotated_hyper_ellipsoid, vec({0, 0}), 0.0, 1e-6},
        {"schaffer-n4", M32, cube(2, -100, 100), schaffer_n4, vec({0.0, 1.253131828}), 0.292579, 5e-7},
        {"schwefel", SE, cube(2, -500, 500), schwefel, vec({420.9687, 420.9687}), 0.0, 5e-5},
        {"shekel", SE, cube(4, 0, 10), shekel, vec({4.00074687, 3.99950948, 4.00074687, 3.99950948}), -10.5364, 5e-5},
        {"schubert", M32, cube(2, 0, 10), shubert, vec({5.4828642, 4.85805688}), -186.7309, 5e-5},
        {"sphere", SE, cube(2, -5.12, 5.12), sphere, vec({0, 0}), 0.0, 1e-6},
        {"sum-squares", SE, cube(2, -10, 10), sum_squares, vec({0, 0}), 0.0, 1e-6},
        {"trid", SE, cube(2, -4, 4), trid, vec({2, 2}), -2.0, 1e-6},
        {"ursem-waves", SE, Box(vec({-1.2, -0.9}), vec({1.2, 1.2})), ursem_waves, vec({1.2, 1.2}), -8.5536, 5e-5},
    };
}

const std::map<std::string, std::string>& aliases() {
    static const std::map<std::string, std::string> a{
        {"forrester-et-al-2008", "forrester"},
        {"forrester-et-al", "forrester"},
        {"gramacy-and-lee-2012", "gramacy-lee"},
        {"gramacy-and-lee", "gramacy-lee"},
        {"gramacy-lee-2012", "gramacy-lee"},
        {"hartmann-3-d", "hartmann-3d"},
        {"hartmann-3", "hartmann-3d"},
        {"hartmann-4", "hartmann-4d"},
        {"hartmann-6", "hartmann-6d"},
        {"holder-table", "holder"},
        {"langermann", "langer"},
        {"levy-n-13", "levy-n13"},
        {"levy-13", "levy-n13"},
        {"perm-0-d-b", "perm-0-d-beta"},
        {"perm-d-b", "perm-d-beta"},
        {"perm-0-d", "perm-0-d-beta"},
        {"perm-d", "perm-d-beta"},
        {"schaffer-n-4", "schaffer-n4"},
        {"schaffer-4", "schaffer-n4"},
        {"shubert", "schubert"},
        {"rotated-hyper-ellipsoid-function", "rotated-hyper-ellipsoid"},
        {"ursem", "ursem-waves"},
    };
    return a;
}

struct Registry {
    std::vector<BenchmarkSpec> specs;
    std::vector<std::unique_ptr<std::once_flag>> ready;
    std::map<std::string, std::size_t> index;
    std::vector<std::string> names;
};

Registry& registry() {
    static Registry r = [] {
        Registry reg;
        for (auto& e : make_table()) {
            BenchmarkSpec s;
            s.name = e.name;
            s.box = e.box;
            s.family = e.family;
            s.raw = e.f;
            s.optimum = e.optimum;
            s.optimum_value = e.value;
            s.optimum_tolerance = e.tolerance;
            reg.index[s.name] = reg.specs.size();
            reg.names.push_back(s.name);
            reg.specs.push_back(std::move(s));
            reg.ready.push_back(std::make_unique<std::once_flag>());
        }
        return reg;
    }();
    return r;
}

}  // namespace

double BenchmarkSpec::value(const Vector& x) const {
    if (x.size() != box.dim()) throw DimensionError(name + ": expected " + std::to_string(box.dim()) + " coordinates");
    if (!box.contains(x, 1e-12 * (1.0 + box.width().maxCoeff())))
        throw OutOfBoxError(name + ": point outside the search box");
    return -raw(x);
}

double BenchmarkSpec::standardized(const Vector& x) const { return (value(x) - mean) / stddev; }

const std::vector<std::string>& benchmark_names() { return registry().names; }

std::string canonical_benchmark_name(const std::string& name) {
    std::string out;
    bool dash = false;
    for (char ch : name) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            if (dash && !out.empty()) out += '-';
            out += static_cast<char>(std::tolower(c));
            dash = false;
        } else if (ch != '$' && ch != '\\' && (c & 0x80) == 0) {
            dash = true;
        }
    }
    if (auto it = aliases().find(out); it != aliases().end()) return it->second;
    return out;
}

const BenchmarkSpec& benchmark(const std::string& name) {
    Registry& r = registry();
    const std::string key = canonical_benchmark_name(name);
    const auto it = r.index.find(key);
    if (it == r.index.end()) throw UnknownBenchmarkError("unknown benchmark: " + name);
    BenchmarkSpec& s = r.specs[it->second];
    std::call_once(*r.ready[it->second], [&s] {
        const auto st = standardize([&s](const Vector& x) { return -s.raw(x); }, s.box, kStandardizationSamples);
        s.mean = st.mean;
        s.stddev = st.stddev;
    });
    return s;
}

double eval_benchmark(const std::string& name, const Vector& x) {
    Registry& r = registry();
    const auto it = r.index.find(canonical_benchmark_name(name));
    if (it == r.index.end()) throw UnknownBenchmarkError("unknown benchmark: " + name);
    return r.specs[it->second].value(x);
}

Standardization standardize(const std::function<double(const Vector&)>& g, const Box& box, int n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("standardization needs at least two samples");
    RngStream rng(seed, "standardize");
    // Welford accumulation.
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = g(rng.uniform_in(box));
        const double delta = v - mean;
        mean += delta / (i + 1);
        m2 += delta * (v - mean);
    }
    const double sd = std::sqrt(m2 / (n - 1));
    if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) throw std::domain_error("cannot standardize a constant function");
    return {mean, sd};
}

// ---------------------------------------------------------------------------

ContextualOracle::ContextualOracle(const BenchmarkSpec& spec, RngStream rng) : spec_(&spec), rng_(std::move(rng)) {}

void ContextualOracle::check(const Vector& s, const Vector& x) const {
    if (s.size() != 1) throw DimensionError("benchmark context is one-dimensional");
    if (!(s[0] >= 0.0 && s[0] <= 1.0)) throw OutOfBoxError("context outside [0, 1]");
    if (!spec_->box.contains(x, 1e-12 * (1.0 + spec_->box.width().maxCoeff())))
        throw OutOfBoxError(spec_->name + ": point outside the search box");
}

namespace {

// Phi(z) evaluated so that probit(z) + probit(-z) == 1 in floating point.
double symmetric_probit(double z) { return z > 0.0 ? 1.0 - normal_cdf(-z) : normal_cdf(z); }

}  // namespace

double ContextualOracle::success_probability(const Vector& s, const Vector& x) const {
    check(s, x);
    return symmetric_probit(s[0] * spec_->standardized(x));
}

double ContextualOracle::duel_probability(const Vector& s, const Vector& x, const Vector& x2) const {
    check(s, x);
    check(s, x2);
    return symmetric_probit(s[0] * (spec_->standardized(x) - spec_->standardized(x2)));
}

int ContextualOracle::binary_query(const Vector& s, const Vector& x) {
    return rng_.bernoulli(success_probability(s, x)) ? 1 : 0;
}

int ContextualOracle::duel_query(const Vector& s, const Vector& x, const Vector& x2) {
    return rng_.bernoulli(duel_probability(s, x, x2)) ? 1 : 0;
}

// ---------------------------------------------------------------------------

namespace {

std::string prefit_key(const BenchmarkSpec& spec, const PrefitOptions& o) {
    std::ostringstream key;
    key << spec.name << "-n" << o.samples << "-seed" << o.seed << "-r" << o.fit.restarts << "-it"
        << o.fit.max_iterations << "-fs" << o.fit.seed;
    return key.str();
}

}  // namespace

KernelSpec prefit_benchmark_kernel(const BenchmarkSpec& spec, const PrefitOptions& options) {
    static std::mutex mutex;
    static std::map<std::string, KernelSpec> memo;
    const std::string key = prefit_key(spec, options);
    {
        std::lock_guard lock(mutex);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
    }
    const std::filesystem::path file = options.cache_dir.empty() ? std::filesystem::path() : options.cache_dir / (key + ".json");
    if (!file.empty() && std::filesystem::exists(file)) {
        std::ifstream in(file);
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (!j.is_discarded() && j.contains("log_hyperparameters")) {
            const auto logs = j["log_hyperparameters"].get<std::vector<double>>();
            const KernelSpec start = stationary_kernel(spec.family, Vector::Ones(spec.dim()), 1.0);
            const KernelSpec k = with_log_hyperparameters(start, Eigen::Map<const Vector>(logs.data(), logs.size()));
            std::lock_guard lock(mutex);
            return memo.emplace(key, k).first->second;
        }
    }

    RngStream rng(options.seed, "prefit:" + spec.name);
    std::vector<InputPoint> pts;
    Vector y(options.samples);
    for (int i = 0; i < options.samples; ++i) {
        pts.push_back(make_point(Vector(), rng.uniform_in(spec.box)));
        y[i] = spec.standardized(pts.back().x);
    }
    const Vector width = spec.box.width();
    const KernelSpec initial = stationary_kernel(spec.family, 0.2 * width, 1.0);
    const auto np = log_hyperparameters(initial).size();
    HyperBounds bounds{Vector(np + 1), Vector(np + 1)};
    bounds.lower.head(spec.dim()) = 0.01 * width;
    bounds.upper.head(spec.dim()) = 2.0 * width;
    bounds.lower[spec.dim()] = 0.05;
    bounds.upper[spec.dim()] = 20.0;
    bounds.lower[np] = 1e-6;
    bounds.upper[np] = 1.0;
    const RegressionFit fit = fit_hyperparameters(pts, y, initial, bounds, options.fit);

    if (!file.empty()) {
        std::filesystem::create_directories(options.cache_dir);
        const Vector logs = log_hyperparameters(fit.kernel);
        nlohmann::json j;
        j["benchmark"] = spec.name;
        j["family"] = to_string(spec.family);
        j["log_hyperparameters"] = std::vector<double>(logs.data(), logs.data() + logs.size());
        j["noise_variance"] = fit.noise_variance;
        j["log_likelihood"] = fit.log_likelihood;
        std::ofstream(file) << j.dump(2) << '\n';
    }
    std::lock_guard lock(mutex);
    return memo.emplace(key, fit.kernel).first->second;
}

}  // namespace cbo
