#pragma once

#include "cbo/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace cbo {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : tag) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
    return h;
}

/// Derive an independent stream key from a base seed and a path of counters.
/// Streams keyed by (seed, purpose, iteration, ...) do not depend on the order
/// in which other streams were consumed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                                 std::initializer_list<std::uint64_t> counters = {}) {
    std::uint64_t h = mix64(seed ^ hash_tag(purpose));
    for (auto c : counters) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

class RngStream {
public:
    explicit RngStream(std::uint64_t key = 0) : engine_(key) {}
    RngStream(std::uint64_t seed, std::string_view purpose, std::initializer_list<std::uint64_t> counters = {})
        : engine_(derive_seed(seed, purpose, counters)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    bool bernoulli(double p) { return uniform() < p; }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    std::uint64_t next_key() { return engine_(); }

    Vector normal_vector(Eigen::Index n) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }
    Vector uniform_in(const Box& box) {
        Vector u(box.dim());
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = uniform();
        return box.from_unit(u);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace cbo
