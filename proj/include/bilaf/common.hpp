#pragma once
// Shared error types, warning sink, and deterministic randomness helpers.
//
// All randomness in the library flows through std::mt19937_64 plus the
// hand-rolled mappings below. The standard fixes the engine's sequence, and
// keeping the value mappings in one place makes every seeded run reproducible
// bit for bit on a given platform.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bilaf {

class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be opened / read / written.
class io_error : public error {
public:
    using error::error;
};

// File opened but its contents are malformed (bad magic, truncated payload,
// NaN entries, ...). Messages name the offending byte offset or line.
class format_error : public error {
public:
    using error::error;
};

// Invalid or infeasible parameter combination.
class config_error : public error {
public:
    using error::error;
};

// Internal consistency check failed; indicates a bug, not bad input.
class invariant_error : public error {
public:
    using error::error;
};

// Optional collector for non-fatal conditions (clamped k, degenerate
// clusters, ...). Callers that do not care pass nullptr.
struct Warnings {
    std::vector<std::string> messages;

    void add(std::string msg) { messages.push_back(std::move(msg)); }

    static void note(Warnings* sink, std::string msg) {
        if (sink) sink->add(std::move(msg));
    }
};

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

// Derives a stage seed from a root seed and a fixed label, so independent
// stages draw from unrelated streams while staying reproducible.
inline std::uint64_t split_seed(std::uint64_t root, std::string_view label) {
    return detail::splitmix64(root ^ detail::fnv1a(label));
}

// Uniform in [0,1) with 53 random bits.
inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unbiased uniform integer in [0, n).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n == 0) throw invariant_error("uniform_below: empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

// Standard normal via Box-Muller. Consumes two engine values per draw; the
// second branch is discarded so the draw count per sample stays fixed.
inline double draw_normal(Rng& rng) {
    double u1 = uniform_real(rng);
    while (u1 <= 0.0) u1 = uniform_real(rng);
    const double u2 = uniform_real(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// First k entries of a seeded Fisher-Yates shuffle of [0, n).
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
    if (k > n) throw invariant_error("sample_without_replacement: k > n");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

} // namespace bilaf
