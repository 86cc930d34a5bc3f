#pragma once
// Comparison selectors over the same feature-pool interface: uniform random,
// farthest-distance sampling (k-center greedy), and Lloyd k-means with
// nearest-to-centroid extraction.

#include "bilaf/cluster_geometry.hpp"
#include "bilaf/common.hpp"
#include "bilaf/feature_store.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

namespace bilaf {

enum class BaselineMethod { random, fds, kmeans };

struct BaselineConfig {
    BaselineMethod method = BaselineMethod::random;
    std::size_t budget = 100;
    std::uint64_t seed = 0;
    std::size_t kmeans_max_iters = 100;
    double kmeans_tol = 1e-6;
};

namespace detail {

inline void check_budget(const FeaturePool& pool, std::size_t budget) {
    if (budget < 1) throw config_error("budget must be at least 1");
    if (budget > pool.n)
        throw config_error("budget " + std::to_string(budget) + " exceeds pool size " +
                           std::to_string(pool.n));
}

} // namespace detail

inline std::vector<std::size_t> select_random(const FeaturePool& pool, const BaselineConfig& cfg) {
    detail::check_budget(pool, cfg.budget);
    Rng rng(cfg.seed);
    return sample_without_replacement(rng, pool.n, cfg.budget);
}

// k-center greedy: seeded first pick, then repeatedly the sample farthest
// from the current selections (ties -> lower index).
inline std::vector<std::size_t> select_fds(const FeaturePool& pool, const BaselineConfig& cfg) {
    detail::check_budget(pool, cfg.budget);
    Rng rng(cfg.seed);
    std::vector<std::size_t> selected;
    selected.reserve(cfg.budget);
    selected.push_back(static_cast<std::size_t>(uniform_below(rng, pool.n)));

    std::vector<double> min_dist(pool.n);
    for (std::size_t i = 0; i < pool.n; ++i) min_dist[i] = euclidean(pool, i, selected[0]);
    min_dist[selected[0]] = -1.0; // sentinel: already selected

    while (selected.size() < cfg.budget) {
        std::size_t best = pool.n;
        for (std::size_t i = 0; i < pool.n; ++i) {
            if (min_dist[i] < 0.0) continue;
            if (best == pool.n || min_dist[i] > min_dist[best]) best = i;
        }
        selected.push_back(best);
        min_dist[best] = -1.0;
        for (std::size_t i = 0; i < pool.n; ++i) {
            if (min_dist[i] < 0.0) continue;
            min_dist[i] = std::min(min_dist[i], euclidean(pool, i, best));
        }
    }
    return selected;
}

// Lloyd iterations seeded from distinct data points; empty clusters are
// re-seeded at the point currently farthest from its centroid. Returns, for
// each centroid, the nearest pool index, de-duplicated by next-nearest
// substitution. objective_trace, when given, receives the within-cluster sum
// of squares after each assignment step.
inline std::vector<std::size_t> select_kmeans(const FeaturePool& pool, const BaselineConfig& cfg,
                                              std::vector<double>* objective_trace = nullptr) {
    detail::check_budget(pool, cfg.budget);
    const std::size_t b = cfg.budget, d = pool.dim, n = pool.n;
    Rng rng(cfg.seed);
    const std::vector<std::size_t> init = sample_without_replacement(rng, n, b);

    std::vector<double> centroids(b * d);
    for (std::size_t j = 0; j < b; ++j) {
        const float* f = pool.row(init[j]);
        for (std::size_t c = 0; c < d; ++c) centroids[j * d + c] = static_cast<double>(f[c]);
    }

    std::vector<std::size_t> assign(n, 0);
    std::vector<double> point_sq(n, 0.0);
    for (std::size_t iter = 0; iter < cfg.kmeans_max_iters; ++iter) {
        // assignment
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const float* f = pool.row(i);
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_j = 0;
            for (std::size_t j = 0; j < b; ++j) {
                double sq = 0.0;
                const double* cen = centroids.data() + j * d;
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = static_cast<double>(f[c]) - cen[c];
                    sq += diff * diff;
                }
                if (sq < best) {
                    best = sq;
                    best_j = j;
                }
            }
            assign[i] = best_j;
            point_sq[i] = best;
            objective += best;
        }
        if (objective_trace) objective_trace->push_back(objective);

        // update
        std::vector<double> sums(b * d, 0.0);
        std::vector<std::size_t> counts(b, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const float* f = pool.row(i);
            double* s = sums.data() + assign[i] * d;
            for (std::size_t c = 0; c < d; ++c) s[c] += static_cast<double>(f[c]);
            counts[assign[i]] += 1;
        }
        double max_shift_sq = 0.0;
        std::vector<char> reseeded_point(n, 0);
        for (std::size_t j = 0; j < b; ++j) {
            double* cen = centroids.data() + j * d;
            if (counts[j] == 0) {
                // take the point farthest from its centroid
                std::size_t far = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (reseeded_point[i]) continue;
                    if (far == n || point_sq[i] > point_sq[far]) far = i;
                }
                reseeded_point[far] = 1;
                const float* f = pool.row(far);
                double shift_sq = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double next = static_cast<double>(f[c]);
                    const double diff = next - cen[c];
                    shift_sq += diff * diff;
                    cen[c] = next;
                }
                max_shift_sq = std::max(max_shift_sq, shift_sq);
                continue;
            }
            double shift_sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double next = sums[j * d + c] / static_cast<double>(counts[j]);
                const double diff = next - cen[c];
                shift_sq += diff * diff;
                cen[c] = next;
            }
            max_shift_sq = std::max(max_shift_sq, shift_sq);
        }
        if (std::sqrt(max_shift_sq) < cfg.kmeans_tol) break;
    }

    // nearest pool point per centroid, de-duplicated by next-nearest
    std::vector<char> taken(n, 0);
    std::vector<std::size_t> selected;
    selected.reserve(b);
    for (std::size_t j = 0; j < b; ++j) {
        const double* cen = centroids.data() + j * d;
        std::size_t best = n;
        double best_sq = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const float* f = pool.row(i);
            double sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = static_cast<double>(f[c]) - cen[c];
                sq += diff * diff;
            }
            if (sq < best_sq) {
                best_sq = sq;
                best = i;
            }
        }
        if (best == n) throw invariant_error("select_kmeans: ran out of points to assign");
        taken[best] = 1;
        selected.push_back(best);
    }
    return selected;
}

inline std::vector<std::size_t> run_baseline(const FeaturePool& pool, const BaselineConfig& cfg) {
    switch (cfg.method) {
        case BaselineMethod::random: return select_random(pool, cfg);
        case BaselineMethod::fds: return select_fds(pool, cfg);
        case BaselineMethod::kmeans: return select_kmeans(pool, cfg);
    }
    throw invariant_error("unknown baseline method");
}

} // namespace bilaf
