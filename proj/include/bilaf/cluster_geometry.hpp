#pragma once
// Stage-2 step 1 plus shared geometry: pseudo-class assignment, density
// distance, and exact k-nearest-neighbor queries. All distances are
// brute-force Euclidean; ties break toward the lower pool index so every
// result is reproducible.

#include "bilaf/activeft.hpp"
#include "bilaf/common.hpp"
#include "bilaf/feature_store.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

namespace bilaf {

struct PseudoCluster {
    std::size_t center_index = 0;
    std::vector<std::size_t> member_indices; // ascending pool index

    std::size_t size() const { return member_indices.size(); }
};

struct DensityProfile {
    std::vector<double> rho;     // one entry per subset member, >= 0
    std::size_t k_neighbors = 0; // effective k after clamping
};

inline double euclidean(const FeaturePool& pool, std::size_t a, std::size_t b) {
    const float* ra = pool.row(a);
    const float* rb = pool.row(b);
    double sq = 0.0;
    for (std::size_t j = 0; j < pool.dim; ++j) {
        const double diff = static_cast<double>(ra[j]) - static_cast<double>(rb[j]);
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

// Assigns every sample to its nearest center (ties -> lowest center list
// position). Centers always land in their own cluster, so the clusters
// partition [0, N) and each contains its center.
inline std::vector<PseudoCluster> assign_clusters(const FeaturePool& pool, const CoreSet& cores) {
    const std::size_t k = cores.size();
    if (k == 0) throw config_error("assign_clusters: empty core set");
    std::vector<std::size_t> center_of(pool.n, k); // k = not a center
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t idx = cores.center_indices[c];
        if (idx >= pool.n) throw config_error("assign_clusters: center index out of range");
        if (center_of[idx] != k) throw config_error("assign_clusters: duplicate center index");
        center_of[idx] = c;
    }

    std::vector<PseudoCluster> clusters(k);
    for (std::size_t c = 0; c < k; ++c) clusters[c].center_index = cores.center_indices[c];
    for (std::size_t i = 0; i < pool.n; ++i) {
        std::size_t best_c;
        if (center_of[i] != k) {
            best_c = center_of[i];
        } else {
            double best = std::numeric_limits<double>::infinity();
            best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = euclidean(pool, i, cores.center_indices[c]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
        }
        clusters[best_c].member_indices.push_back(i);
    }
    return clusters;
}

// Mean distance from each subset member to its k nearest other members.
// k is clamped to |subset|-1 with a recorded warning when it is too large.
inline DensityProfile density_distance(const FeaturePool& pool,
                                       std::span<const std::size_t> subset, std::size_t k,
                                       Warnings* warn = nullptr) {
    const std::size_t m = subset.size();
    if (m < 2) throw config_error("density_distance: subset must have at least 2 members");
    if (k < 1) throw config_error("density_distance: k must be at least 1");
    if (k > m - 1) {
        Warnings::note(warn, "density_distance: k=" + std::to_string(k) + " clamped to " +
                                 std::to_string(m - 1));
        k = m - 1;
    }

    DensityProfile profile;
    profile.k_neighbors = k;
    profile.rho.resize(m);
    std::vector<std::pair<double, std::size_t>> dists;
    dists.reserve(m - 1);
    for (std::size_t a = 0; a < m; ++a) {
        dists.clear();
        for (std::size_t b = 0; b < m; ++b) {
            if (b == a) continue;
            dists.emplace_back(euclidean(pool, subset[a], subset[b]), subset[b]);
        }
        std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k),
                          dists.end());
        double sum = 0.0;
        for (std::size_t l = 0; l < k; ++l) sum += dists[l].first;
        profile.rho[a] = sum / static_cast<double>(k);
    }
    return profile;
}

// The k candidates nearest to the query, ascending by distance, ties ->
// lower pool index. The query is not excluded if it appears among the
// candidates; callers that want self-exclusion filter it out themselves.
inline std::vector<std::size_t> knn_of_point(const FeaturePool& pool, std::size_t query,
                                             std::span<const std::size_t> candidates,
                                             std::size_t k) {
    if (candidates.empty()) throw config_error("knn_of_point: empty candidate set");
    if (k > candidates.size())
        throw config_error("knn_of_point: k exceeds candidate count");
    if (k == 0) return {};

    std::vector<std::pair<double, std::size_t>> dists;
    dists.reserve(candidates.size());
    for (std::size_t c : candidates) dists.emplace_back(euclidean(pool, query, c), c);
    std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k), dists.end());
    std::vector<std::size_t> result(k);
    for (std::size_t l = 0; l < k; ++l) result[l] = dists[l].second;
    return result;
}

} // namespace bilaf
