#pragma once
// Stage-2 step 2: per-cluster removal of the removal_ratio fraction of
// peripheral samples. The default strategy grows the cluster outward from
// its center in rounds of the densest remaining points (IDC) and discards
// the tail of the inclusion order; the two simpler strategies rank by
// in-cluster density distance or by plain distance to the center.

#include "bilaf/cluster_geometry.hpp"
#include "bilaf/common.hpp"
#include "bilaf/feature_store.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace bilaf {

enum class DenoiseStrategy { idc, density_based, distance_guide, none };

struct DenoiseConfig {
    DenoiseStrategy strategy = DenoiseStrategy::idc;
    double removal_ratio = 0.10;    // P_rm in [0, 1)
    double include_fraction = 0.10; // P_in in (0, 1]
    std::size_t k_neighbors = 10;
};

struct DenoiseReport {
    std::vector<std::size_t> kept;            // ascending pool index
    std::vector<std::size_t> removed;         // in removal-rank order
    std::vector<std::size_t> inclusion_order; // IDC only, starts at the center
};

namespace detail {

inline void check_denoise_config(const DenoiseConfig& cfg) {
    if (cfg.removal_ratio < 0.0 || cfg.removal_ratio >= 1.0)
        throw config_error("removal_ratio must lie in [0, 1)");
    if (cfg.include_fraction <= 0.0 || cfg.include_fraction > 1.0)
        throw config_error("include_fraction must lie in (0, 1]");
    if (cfg.k_neighbors < 1) throw config_error("k_neighbors must be at least 1");
}

// Ranks members by (score descending, index ascending) and removes the first
// n_rm, skipping the center: step 3 needs it as the first pick.
inline DenoiseReport remove_top_scored(const std::vector<std::size_t>& members,
                                       const std::vector<double>& score,
                                       std::size_t center_index, std::size_t n_rm) {
    std::vector<std::size_t> rank(members.size());
    for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return members[a] < members[b];
    });

    DenoiseReport report;
    std::vector<char> is_removed(members.size(), 0);
    for (std::size_t r = 0; r < rank.size() && report.removed.size() < n_rm; ++r) {
        if (members[rank[r]] == center_index) continue;
        is_removed[rank[r]] = 1;
        report.removed.push_back(members[rank[r]]);
    }
    for (std::size_t i = 0; i < members.size(); ++i)
        if (!is_removed[i]) report.kept.push_back(members[i]);
    return report;
}

} // namespace detail

// Iterative density-based clustering. Starting from {center}, each round
// scores every not-yet-included member by its mean distance to the
// min(k, |included|) nearest included points and absorbs the
// floor(include_fraction * N_i) lowest-scoring ones (at least one per round;
// the final round takes whatever remains). The last floor(removal_ratio*N_i)
// entries of the inclusion order are removed. Within a round, members join
// in (score ascending, index ascending) order.
inline DenoiseReport denoise_idc(const FeaturePool& pool, const PseudoCluster& cluster,
                                 const DenoiseConfig& cfg, Warnings* warn = nullptr) {
    (void)warn;
    detail::check_denoise_config(cfg);
    const auto& members = cluster.member_indices;
    const std::size_t n_i = members.size();
    if (n_i == 0) throw config_error("denoise: empty cluster");

    std::size_t center_pos = n_i;
    for (std::size_t i = 0; i < n_i; ++i)
        if (members[i] == cluster.center_index) center_pos = i;
    if (center_pos == n_i) throw config_error("denoise: center not among cluster members");

    DenoiseReport report;
    report.inclusion_order.reserve(n_i);
    report.inclusion_order.push_back(cluster.center_index);

    // per-candidate list of the k smallest distances to the included set,
    // kept sorted so the mean is summed in a canonical order
    const std::size_t k = cfg.k_neighbors;
    std::vector<std::vector<double>> nearest(n_i);
    std::vector<char> included(n_i, 0);
    included[center_pos] = 1;
    for (std::size_t i = 0; i < n_i; ++i) {
        if (included[i]) continue;
        nearest[i].reserve(k + 1);
        nearest[i].push_back(euclidean(pool, members[i], cluster.center_index));
    }

    std::size_t n_in = static_cast<std::size_t>(cfg.include_fraction * static_cast<double>(n_i));
    if (n_in == 0) n_in = 1;

    std::vector<std::pair<double, std::size_t>> ranked; // (rho, member position)
    std::size_t remaining = n_i - 1;
    while (remaining > 0) {
        ranked.clear();
        for (std::size_t i = 0; i < n_i; ++i) {
            if (included[i]) continue;
            double sum = 0.0;
            for (double d : nearest[i]) sum += d;
            ranked.emplace_back(sum / static_cast<double>(nearest[i].size()), i);
        }
        std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return members[a.second] < members[b.second];
        });

        const std::size_t count = std::min(n_in, remaining);
        for (std::size_t r = 0; r < count; ++r) {
            const std::size_t pos = ranked[r].second;
            included[pos] = 1;
            report.inclusion_order.push_back(members[pos]);
        }
        remaining -= count;

        // fold the new members into every remaining candidate's k nearest
        for (std::size_t i = 0; i < n_i && remaining > 0; ++i) {
            if (included[i]) continue;
            auto& nn = nearest[i];
            for (std::size_t r = 0; r < count; ++r) {
                const double d = euclidean(pool, members[i], members[ranked[r].second]);
                auto it = std::lower_bound(nn.begin(), nn.end(), d);
                if (nn.size() < k) {
                    nn.insert(it, d);
                } else if (it != nn.end()) {
                    nn.insert(it, d);
                    nn.pop_back();
                }
            }
        }
    }

    const std::size_t n_rm = static_cast<std::size_t>(cfg.removal_ratio * static_cast<double>(n_i));
    report.removed.assign(report.inclusion_order.end() - static_cast<std::ptrdiff_t>(n_rm),
                          report.inclusion_order.end());
    report.kept.assign(report.inclusion_order.begin(),
                       report.inclusion_order.end() - static_cast<std::ptrdiff_t>(n_rm));
    std::sort(report.kept.begin(), report.kept.end());
    return report;
}

// Removes the floor(removal_ratio * N_i) members with the largest in-cluster
// density distance (ties -> lower index removed first).
inline DenoiseReport denoise_density(const FeaturePool& pool, const PseudoCluster& cluster,
                                     const DenoiseConfig& cfg, Warnings* warn = nullptr) {
    detail::check_denoise_config(cfg);
    const auto& members = cluster.member_indices;
    const std::size_t n_i = members.size();
    if (n_i == 0) throw config_error("denoise: empty cluster");
    const std::size_t n_rm = static_cast<std::size_t>(cfg.removal_ratio * static_cast<double>(n_i));
    if (n_i < 2) {
        if (cfg.removal_ratio > 0.0)
            Warnings::note(warn, "denoise: cluster of size " + std::to_string(n_i) +
                                     " too small to denoise; keeping all members");
        return {members, {}, {}};
    }
    const DensityProfile profile = density_distance(pool, members, cfg.k_neighbors, warn);
    return detail::remove_top_scored(members, profile.rho, cluster.center_index, n_rm);
}

// Removes the floor(removal_ratio * N_i) members farthest from the center
// feature.
inline DenoiseReport denoise_distance(const FeaturePool& pool, const PseudoCluster& cluster,
                                      const DenoiseConfig& cfg, Warnings* warn = nullptr) {
    detail::check_denoise_config(cfg);
    const auto& members = cluster.member_indices;
    const std::size_t n_i = members.size();
    if (n_i == 0) throw config_error("denoise: empty cluster");
    const std::size_t n_rm = static_cast<std::size_t>(cfg.removal_ratio * static_cast<double>(n_i));
    if (n_i < 2) {
        if (cfg.removal_ratio > 0.0)
            Warnings::note(warn, "denoise: cluster of size " + std::to_string(n_i) +
                                     " too small to denoise; keeping all members");
        return {members, {}, {}};
    }
    std::vector<double> dist(n_i);
    for (std::size_t i = 0; i < n_i; ++i)
        dist[i] = euclidean(pool, members[i], cluster.center_index);
    return detail::remove_top_scored(members, dist, cluster.center_index, n_rm);
}

inline DenoiseReport denoise_cluster(const FeaturePool& pool, const PseudoCluster& cluster,
                                     const DenoiseConfig& cfg, Warnings* warn = nullptr) {
    switch (cfg.strategy) {
        case DenoiseStrategy::idc: return denoise_idc(pool, cluster, cfg, warn);
        case DenoiseStrategy::density_based: return denoise_density(pool, cluster, cfg, warn);
        case DenoiseStrategy::distance_guide: return denoise_distance(pool, cluster, cfg, warn);
        case DenoiseStrategy::none: return {cluster.member_indices, {}, {}};
    }
    throw invariant_error("unknown denoise strategy");
}

} // namespace bilaf
