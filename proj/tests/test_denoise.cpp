#include "bilaf/denoise.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <set>

using namespace bilaf;

namespace {

FeaturePool line_pool(const std::vector<float>& offsets) {
    FeaturePool pool;
    pool.n = offsets.size();
    pool.dim = 1;
    pool.features = offsets;
    return pool;
}

PseudoCluster whole_pool_cluster(const FeaturePool& pool, std::size_t center) {
    PseudoCluster cluster;
    cluster.center_index = center;
    cluster.member_indices.resize(pool.n);
    std::iota(cluster.member_indices.begin(), cluster.member_indices.end(), std::size_t{0});
    return cluster;
}

DenoiseConfig config_for(DenoiseStrategy strategy, double p_rm, double p_in = 0.10,
                         std::size_t k = 10) {
    DenoiseConfig cfg;
    cfg.strategy = strategy;
    cfg.removal_ratio = p_rm;
    cfg.include_fraction = p_in;
    cfg.k_neighbors = k;
    return cfg;
}

void check_report_consistency(const DenoiseReport& report, const PseudoCluster& cluster,
                              std::size_t expected_removed) {
    CHECK(report.removed.size() == expected_removed);
    CHECK(report.kept.size() + report.removed.size() == cluster.size());
    std::set<std::size_t> all(report.kept.begin(), report.kept.end());
    for (std::size_t r : report.removed) CHECK(all.insert(r).second);
    std::set<std::size_t> members(cluster.member_indices.begin(), cluster.member_indices.end());
    CHECK(all == members);
    CHECK(std::count(report.kept.begin(), report.kept.end(), cluster.center_index) == 1);
}

} // namespace

TEST_CASE("zero removal ratio keeps everything", "[denoise]") {
    const FeaturePool pool = oracle::random_pool(2, 30, 4);
    const PseudoCluster cluster = whole_pool_cluster(pool, 4);
    for (auto strategy : {DenoiseStrategy::idc, DenoiseStrategy::density_based,
                          DenoiseStrategy::distance_guide, DenoiseStrategy::none}) {
        const DenoiseReport report =
            denoise_cluster(pool, cluster, config_for(strategy, 0.0, 0.25, 3));
        CHECK(report.removed.empty());
        CHECK(report.kept.size() == cluster.size());
    }
}

TEST_CASE("idc chain absorption on the 0,1,2,10 line", "[denoise]") {
    const FeaturePool pool = line_pool({0.0f, 1.0f, 2.0f, 10.0f});
    const PseudoCluster cluster = whole_pool_cluster(pool, 0);
    const DenoiseReport report =
        denoise_idc(pool, cluster, config_for(DenoiseStrategy::idc, 0.25, 0.25, 1));
    CHECK(report.inclusion_order == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(report.removed == std::vector<std::size_t>{3});
    CHECK(report.kept == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("idc matches its direct re-simulation on random clusters", "[denoise]") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const FeaturePool pool = oracle::random_pool(900 + seed, 200, 8);
        const PseudoCluster cluster = whole_pool_cluster(pool, 17);
        const DenoiseConfig cfg = config_for(DenoiseStrategy::idc, 0.10, 0.10, 10);
        const DenoiseReport report = denoise_idc(pool, cluster, cfg);
        const oracle::IdcTrace trace = oracle::idc_resimulate(
            pool, cluster.member_indices, cluster.center_index, 0.10, 0.10, 10);
        CHECK(report.inclusion_order == trace.inclusion_order);
        CHECK(report.removed == trace.removed);
    }
}

TEST_CASE("idc inclusion order is a center-first permutation", "[denoise]") {
    const FeaturePool pool = oracle::random_pool(7, 57, 6);
    const PseudoCluster cluster = whole_pool_cluster(pool, 31);
    const DenoiseReport report =
        denoise_idc(pool, cluster, config_for(DenoiseStrategy::idc, 0.15, 0.2, 4));
    REQUIRE(report.inclusion_order.size() == cluster.size());
    CHECK(report.inclusion_order.front() == 31);
    std::set<std::size_t> unique(report.inclusion_order.begin(), report.inclusion_order.end());
    CHECK(unique.size() == cluster.size());
}

TEST_CASE("idc with full inclusion degenerates to one distance ranking", "[denoise]") {
    const FeaturePool pool = oracle::random_pool(11, 40, 5);
    const PseudoCluster cluster = whole_pool_cluster(pool, 0);
    const DenoiseConfig cfg = config_for(DenoiseStrategy::idc, 0.25, 1.0, pool.n - 1);
    const DenoiseReport report = denoise_idc(pool, cluster, cfg);

    // single round: order is center, then members by distance to the center
    std::vector<std::pair<double, std::size_t>> by_dist;
    for (std::size_t m = 1; m < pool.n; ++m)
        by_dist.emplace_back(oracle::euclid(pool, m, 0), m);
    std::sort(by_dist.begin(), by_dist.end());
    std::vector<std::size_t> expected{0};
    for (const auto& [d, m] : by_dist) expected.push_back(m);
    CHECK(report.inclusion_order == expected);
    const std::size_t n_rm = static_cast<std::size_t>(0.25 * 40.0);
    CHECK(report.removed ==
          std::vector<std::size_t>(expected.end() - static_cast<std::ptrdiff_t>(n_rm),
                                   expected.end()));
}

TEST_CASE("density removal on a regular simplex is pure tie-break", "[denoise]") {
    // orthonormal basis vectors: all pairwise distances are sqrt(2); the
    // center is the highest index so protection stays out of the picture
    FeaturePool pool;
    pool.n = 4;
    pool.dim = 4;
    pool.features.assign(16, 0.0f);
    for (std::size_t i = 0; i < 4; ++i) pool.features[i * 4 + i] = 1.0f;
    const PseudoCluster cluster = whole_pool_cluster(pool, 3);
    const DenoiseReport report =
        denoise_density(pool, cluster, config_for(DenoiseStrategy::density_based, 0.5, 0.1, 2));
    CHECK(report.removed == std::vector<std::size_t>{0, 1});
    CHECK(report.kept == std::vector<std::size_t>{2, 3});
}

TEST_CASE("density removal drops the isolated point", "[denoise]") {
    const FeaturePool pool = line_pool({0.0f, 1.0f, 2.0f, 10.0f});
    const PseudoCluster cluster = whole_pool_cluster(pool, 0);
    const DenoiseReport report =
        denoise_density(pool, cluster, config_for(DenoiseStrategy::density_based, 0.25, 0.1, 1));
    CHECK(report.removed == std::vector<std::size_t>{3});
}

TEST_CASE("density removal agrees with the sort oracle", "[denoise]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const FeaturePool pool = oracle::random_pool(700 + seed, 90, 6);
        const PseudoCluster cluster = whole_pool_cluster(pool, 89);
        const DenoiseConfig cfg = config_for(DenoiseStrategy::density_based, 0.2, 0.1, 7);
        const DenoiseReport report = denoise_density(pool, cluster, cfg);

        const auto rho = oracle::density_by_sort(pool, cluster.member_indices, 7);
        std::vector<std::size_t> order(pool.n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (rho[a] != rho[b]) return rho[a] > rho[b];
            return a < b;
        });
        std::vector<std::size_t> expected;
        const std::size_t n_rm = static_cast<std::size_t>(0.2 * 90.0);
        for (std::size_t r = 0; r < order.size() && expected.size() < n_rm; ++r) {
            if (order[r] == cluster.center_index) continue;
            expected.push_back(order[r]);
        }
        CHECK(report.removed == expected);
    }
}

TEST_CASE("distance guide never removes the center", "[denoise]") {
    const FeaturePool pool = line_pool({5.0f, 1.0f, 2.0f, 10.0f});
    const PseudoCluster cluster = whole_pool_cluster(pool, 0);
    // the center is itself extreme, but stays protected
    const DenoiseReport report =
        denoise_distance(pool, cluster, config_for(DenoiseStrategy::distance_guide, 0.75));
    CHECK(std::count(report.kept.begin(), report.kept.end(), 0UL) == 1);
    CHECK(report.removed.size() == 3);
}

TEST_CASE("distance guide removes the two farthest offsets", "[denoise]") {
    const FeaturePool pool = line_pool({0.0f, 1.0f, 2.0f, 10.0f});
    const PseudoCluster cluster = whole_pool_cluster(pool, 0);
    const DenoiseReport report =
        denoise_distance(pool, cluster, config_for(DenoiseStrategy::distance_guide, 0.5));
    CHECK(report.removed == std::vector<std::size_t>{3, 2});
    CHECK(report.kept == std::vector<std::size_t>{0, 1});
}

TEST_CASE("distance guide agrees with a direct ranking", "[denoise]") {
    const FeaturePool pool = oracle::random_pool(31, 70, 5);
    const PseudoCluster cluster = whole_pool_cluster(pool, 12);
    const DenoiseReport report =
        denoise_distance(pool, cluster, config_for(DenoiseStrategy::distance_guide, 0.3));

    std::vector<std::size_t> order(pool.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> dist(pool.n);
    for (std::size_t i = 0; i < pool.n; ++i) dist[i] = oracle::euclid(pool, i, 12);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dist[a] != dist[b]) return dist[a] > dist[b];
        return a < b;
    });
    std::vector<std::size_t> expected(order.begin(),
                                      order.begin() + static_cast<std::ptrdiff_t>(
                                                          static_cast<std::size_t>(0.3 * 70.0)));
    CHECK(report.removed == expected);
}

TEST_CASE("removal count is exactly the floored fraction", "[denoise]") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const std::size_t n = 20 + 13 * seed;
        const FeaturePool pool = oracle::random_pool(500 + seed, n, 4);
        const PseudoCluster cluster = whole_pool_cluster(pool, seed);
        for (double p_rm : {0.1, 0.25, 0.33}) {
            const std::size_t expected =
                static_cast<std::size_t>(p_rm * static_cast<double>(n));
            for (auto strategy : {DenoiseStrategy::idc, DenoiseStrategy::density_based,
                                  DenoiseStrategy::distance_guide}) {
                const DenoiseReport report =
                    denoise_cluster(pool, cluster, config_for(strategy, p_rm, 0.15, 5));
                check_report_consistency(report, cluster, expected);
            }
        }
    }
}

TEST_CASE("tiny clusters refuse to denoise and warn", "[denoise]") {
    const FeaturePool pool = line_pool({0.0f});
    PseudoCluster cluster;
    cluster.center_index = 0;
    cluster.member_indices = {0};
    for (auto strategy : {DenoiseStrategy::density_based, DenoiseStrategy::distance_guide}) {
        Warnings warn;
        const DenoiseReport report =
            denoise_cluster(pool, cluster, config_for(strategy, 0.5), &warn);
        CHECK(report.kept == std::vector<std::size_t>{0});
        CHECK(report.removed.empty());
        REQUIRE(warn.messages.size() == 1);
    }
    // idc on a singleton cluster has nothing to remove either
    const DenoiseReport idc =
        denoise_idc(pool, cluster, config_for(DenoiseStrategy::idc, 0.5, 0.5, 1));
    CHECK(idc.kept == std::vector<std::size_t>{0});
    CHECK(idc.inclusion_order == std::vector<std::size_t>{0});
}

TEST_CASE("invalid denoise configs are rejected", "[denoise]") {
    const FeaturePool pool = line_pool({0.0f, 1.0f});
    const PseudoCluster cluster = whole_pool_cluster(pool, 0);
    CHECK_THROWS_AS(denoise_cluster(pool, cluster, config_for(DenoiseStrategy::idc, 1.0)),
                    config_error);
    CHECK_THROWS_AS(denoise_cluster(pool, cluster, config_for(DenoiseStrategy::idc, 0.1, 0.0)),
                    config_error);
    CHECK_THROWS_AS(denoise_cluster(pool, cluster, config_for(DenoiseStrategy::idc, 0.1, 0.1, 0)),
                    config_error);
}
