#include "bilaf/pca.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace bilaf;

TEST_CASE("two-dimensional pools project losslessly", "[pca]") {
    const FeaturePool pool = oracle::random_pool(1, 60, 2, /*normalize=*/false);
    const Pca2 pca = pca2(pool);

    // total variance is preserved: both components capture the full trace
    double trace = 0.0;
    std::vector<double> mean(2, 0.0);
    for (std::size_t i = 0; i < pool.n; ++i)
        for (std::size_t c = 0; c < 2; ++c) mean[c] += pool.row(i)[c];
    for (auto& m : mean) m /= static_cast<double>(pool.n);
    for (std::size_t i = 0; i < pool.n; ++i)
        for (std::size_t c = 0; c < 2; ++c) {
            const double diff = pool.row(i)[c] - mean[c];
            trace += diff * diff;
        }
    trace /= static_cast<double>(pool.n - 1);
    CHECK(pca.variances[0] + pca.variances[1] == Catch::Approx(trace).epsilon(1e-6));

    // the projection is a rotation of the centered data: distances survive
    for (std::size_t i = 1; i < 5; ++i) {
        const auto [x0, y0] = pca2_project(pca, pool, 0);
        const auto [xi, yi] = pca2_project(pca, pool, i);
        const double proj_d = std::hypot(x0 - xi, y0 - yi);
        const double orig_d = oracle::euclid(pool, 0, i);
        CHECK(proj_d == Catch::Approx(orig_d).epsilon(1e-6));
    }
}

TEST_CASE("components come out in variance order", "[pca]") {
    const FeaturePool pool = oracle::random_pool(2, 80, 6, /*normalize=*/false);
    const Pca2 pca = pca2(pool);
    CHECK(pca.variances[0] >= pca.variances[1]);
    CHECK(pca.variances[1] >= 0.0);
}

TEST_CASE("power iteration matches the Jacobi oracle", "[pca]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const FeaturePool pool = oracle::random_pool(100 + seed, 50, 8, /*normalize=*/false);
        const Pca2 pca = pca2(pool);

        // oracle covariance
        const std::size_t d = pool.dim;
        std::vector<double> mean(d, 0.0);
        for (std::size_t i = 0; i < pool.n; ++i)
            for (std::size_t c = 0; c < d; ++c) mean[c] += pool.row(i)[c];
        for (auto& m : mean) m /= static_cast<double>(pool.n);
        std::vector<double> cov(d * d, 0.0);
        for (std::size_t i = 0; i < pool.n; ++i)
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    cov[r * d + c] += (pool.row(i)[r] - mean[r]) * (pool.row(i)[c] - mean[c]);
        for (auto& v : cov) v /= static_cast<double>(pool.n - 1);

        const oracle::JacobiResult eig = oracle::jacobi_eigen(cov, d);
        for (int comp = 0; comp < 2; ++comp) {
            CHECK(pca.variances[comp] == Catch::Approx(eig.values[comp]).margin(1e-4));
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c)
                dot += pca.components[comp][c] * eig.vectors[comp * d + c];
            CHECK(std::abs(dot) == Catch::Approx(1.0).margin(1e-4));
        }
    }
}

TEST_CASE("sign convention puts the dominant loading positive", "[pca]") {
    const FeaturePool pool = oracle::random_pool(7, 40, 5, /*normalize=*/false);
    const Pca2 pca = pca2(pool);
    for (int comp = 0; comp < 2; ++comp) {
        std::size_t lead = 0;
        for (std::size_t c = 1; c < pool.dim; ++c)
            if (std::abs(pca.components[comp][c]) > std::abs(pca.components[comp][lead])) lead = c;
        CHECK(pca.components[comp][lead] > 0.0);
    }
}

TEST_CASE("one-dimensional pools are rejected", "[pca]") {
    FeaturePool pool;
    pool.n = 3;
    pool.dim = 1;
    pool.features = {0.0f, 1.0f, 2.0f};
    CHECK_THROWS_AS(pca2(pool), config_error);
}
