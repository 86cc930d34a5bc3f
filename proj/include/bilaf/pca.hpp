#pragma once
// Two-component PCA by power iteration with deflation, for the visualization
// export. Sign convention: each component's largest-magnitude loading is
// positive, so projections are reproducible across runs.

#include "bilaf/common.hpp"
#include "bilaf/feature_store.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace bilaf {

struct Pca2 {
    std::vector<double> mean;                    // length d
    std::array<std::vector<double>, 2> components; // unit vectors, length d
    std::array<double, 2> variances = {0.0, 0.0};  // eigenvalues of the covariance
};

namespace detail {

inline std::vector<double> power_iterate(const std::vector<double>& cov, std::size_t d) {
    // start along the coordinate with the largest diagonal entry
    std::size_t start = 0;
    for (std::size_t j = 1; j < d; ++j)
        if (cov[j * d + j] > cov[start * d + start]) start = j;
    std::vector<double> v(d, 0.0), next(d, 0.0);
    v[start] = 1.0;

    for (int iter = 0; iter < 20000; ++iter) {
        for (std::size_t r = 0; r < d; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += cov[r * d + c] * v[c];
            next[r] = s;
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < d; ++r) norm += next[r] * next[r];
        norm = std::sqrt(norm);
        if (norm < 1e-300) break; // zero covariance: keep the start vector
        double align = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            next[r] /= norm;
            align += next[r] * v[r];
        }
        v = next;
        if (1.0 - std::abs(align) < 1e-16) break;
    }

    // flip so the largest-magnitude loading is positive
    std::size_t lead = 0;
    for (std::size_t r = 1; r < d; ++r)
        if (std::abs(v[r]) > std::abs(v[lead])) lead = r;
    if (v[lead] < 0.0)
        for (std::size_t r = 0; r < d; ++r) v[r] = -v[r];
    return v;
}

} // namespace detail

inline Pca2 pca2(const FeaturePool& pool) {
    if (pool.dim < 2) throw config_error("pca2: pool dimension must be at least 2");
    const std::size_t n = pool.n, d = pool.dim;

    Pca2 result;
    result.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const float* f = pool.row(i);
        for (std::size_t c = 0; c < d; ++c) result.mean[c] += static_cast<double>(f[c]);
    }
    for (std::size_t c = 0; c < d; ++c) result.mean[c] /= static_cast<double>(n);

    std::vector<double> cov(d * d, 0.0);
    if (n >= 2) {
        std::vector<double> centered(d);
        for (std::size_t i = 0; i < n; ++i) {
            const float* f = pool.row(i);
            for (std::size_t c = 0; c < d; ++c) centered[c] = static_cast<double>(f[c]) - result.mean[c];
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = r; c < d; ++c) cov[r * d + c] += centered[r] * centered[c];
        }
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = r; c < d; ++c) {
                cov[r * d + c] /= static_cast<double>(n - 1);
                cov[c * d + r] = cov[r * d + c];
            }
    }

    for (int comp = 0; comp < 2; ++comp) {
        std::vector<double> v = detail::power_iterate(cov, d);
        double lambda = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += cov[r * d + c] * v[c];
            lambda += v[r] * s;
        }
        result.components[comp] = v;
        result.variances[comp] = lambda;
        // deflate
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) cov[r * d + c] -= lambda * v[r] * v[c];
    }
    return result;
}

inline std::pair<double, double> pca2_project(const Pca2& pca, const FeaturePool& pool,
                                              std::size_t i) {
    const float* f = pool.row(i);
    double x = 0.0, y = 0.0;
    for (std::size_t c = 0; c < pool.dim; ++c) {
        const double centered = static_cast<double>(f[c]) - pca.mean[c];
        x += centered * pca.components[0][c];
        y += centered * pca.components[1][c];
    }
    return {x, y};
}

} // namespace bilaf
