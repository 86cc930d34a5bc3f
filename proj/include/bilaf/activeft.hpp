#pragma once
// Stage 1: core-sample selection by continuous optimization on the unit
// sphere. K parameter rows are fit against the pool with an attraction term
// (each feature pulls its best-matching row) and a pairwise repulsion term
// between rows, then each row is matched to its most similar pool feature.

#include "bilaf/common.hpp"
#include "bilaf/feature_store.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace bilaf {

struct CoreParams {
    std::vector<double> theta; // k_cores x dim, unit-norm rows
    std::size_t k_cores = 0;
    std::size_t dim = 0;
    double tau = 0.07;
    double lambda_weight = 1.0;

    const double* row(std::size_t j) const { return theta.data() + j * dim; }
    double* row(std::size_t j) { return theta.data() + j * dim; }
};

struct OptimizerConfig {
    double learning_rate = 1e-3;
    int max_iters = 300;
    double rel_tol = 1e-6;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

struct CoreSet {
    std::vector<std::size_t> center_indices; // length K, distinct
    std::vector<double> final_theta;         // K x dim
    double final_loss = 0.0;

    std::size_t size() const { return center_indices.size(); }
};

// One optimizer step as seen by the caller: loss before the step and the
// worst row-norm deviation after projection.
struct OptTraceRow {
    int iter;
    double loss;
    double max_row_norm_err;
};

namespace detail {

inline double dot_fd(const float* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += static_cast<double>(a[j]) * b[j];
    return s;
}

inline double dot_dd(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a[j] * b[j];
    return s;
}

inline void check_activeft_args(const FeaturePool& pool, const CoreParams& params) {
    if (params.k_cores < 2)
        throw config_error("core optimization needs at least 2 parameter rows; "
                           "the pairwise repulsion term is undefined for K < 2");
    if (params.dim != pool.dim) throw config_error("parameter dim does not match pool dim");
    if (params.tau <= 0.0) throw config_error("temperature must be positive");
    if (params.lambda_weight < 0.0) throw config_error("lambda_weight must be non-negative");
    if (params.theta.size() != params.k_cores * params.dim)
        throw config_error("theta buffer does not match k_cores*dim");
}

} // namespace detail

// Loss and per-sample hard assignment. assignment[i] is the parameter row
// with the highest dot-product similarity to feature i (ties -> lowest row).
//
//   loss = -mean_i sim(f_i, theta_{a_i}) / tau
//        + lambda * mean_j log sum_{k != j} exp(sim(theta_j, theta_k) / tau)
inline std::pair<double, std::vector<std::size_t>>
activeft_loss(const FeaturePool& pool, const CoreParams& params) {
    detail::check_activeft_args(pool, params);
    const std::size_t n = pool.n, k = params.k_cores, d = params.dim;

    std::vector<std::size_t> assignment(n);
    double attract = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const float* f = pool.row(i);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double s = detail::dot_fd(f, params.row(j), d);
            if (s > best) {
                best = s;
                best_j = j;
            }
        }
        assignment[i] = best_j;
        attract += best;
    }
    attract /= static_cast<double>(n) * params.tau;

    // log-sum-exp with per-row max shift
    double repulse = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < k; ++m) {
            if (m == j) continue;
            row_max = std::max(row_max, detail::dot_dd(params.row(j), params.row(m), d));
        }
        double sum = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
            if (m == j) continue;
            sum += std::exp((detail::dot_dd(params.row(j), params.row(m), d) - row_max) / params.tau);
        }
        repulse += row_max / params.tau + std::log(sum);
    }
    repulse *= params.lambda_weight / static_cast<double>(k);

    return {-attract + repulse, std::move(assignment)};
}

// Analytic gradient of activeft_loss w.r.t. theta, holding the hard
// assignment fixed (subgradient treatment of the argmax).
inline std::vector<double> activeft_grad(const FeaturePool& pool, const CoreParams& params) {
    detail::check_activeft_args(pool, params);
    const std::size_t n = pool.n, k = params.k_cores, d = params.dim;

    std::vector<double> grad(k * d, 0.0);

    // attraction term: -1/(N tau) sum over samples assigned to each row
    const double attract_coeff = -1.0 / (static_cast<double>(n) * params.tau);
    for (std::size_t i = 0; i < n; ++i) {
        const float* f = pool.row(i);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double s = detail::dot_fd(f, params.row(j), d);
            if (s > best) {
                best = s;
                best_j = j;
            }
        }
        double* g = grad.data() + best_j * d;
        for (std::size_t j = 0; j < d; ++j) g[j] += attract_coeff * static_cast<double>(f[j]);
    }

    // repulsion term: softmax weights per row, plus the transposed
    // contribution of each row appearing inside the other rows' sums
    std::vector<double> sims(k * k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t m = 0; m < k; ++m)
            if (m != j) sims[j * k + m] = detail::dot_dd(params.row(j), params.row(m), d);

    std::vector<double> soft(k * k, 0.0); // soft[j*k+m] = exp(s_jm/tau) / sum_{m'!=j} exp(s_jm'/tau)
    for (std::size_t j = 0; j < k; ++j) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < k; ++m)
            if (m != j) row_max = std::max(row_max, sims[j * k + m]);
        double sum = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
            if (m == j) continue;
            soft[j * k + m] = std::exp((sims[j * k + m] - row_max) / params.tau);
            sum += soft[j * k + m];
        }
        for (std::size_t m = 0; m < k; ++m) soft[j * k + m] /= sum;
    }

    const double repulse_coeff = params.lambda_weight / (static_cast<double>(k) * params.tau);
    for (std::size_t j = 0; j < k; ++j) {
        double* g = grad.data() + j * d;
        for (std::size_t m = 0; m < k; ++m) {
            if (m == j) continue;
            const double w = repulse_coeff * (soft[j * k + m] + soft[m * k + j]);
            const double* t = params.row(m);
            for (std::size_t c = 0; c < d; ++c) g[c] += w * t[c];
        }
    }
    return grad;
}

namespace detail {

// Renormalizes every theta row; returns the worst |norm - 1| measured after
// projection, which the optimizer trace exposes for invariant checks.
inline double project_rows(CoreParams& params) {
    double worst = 0.0;
    for (std::size_t j = 0; j < params.k_cores; ++j) {
        double* r = params.row(j);
        const double norm = std::sqrt(dot_dd(r, r, params.dim));
        if (norm <= 0.0) throw invariant_error("theta row collapsed to zero during optimization");
        for (std::size_t c = 0; c < params.dim; ++c) r[c] /= norm;
        worst = std::max(worst, std::abs(std::sqrt(dot_dd(r, r, params.dim)) - 1.0));
    }
    return worst;
}

// Matches each theta row to its most similar pool feature. A feature
// contested by several rows goes to the row with the higher similarity
// (ties -> lower row), and losers re-match to their next-best unused
// feature.
inline std::vector<std::size_t> match_rows_to_features(const FeaturePool& pool,
                                                       const CoreParams& params) {
    const std::size_t n = pool.n, k = params.k_cores, d = params.dim;
    std::vector<double> sims(k * n);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i)
            sims[j * n + i] = dot_fd(pool.row(i), params.row(j), d);

    std::vector<std::size_t> match(k, n); // n = unmatched
    std::vector<char> taken(n, 0);
    std::size_t unmatched = k;
    while (unmatched > 0) {
        // each unmatched row proposes its best unused feature
        std::vector<std::pair<std::size_t, std::size_t>> proposals; // (row, feature)
        for (std::size_t j = 0; j < k; ++j) {
            if (match[j] != n) continue;
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_i = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                if (sims[j * n + i] > best) {
                    best = sims[j * n + i];
                    best_i = i;
                }
            }
            if (best_i == n) throw invariant_error("ran out of features while matching rows");
            proposals.emplace_back(j, best_i);
        }
        // contested features go to the proposer with the higher similarity
        for (const auto& [j, i] : proposals) {
            if (taken[i]) continue; // somebody already won this feature this round
            std::size_t winner = j;
            for (const auto& [j2, i2] : proposals) {
                if (i2 != i || j2 == winner) continue;
                if (sims[j2 * n + i] > sims[winner * n + i]) winner = j2;
            }
            match[winner] = i;
            taken[i] = 1;
            --unmatched;
        }
    }
    return match;
}

} // namespace detail

// Optimizes K unit-norm parameter rows with Adam (projection back onto the
// sphere after each step) and matches them to pool features. Initialization
// draws K distinct pool features. Stops at max_iters or when the relative
// loss change falls below rel_tol.
inline CoreSet select_cores(const FeaturePool& pool, std::size_t k_cores,
                            const OptimizerConfig& opt,
                            std::vector<OptTraceRow>* trace = nullptr) {
    if (k_cores > pool.n)
        throw config_error("k_cores = " + std::to_string(k_cores) + " exceeds pool size " +
                           std::to_string(pool.n));
    if (k_cores < 2) throw config_error("k_cores must be at least 2");
    if (opt.adam_beta1 <= 0.0 || opt.adam_beta1 >= 1.0 || opt.adam_beta2 <= 0.0 ||
        opt.adam_beta2 >= 1.0)
        throw config_error("adam betas must lie in (0, 1)");

    const std::size_t d = pool.dim;
    CoreParams params;
    params.k_cores = k_cores;
    params.dim = d;
    params.theta.resize(k_cores * d);

    Rng rng(opt.seed);
    const std::vector<std::size_t> init = sample_without_replacement(rng, pool.n, k_cores);
    for (std::size_t j = 0; j < k_cores; ++j) {
        const float* f = pool.row(init[j]);
        for (std::size_t c = 0; c < d; ++c) params.theta[j * d + c] = static_cast<double>(f[c]);
    }
    detail::project_rows(params);

    std::vector<double> m(k_cores * d, 0.0), v(k_cores * d, 0.0);
    double prev_loss = std::numeric_limits<double>::infinity();
    double final_loss = 0.0;
    for (int iter = 0;; ++iter) {
        const auto [loss, assignment] = activeft_loss(pool, params);
        (void)assignment;
        final_loss = loss;
        if (trace) trace->push_back({iter, loss, 0.0});
        if (iter > 0 &&
            std::abs(loss - prev_loss) / std::max(1.0, std::abs(prev_loss)) < opt.rel_tol)
            break;
        if (iter >= opt.max_iters) break;
        prev_loss = loss;

        const std::vector<double> grad = activeft_grad(pool, params);
        const double bc1 = 1.0 - std::pow(opt.adam_beta1, iter + 1);
        const double bc2 = 1.0 - std::pow(opt.adam_beta2, iter + 1);
        for (std::size_t c = 0; c < params.theta.size(); ++c) {
            m[c] = opt.adam_beta1 * m[c] + (1.0 - opt.adam_beta1) * grad[c];
            v[c] = opt.adam_beta2 * v[c] + (1.0 - opt.adam_beta2) * grad[c] * grad[c];
            const double m_hat = m[c] / bc1;
            const double v_hat = v[c] / bc2;
            params.theta[c] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.adam_eps);
        }
        const double norm_err = detail::project_rows(params);
        if (trace) trace->back().max_row_norm_err = norm_err;
    }

    CoreSet cores;
    cores.center_indices = detail::match_rows_to_features(pool, params);
    cores.final_theta = std::move(params.theta);
    cores.final_loss = final_loss;
    return cores;
}

} // namespace bilaf
