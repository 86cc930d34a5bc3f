#pragma once
// Desk-scale proxy for finetuning accuracy: label the selected subset with
// held-out ground truth, fit one renormalized centroid per selected class,
// and classify the remaining pool by nearest centroid. The test set is the
// pool minus the selection; classes absent from the selection count all of
// their test points as errors.

#include "bilaf/common.hpp"
#include "bilaf/feature_store.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bilaf {

struct EvalReport {
    double top1_accuracy = 0.0;
    std::vector<std::uint32_t> class_ids;  // ascending, classes present in the pool
    std::vector<double> per_class_recall;  // aligned with class_ids
    double class_coverage = 0.0;           // fraction of true classes selected at least once
    double mean_boundary_margin = 0.0;     // mean (d2 - d1) over test points, 0 if < 2 centroids
    std::size_t test_count = 0;
};

inline EvalReport evaluate_selection(const FeaturePool& pool,
                                     std::span<const std::size_t> selected) {
    if (!pool.has_labels()) throw config_error("evaluate_selection: pool has no labels");
    if (selected.empty()) throw config_error("evaluate_selection: empty selection");
    const std::size_t d = pool.dim;

    std::vector<char> is_selected(pool.n, 0);
    for (std::size_t s : selected) {
        if (s >= pool.n) throw config_error("evaluate_selection: selected index out of range");
        is_selected[s] = 1;
    }

    // centroid per class present in the selection, renormalized
    std::map<std::uint32_t, std::pair<std::vector<double>, std::size_t>> sums;
    for (std::size_t i = 0; i < pool.n; ++i) {
        if (!is_selected[i]) continue;
        auto& [sum, count] = sums[pool.labels[i]];
        if (sum.empty()) sum.assign(d, 0.0);
        const float* f = pool.row(i);
        for (std::size_t c = 0; c < d; ++c) sum[c] += static_cast<double>(f[c]);
        count += 1;
    }
    std::vector<std::uint32_t> fitted_classes;
    std::vector<double> centroids;
    for (auto& [cls, entry] : sums) {
        auto& [sum, count] = entry;
        double sq = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            sum[c] /= static_cast<double>(count);
            sq += sum[c] * sum[c];
        }
        const double norm = std::sqrt(sq);
        if (norm > 1e-12)
            for (std::size_t c = 0; c < d; ++c) sum[c] /= norm;
        fitted_classes.push_back(cls);
        centroids.insert(centroids.end(), sum.begin(), sum.end());
    }

    std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> per_class; // correct, total
    for (std::size_t i = 0; i < pool.n; ++i) per_class[pool.labels[i]];

    EvalReport report;
    std::size_t correct = 0, tested = 0;
    double margin_sum = 0.0;
    for (std::size_t i = 0; i < pool.n; ++i) {
        if (is_selected[i]) continue;
        const float* f = pool.row(i);
        double best = std::numeric_limits<double>::infinity();
        double second = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < fitted_classes.size(); ++j) {
            const double* cen = centroids.data() + j * d;
            double sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = static_cast<double>(f[c]) - cen[c];
                sq += diff * diff;
            }
            if (sq < best) {
                second = best;
                best = sq;
                best_j = j;
            } else if (sq < second) {
                second = sq;
            }
        }
        const bool ok = fitted_classes[best_j] == pool.labels[i];
        correct += ok ? 1 : 0;
        tested += 1;
        auto& [cls_correct, cls_total] = per_class[pool.labels[i]];
        cls_correct += ok ? 1 : 0;
        cls_total += 1;
        if (fitted_classes.size() >= 2) margin_sum += std::sqrt(second) - std::sqrt(best);
    }

    report.test_count = tested;
    report.top1_accuracy = tested == 0 ? 1.0 : static_cast<double>(correct) / tested;
    report.mean_boundary_margin =
        (tested == 0 || fitted_classes.size() < 2) ? 0.0 : margin_sum / static_cast<double>(tested);
    std::size_t covered = 0;
    for (const auto& [cls, counts] : per_class) {
        report.class_ids.push_back(cls);
        // vacuous recall when every sample of the class was selected
        report.per_class_recall.push_back(
            counts.second == 0 ? 1.0
                               : static_cast<double>(counts.first) / counts.second);
        if (sums.count(cls)) ++covered;
    }
    report.class_coverage = static_cast<double>(covered) / static_cast<double>(per_class.size());
    return report;
}

// One selector invocation: maps a (pool, seed) pair to selected indices.
using Selector = std::function<std::vector<std::size_t>(const FeaturePool&, std::uint64_t)>;

struct TrialRow {
    std::string method;
    std::size_t trial = 0;
    double accuracy = 0.0;
    double coverage = 0.0;
    double margin = 0.0;
};

struct MethodSummary {
    std::string method;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    std::size_t trials = 0;
};

struct ComparisonTable {
    std::vector<TrialRow> rows;
    std::vector<MethodSummary> summary;
};

// Per-trial seeds derive from the method name and trial index only, so a
// method listed twice produces identical rows.
inline std::uint64_t trial_seed(std::uint64_t root, std::string_view method, std::size_t trial) {
    return split_seed(root, std::string(method) + "/trial:" + std::to_string(trial));
}

inline ComparisonTable
compare_methods(const FeaturePool& pool,
                const std::vector<std::pair<std::string, Selector>>& methods, std::size_t trials,
                std::uint64_t root_seed) {
    if (trials == 0) throw config_error("compare_methods: trials must be at least 1");
    ComparisonTable table;
    for (const auto& [name, selector] : methods) {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            const std::vector<std::size_t> sel = selector(pool, trial_seed(root_seed, name, t));
            const EvalReport report = evaluate_selection(pool, sel);
            table.rows.push_back(
                {name, t, report.top1_accuracy, report.class_coverage, report.mean_boundary_margin});
            sum += report.top1_accuracy;
            sum_sq += report.top1_accuracy * report.top1_accuracy;
        }
        const double mean = sum / static_cast<double>(trials);
        double variance = 0.0;
        if (trials > 1)
            variance = std::max(0.0, (sum_sq - static_cast<double>(trials) * mean * mean) /
                                         static_cast<double>(trials - 1));
        table.summary.push_back({name, mean, std::sqrt(variance), trials});
    }
    return table;
}

} // namespace bilaf
