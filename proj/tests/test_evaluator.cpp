#include "bilaf/evaluator.hpp"

#include "bilaf/baselines.hpp"
#include "bilaf/feature_store.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace bilaf;

namespace {

// Two tight classes on orthogonal axes; the first sample of each class sits
// exactly on the class direction.
FeaturePool two_axis_pool() {
    FeaturePool pool;
    pool.n = 6;
    pool.dim = 2;
    const float c = std::cos(0.1f), s = std::sin(0.1f);
    pool.features = {1.0f, 0.0f, c, s, c, -s, 0.0f, 1.0f, s, c, -s, c};
    pool.labels = {0, 0, 0, 1, 1, 1};
    pool.normalized = true;
    return pool;
}

} // namespace

TEST_CASE("perfect centroids classify a separable pool perfectly", "[evaluator]") {
    const FeaturePool pool = two_axis_pool();
    const std::vector<std::size_t> selected{0, 3};
    const EvalReport report = evaluate_selection(pool, selected);
    CHECK(report.top1_accuracy == 1.0);
    CHECK(report.class_coverage == 1.0);
    CHECK(report.test_count == 4);
    REQUIRE(report.per_class_recall.size() == 2);
    CHECK(report.per_class_recall[0] == 1.0);
    CHECK(report.per_class_recall[1] == 1.0);
    CHECK(report.mean_boundary_margin > 0.0);
}

TEST_CASE("single-class selections score the class share", "[evaluator]") {
    const FeaturePool pool = two_axis_pool();
    const std::vector<std::size_t> selected{0};
    const EvalReport report = evaluate_selection(pool, selected);
    // 5 test points, the 2 remaining class-0 points are the only hits
    CHECK(report.top1_accuracy == Catch::Approx(2.0 / 5.0));
    CHECK(report.class_coverage == Catch::Approx(0.5));
    CHECK(report.mean_boundary_margin == 0.0); // one fitted centroid
}

TEST_CASE("evaluation matches the direct oracle on mixtures", "[evaluator]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        MixtureSpec spec;
        spec.num_classes = 6;
        spec.samples_per_class = 30;
        spec.dim = 8;
        spec.noise_fraction = 0.1;
        spec.seed = 4000 + seed;
        const FeaturePool pool = generate_mixture(spec);

        BaselineConfig cfg;
        cfg.budget = 30;
        cfg.seed = seed;
        const auto selected = select_random(pool, cfg);
        const EvalReport report = evaluate_selection(pool, selected);
        CHECK(report.top1_accuracy ==
              Catch::Approx(oracle::nearest_centroid_accuracy(pool, selected)).margin(1e-12));
    }
}

TEST_CASE("adding a coincident labeled duplicate keeps the centroid count", "[evaluator]") {
    FeaturePool pool = two_axis_pool();
    // append an exact duplicate of sample 0
    pool.features.push_back(pool.features[0]);
    pool.features.push_back(pool.features[1]);
    pool.labels.push_back(pool.labels[0]);
    pool.n += 1;

    const EvalReport base = evaluate_selection(pool, std::vector<std::size_t>{0, 3});
    const EvalReport with_dup = evaluate_selection(pool, std::vector<std::size_t>{0, 3, 6});
    CHECK(base.class_ids == with_dup.class_ids);
    CHECK(with_dup.class_coverage == base.class_coverage);
}

TEST_CASE("evaluation requires labels and a nonempty selection", "[evaluator]") {
    FeaturePool unlabeled = oracle::random_pool(1, 10, 3);
    CHECK_THROWS_AS(evaluate_selection(unlabeled, std::vector<std::size_t>{0}), config_error);
    const FeaturePool pool = two_axis_pool();
    CHECK_THROWS_AS(evaluate_selection(pool, std::vector<std::size_t>{}), config_error);
    CHECK_THROWS_AS(evaluate_selection(pool, std::vector<std::size_t>{99}), config_error);
}

TEST_CASE("method comparison reports one row per trial", "[evaluator]") {
    MixtureSpec spec;
    spec.num_classes = 4;
    spec.samples_per_class = 25;
    spec.dim = 6;
    spec.seed = 8;
    const FeaturePool pool = generate_mixture(spec);

    const Selector random_selector = [](const FeaturePool& p, std::uint64_t seed) {
        BaselineConfig cfg;
        cfg.budget = 12;
        cfg.seed = seed;
        return select_random(p, cfg);
    };

    SECTION("single trial equals a direct evaluation") {
        const auto table = compare_methods(pool, {{"random", random_selector}}, 1, 42);
        REQUIRE(table.rows.size() == 1);
        const auto selected = random_selector(pool, trial_seed(42, "random", 0));
        const EvalReport direct = evaluate_selection(pool, selected);
        CHECK(table.rows[0].accuracy == direct.top1_accuracy);
        CHECK(table.summary[0].mean_accuracy == direct.top1_accuracy);
        CHECK(table.summary[0].std_accuracy == 0.0);
    }

    SECTION("a method listed twice yields identical rows") {
        const auto table = compare_methods(
            pool, {{"random", random_selector}, {"random", random_selector}}, 3, 42);
        REQUIRE(table.rows.size() == 6);
        for (std::size_t t = 0; t < 3; ++t) {
            CHECK(table.rows[t].accuracy == table.rows[t + 3].accuracy);
            CHECK(table.rows[t].coverage == table.rows[t + 3].coverage);
        }
        CHECK(table.summary[0].mean_accuracy == table.summary[1].mean_accuracy);
        CHECK(table.summary[0].std_accuracy == table.summary[1].std_accuracy);
    }

    SECTION("trials draw distinct derived seeds") {
        CHECK(trial_seed(42, "random", 0) != trial_seed(42, "random", 1));
        CHECK(trial_seed(42, "random", 0) != trial_seed(42, "kmeans", 0));
    }
}
