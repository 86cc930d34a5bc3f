// Minimal library walkthrough: generate a noisy mixture, run the two-stage
// selection, and score it against a random baseline.

#include "bilaf/bilaf.hpp"

#include <iostream>

int main() {
    bilaf::MixtureSpec spec;
    spec.num_classes = 10;
    spec.samples_per_class = 200;
    spec.dim = 32;
    spec.noise_fraction = 0.05;
    spec.seed = 1;
    const bilaf::FeaturePool pool = bilaf::generate_mixture(spec);

    bilaf::SelectionConfig cfg;
    cfg.budget = 60;
    cfg.core_count = 15;
    cfg.seed = 1;
    const bilaf::SelectionResult result = bilaf::run_bilaf(pool, cfg);

    std::vector<std::size_t> picks;
    for (const auto& p : result.selected) picks.push_back(p.index);
    const bilaf::EvalReport ours = bilaf::evaluate_selection(pool, picks);

    bilaf::BaselineConfig base;
    base.budget = cfg.budget;
    base.seed = 1;
    const bilaf::EvalReport random =
        bilaf::evaluate_selection(pool, bilaf::select_random(pool, base));

    std::cout << "bilaf accuracy:  " << ours.top1_accuracy
              << " (coverage " << ours.class_coverage << ")\n";
    std::cout << "random accuracy: " << random.top1_accuracy
              << " (coverage " << random.class_coverage << ")\n";
    return 0;
}
