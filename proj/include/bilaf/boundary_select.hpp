#pragma once
// Stage-2 step 3: proportional budget allocation, boundary scoring with the
// opponent penalty, and the iterative selection-and-removal loop, plus the
// end-to-end pipeline that chains stage 1, clustering, denoising, and
// selection.
//
// Boundary score of sample j in cluster i against opponent center l:
//
//   s_l = (delta^{t_l} * D(f_j, f_{c_l}) - d_intra(j)) / max(D(f_j, f_{c_l}), d_intra(j))
//
// where d_intra is the mean distance to the other cluster members and t_l
// counts previous picks in this cluster whose opponent was l. The score is
// min over opponents; smaller means closer to a decision boundary.

#include "bilaf/activeft.hpp"
#include "bilaf/cluster_geometry.hpp"
#include "bilaf/common.hpp"
#include "bilaf/denoise.hpp"
#include "bilaf/feature_store.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bilaf {

enum class SelectionCriterion { boundary_score, basic_distance };
enum class SelectionProcess { iterative_removal, one_shot };

struct BoundaryConfig {
    double opponent_delta = 1.1; // delta >= 1
    SelectionCriterion criterion = SelectionCriterion::boundary_score;
    SelectionProcess process = SelectionProcess::iterative_removal;
    bool use_opponent_penalty = true;
    // Alternative reading: recompute d_intra over the shrinking live set
    // instead of the full denoised cluster.
    bool recompute_intra_over_live = false;
};

enum class PickStage { core, boundary };

struct SelectionPick {
    std::size_t index = 0;
    std::size_t pseudo_class = 0;
    PickStage stage = PickStage::core;
    std::optional<double> boundary_score_at_pick;
    std::optional<std::size_t> opponent_class;
    // Replay provenance: the live candidate set and penalty counts the score
    // was evaluated against. Kept in memory only, never serialized.
    std::vector<std::size_t> live_candidates;
    std::vector<std::size_t> penalty_counts;
};

struct SelectionResult {
    std::vector<SelectionPick> selected;
    std::vector<std::size_t> per_cluster_budget;
    std::vector<std::size_t> center_indices;
    std::vector<std::vector<std::size_t>> cluster_members; // denoised, ascending
};

struct ScoredOpponent {
    double score = 0.0;
    std::size_t opponent = 0; // center list position
};

// Proportional allocation with largest-remainder rounding. Every nonempty
// cluster receives at least 1 (its center) and no cluster receives more than
// its candidate count; excess moves to the largest clusters with headroom.
inline std::vector<std::size_t> allocate_budgets(std::span<const std::size_t> sizes,
                                                 std::size_t total) {
    const std::size_t k = sizes.size();
    if (k == 0) throw config_error("allocate_budgets: no clusters");
    if (total < k)
        throw config_error("budget " + std::to_string(total) + " is below the cluster count " +
                           std::to_string(k) + "; choose a smaller core count");
    std::size_t sum = 0;
    for (std::size_t s : sizes) sum += s;
    if (sum == 0) throw config_error("allocate_budgets: every cluster is empty");
    if (total > sum)
        throw config_error("budget " + std::to_string(total) +
                           " exceeds the " + std::to_string(sum) +
                           " candidates left after denoising");

    // integer floors; remainders are exact modulo terms
    std::vector<std::size_t> budget(k), remainder(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        budget[i] = total * sizes[i] / sum;
        remainder[i] = total * sizes[i] % sum;
        assigned += budget[i];
    }
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
        if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
        return a < b;
    });
    for (std::size_t r = 0; assigned < total; ++r, ++assigned) budget[order[r % k]] += 1;

    // cap at cluster size, pushing excess to the largest clusters with headroom
    std::size_t excess = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (budget[i] > sizes[i]) {
            excess += budget[i] - sizes[i];
            budget[i] = sizes[i];
        }
    }
    while (excess > 0) {
        std::size_t target = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (budget[i] >= sizes[i]) continue;
            if (target == k || sizes[i] > sizes[target]) target = i;
        }
        if (target == k) throw invariant_error("allocate_budgets: no headroom left");
        budget[target] += 1;
        --excess;
    }

    // every nonempty cluster gets its center pick
    for (std::size_t i = 0; i < k; ++i) {
        if (sizes[i] == 0 || budget[i] > 0) continue;
        std::size_t donor = k;
        for (std::size_t j = 0; j < k; ++j)
            if (budget[j] >= 2 && (donor == k || budget[j] > budget[donor])) donor = j;
        if (donor == k) throw invariant_error("allocate_budgets: cannot guarantee center picks");
        budget[donor] -= 1;
        budget[i] += 1;
    }
    return budget;
}

// Score of one cluster member against the opponent centers. members is the
// set d_intra averages over (self excluded); t_counts[l] is the per-cluster
// opponent tally. Returns the minimum score and its opponent (ties -> lower
// center position).
inline ScoredOpponent boundary_score(const FeaturePool& pool,
                                     std::span<const std::size_t> members, std::size_t sample,
                                     const CoreSet& cores, std::size_t own_cluster,
                                     std::span<const std::size_t> t_counts,
                                     const BoundaryConfig& cfg, Warnings* warn = nullptr) {
    const std::size_t k = cores.size();
    if (k < 2) throw config_error("boundary_score: need at least 2 centers for an opponent");
    if (own_cluster >= k) throw config_error("boundary_score: own_cluster out of range");
    if (t_counts.size() != k) throw config_error("boundary_score: penalty counts must have K entries");
    if (cfg.opponent_delta < 1.0) throw config_error("opponent_delta must be >= 1");

    bool sample_in_members = false;
    double intra_sum = 0.0;
    for (std::size_t m : members) {
        if (m == sample) {
            sample_in_members = true;
            continue;
        }
        intra_sum += euclidean(pool, sample, m);
    }
    if (!sample_in_members) throw config_error("boundary_score: sample not in cluster members");
    double d_intra = 0.0;
    if (members.size() >= 2) {
        d_intra = intra_sum / static_cast<double>(members.size() - 1);
    } else {
        Warnings::note(warn, "boundary_score: singleton cluster, d_intra taken as 0");
    }

    ScoredOpponent best;
    bool first = true;
    for (std::size_t l = 0; l < k; ++l) {
        if (l == own_cluster) continue;
        const double d_opp = euclidean(pool, sample, cores.center_indices[l]);
        double s;
        if (cfg.criterion == SelectionCriterion::basic_distance) {
            s = d_opp;
        } else {
            const double penalty =
                cfg.use_opponent_penalty
                    ? std::pow(cfg.opponent_delta, static_cast<double>(t_counts[l]))
                    : 1.0;
            const double denom = std::max(d_opp, d_intra);
            s = denom == 0.0 ? 0.0 : (penalty * d_opp - d_intra) / denom;
        }
        if (first || s < best.score) {
            best.score = s;
            best.opponent = l;
            first = false;
        }
    }
    return best;
}

namespace detail {

// Live-candidate bookkeeping for one cluster during selection.
struct ClusterState {
    std::size_t cluster = 0;
    std::vector<std::size_t> live;      // ascending
    std::vector<std::size_t> t_counts;  // per opponent center
    std::size_t removal_per_pick = 1;   // includes the picked sample
    std::size_t picks_made = 0;
    bool center_pending = true;
};

inline void remove_with_neighbors(const FeaturePool& pool, ClusterState& st, std::size_t picked) {
    std::vector<std::pair<double, std::size_t>> near;
    near.reserve(st.live.size());
    for (std::size_t c : st.live) {
        if (c == picked) continue;
        near.emplace_back(euclidean(pool, picked, c), c);
    }
    const std::size_t extra = std::min(st.removal_per_pick - 1, near.size());
    std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(extra), near.end());
    std::vector<std::size_t> gone;
    gone.push_back(picked);
    for (std::size_t e = 0; e < extra; ++e) gone.push_back(near[e].second);
    std::sort(gone.begin(), gone.end());
    std::vector<std::size_t> next;
    next.reserve(st.live.size() - gone.size());
    std::set_difference(st.live.begin(), st.live.end(), gone.begin(), gone.end(),
                        std::back_inserter(next));
    st.live = std::move(next);
}

} // namespace detail

// Runs the per-cluster selection loop. The first pick of every cluster is
// its center; subsequent picks take the minimum boundary score among the
// live candidates (ties -> lower index), bump the winning opponent's
// penalty count, and retire the pick plus its floor(M_i/B_i)-1 nearest
// neighbors (M_i frozen at the post-denoise size). one_shot instead ranks
// candidates once and takes the top B_i-1 after the center. Clusters that
// exhaust early hand their shortfall to the remaining clusters round-robin
// by descending live count.
inline SelectionResult select_boundary(const FeaturePool& pool,
                                       const std::vector<std::vector<std::size_t>>& clusters,
                                       const CoreSet& cores,
                                       std::span<const std::size_t> budgets,
                                       const BoundaryConfig& cfg, Warnings* warn = nullptr) {
    const std::size_t k = cores.size();
    if (clusters.size() != k || budgets.size() != k)
        throw config_error("select_boundary: clusters, budgets, and centers must agree on K");

    SelectionResult result;
    result.per_cluster_budget.assign(budgets.begin(), budgets.end());
    result.center_indices = cores.center_indices;
    result.cluster_members = clusters;

    std::vector<detail::ClusterState> states(k);
    for (std::size_t i = 0; i < k; ++i) {
        states[i].cluster = i;
        states[i].live = clusters[i];
        std::sort(states[i].live.begin(), states[i].live.end());
        states[i].t_counts.assign(k, 0);
        if (budgets[i] > 0) {
            states[i].removal_per_pick = std::max<std::size_t>(1, clusters[i].size() / budgets[i]);
        }
    }

    // One-shot rankings are fixed up front; the ranked tail doubles as the
    // live pool for shortfall redistribution.
    std::vector<std::vector<std::size_t>> ranked(k);
    if (cfg.process == SelectionProcess::one_shot) {
        for (std::size_t i = 0; i < k; ++i) {
            if (budgets[i] == 0) continue;
            auto& st = states[i];
            std::vector<std::pair<double, std::size_t>> scored;
            for (std::size_t cand : st.live) {
                if (cand == cores.center_indices[i]) continue;
                const ScoredOpponent so =
                    boundary_score(pool, clusters[i], cand, cores, i, st.t_counts, cfg, warn);
                scored.emplace_back(so.score, cand);
            }
            std::sort(scored.begin(), scored.end());
            ranked[i].reserve(scored.size());
            for (const auto& [s, cand] : scored) ranked[i].push_back(cand);
        }
    }

    auto pick_from = [&](std::size_t i) -> bool {
        auto& st = states[i];
        SelectionPick pick;
        pick.pseudo_class = i;
        if (st.center_pending) {
            const std::size_t center = cores.center_indices[i];
            const auto it = std::lower_bound(st.live.begin(), st.live.end(), center);
            if (it == st.live.end() || *it != center)
                throw invariant_error("select_boundary: center missing from live candidates");
            pick.index = center;
            pick.stage = PickStage::core;
            pick.live_candidates = st.live;
            pick.penalty_counts = st.t_counts;
            st.center_pending = false;
            if (cfg.process == SelectionProcess::one_shot) {
                // ranked[] already excludes the center; nothing else retires
                std::vector<std::size_t> only{center};
                std::vector<std::size_t> next;
                std::set_difference(st.live.begin(), st.live.end(), only.begin(), only.end(),
                                    std::back_inserter(next));
                st.live = std::move(next);
            } else {
                detail::remove_with_neighbors(pool, st, center);
            }
        } else if (cfg.process == SelectionProcess::one_shot) {
            if (ranked[i].empty()) return false;
            const std::size_t cand = ranked[i].front();
            ranked[i].erase(ranked[i].begin());
            pick.index = cand;
            pick.stage = PickStage::boundary;
            pick.live_candidates = st.live;
            pick.penalty_counts = st.t_counts;
            const ScoredOpponent so =
                boundary_score(pool, clusters[i], cand, cores, i, st.t_counts, cfg, warn);
            pick.boundary_score_at_pick = so.score;
            pick.opponent_class = so.opponent;
            std::vector<std::size_t> only{cand};
            std::vector<std::size_t> next;
            std::set_difference(st.live.begin(), st.live.end(), only.begin(), only.end(),
                                std::back_inserter(next));
            st.live = std::move(next);
        } else {
            if (st.live.empty()) return false;
            std::span<const std::size_t> intra_members =
                cfg.recompute_intra_over_live ? std::span<const std::size_t>(st.live)
                                              : std::span<const std::size_t>(clusters[i]);
            double best_score = 0.0;
            std::size_t best_cand = pool.n, best_opponent = 0;
            for (std::size_t cand : st.live) {
                const ScoredOpponent so =
                    boundary_score(pool, intra_members, cand, cores, i, st.t_counts, cfg, warn);
                if (best_cand == pool.n || so.score < best_score) {
                    best_score = so.score;
                    best_cand = cand;
                    best_opponent = so.opponent;
                }
            }
            pick.index = best_cand;
            pick.stage = PickStage::boundary;
            pick.boundary_score_at_pick = best_score;
            pick.opponent_class = best_opponent;
            pick.live_candidates = st.live;
            pick.penalty_counts = st.t_counts;
            st.t_counts[best_opponent] += 1;
            detail::remove_with_neighbors(pool, st, best_cand);
        }
        result.selected.push_back(std::move(pick));
        st.picks_made += 1;
        return true;
    };

    std::size_t shortfall = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t m = 0; m < budgets[i]; ++m) {
            if (!pick_from(i)) {
                Warnings::note(warn, "select_boundary: cluster " + std::to_string(i) +
                                         " exhausted after " + std::to_string(m) + " of " +
                                         std::to_string(budgets[i]) + " picks");
                shortfall += budgets[i] - m;
                break;
            }
        }
    }

    if (shortfall > 0) {
        auto live_count = [&](std::size_t i) {
            return cfg.process == SelectionProcess::one_shot ? ranked[i].size()
                                                             : states[i].live.size();
        };
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < k; ++i)
            if (live_count(i) > 0) order.push_back(i);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (live_count(a) != live_count(b)) return live_count(a) > live_count(b);
            return a < b;
        });
        while (shortfall > 0) {
            bool progressed = false;
            for (std::size_t i : order) {
                if (shortfall == 0) break;
                if (pick_from(i)) {
                    --shortfall;
                    progressed = true;
                }
            }
            if (!progressed)
                throw invariant_error("select_boundary: pool exhausted before meeting the budget");
        }
    }
    return result;
}

// Every knob of the two-stage pipeline in one place. The root seed is split
// per stage by fixed labels, so reruns with the same config are identical.
struct SelectionConfig {
    std::size_t budget = 100;
    std::size_t core_count = 10;
    std::size_t knn_k = 10;
    double removal_ratio = 0.10;
    double include_fraction = 0.10;
    double opponent_delta = 1.1;
    DenoiseStrategy denoise = DenoiseStrategy::idc;
    SelectionCriterion criterion = SelectionCriterion::boundary_score;
    SelectionProcess process = SelectionProcess::iterative_removal;
    bool use_opponent_penalty = true;
    bool recompute_intra_over_live = false;
    OptimizerConfig optimizer{};
    std::uint64_t seed = 0;

    DenoiseConfig denoise_config() const {
        return {denoise, removal_ratio, include_fraction, knn_k};
    }
    BoundaryConfig boundary_config() const {
        return {opponent_delta, criterion, process, use_opponent_penalty,
                recompute_intra_over_live};
    }
};

// Full BiLAF pipeline: core selection, cluster assignment, denoising, budget
// allocation, boundary selection. Deterministic per config.
inline SelectionResult run_bilaf(const FeaturePool& pool, const SelectionConfig& config,
                                 Warnings* warn = nullptr, CoreSet* cores_out = nullptr) {
    if (!pool.normalized)
        throw config_error("run_bilaf: pool must carry unit-norm features (normalize on load)");
    if (config.budget > pool.n)
        throw config_error("budget " + std::to_string(config.budget) + " exceeds pool size " +
                           std::to_string(pool.n));
    if (config.core_count > config.budget)
        throw config_error("core_count " + std::to_string(config.core_count) +
                           " exceeds budget " + std::to_string(config.budget));

    OptimizerConfig opt = config.optimizer;
    opt.seed = split_seed(config.seed, "stage1/theta-init");
    const CoreSet cores = select_cores(pool, config.core_count, opt);
    if (cores_out) *cores_out = cores;

    const std::vector<PseudoCluster> clusters = assign_clusters(pool, cores);
    const DenoiseConfig denoise_cfg = config.denoise_config();
    std::vector<std::vector<std::size_t>> kept(clusters.size());
    std::vector<std::size_t> sizes(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        kept[i] = denoise_cluster(pool, clusters[i], denoise_cfg, warn).kept;
        sizes[i] = kept[i].size();
    }

    const std::vector<std::size_t> budgets = allocate_budgets(sizes, config.budget);
    return select_boundary(pool, kept, cores, budgets, config.boundary_config(), warn);
}

} // namespace bilaf
