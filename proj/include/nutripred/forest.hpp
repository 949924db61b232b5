#pragma once

#include <cstdint>
#include <vector>

#include "nutripred/parallel.hpp"
#include "nutripred/tree.hpp"

namespace nutripred {

/// Random forest defaults follow the tuned configuration reported for this
/// task: 400 gini trees, depth cap 100, min_samples_split 3, sqrt features.
struct ForestParams {
    std::size_t n_estimators = 400;
    TreeParams tree{Criterion::Gini, 100, 3, std::nullopt, MaxFeatures::sqrt()};
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_estimators < 1) throw ConfigError("forest: n_estimators must be >= 1");
        tree.validate();
    }
};

struct RandomForestModel {
    std::vector<DecisionTreeModel> trees;
    int k_classes = 0;
    std::size_t n_features = 0;
};

/// Bagged CART ensemble. Tree t trains on a bootstrap resample expressed as
/// per-row multiplicity weights drawn from stream (seed, t); rows outside
/// the resample get weight zero and are excluded from that tree entirely.
inline RandomForestModel fit_random_forest(const Dataset& ds, const ForestParams& params) {
    params.validate();
    ds.validate();
    RandomForestModel model;
    model.k_classes = ds.k_classes;
    model.n_features = ds.d();
    model.trees.resize(params.n_estimators);

    parallel_for(0, params.n_estimators, [&](std::size_t t) {
        const std::uint64_t tree_seed = Rng::mix(Rng::mix(params.seed) ^ (t + 1));
        if (params.bootstrap) {
            Rng rng = Rng::stream(params.seed, 0x626f6f74ULL, t); // bootstrap stream
            std::vector<double> weights(ds.n(), 0.0);
            for (std::size_t i = 0; i < ds.n(); ++i) weights[rng.next_index(ds.n())] += 1.0;
            model.trees[t] = fit_tree(ds, weights, params.tree, tree_seed);
        } else {
            model.trees[t] = fit_tree(ds, params.tree, tree_seed);
        }
    });
    return model;
}

/// Mean of one-hot tree votes; matches majority-vote predict exactly.
inline std::vector<double> proba_forest(const RandomForestModel& model,
                                        std::span<const double> x) {
    std::vector<double> votes(static_cast<std::size_t>(model.k_classes), 0.0);
    for (const auto& tree : model.trees)
        votes[static_cast<std::size_t>(predict_tree(tree, x))] += 1.0;
    const double n = static_cast<double>(model.trees.size());
    for (double& v : votes) v /= n;
    return votes;
}

inline int predict_forest(const RandomForestModel& model, std::span<const double> x) {
    auto votes = proba_forest(model, x);
    return argmax_class(votes);
}

} // namespace nutripred
