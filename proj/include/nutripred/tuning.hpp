#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nutripred/evaluation.hpp"
#include "nutripred/model.hpp"
#include "nutripred/parallel.hpp"

namespace nutripred {

// ---------------------------------------------------------------------------
// JSON <-> typed hyperparameters
// ---------------------------------------------------------------------------

inline MaxFeatures max_features_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "all") return MaxFeatures::all();
        if (s == "sqrt") return MaxFeatures::sqrt();
        throw ConfigError("max_features: expected \"all\", \"sqrt\", or a count");
    }
    return MaxFeatures::fixed(j.get<std::size_t>());
}

inline TreeParams tree_params_from_json(const nlohmann::json& j, const TreeParams& base = {}) {
    TreeParams p = base;
    if (j.contains("criterion")) p.criterion = criterion_from_string(j.at("criterion"));
    if (j.contains("max_depth")) {
        if (j.at("max_depth").is_null())
            p.max_depth.reset();
        else
            p.max_depth = j.at("max_depth").get<std::size_t>();
    }
    if (j.contains("min_samples_split"))
        p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    if (j.contains("max_leaf_nodes")) {
        if (j.at("max_leaf_nodes").is_null())
            p.max_leaf_nodes.reset();
        else
            p.max_leaf_nodes = j.at("max_leaf_nodes").get<std::size_t>();
    }
    if (j.contains("max_features")) p.max_features = max_features_from_json(j.at("max_features"));
    p.validate();
    return p;
}

inline ForestParams forest_params_from_json(const nlohmann::json& j) {
    ForestParams p;
    if (j.contains("n_estimators")) p.n_estimators = j.at("n_estimators").get<std::size_t>();
    if (j.contains("bootstrap")) p.bootstrap = j.at("bootstrap").get<bool>();
    p.tree = tree_params_from_json(j, p.tree);
    p.validate();
    return p;
}

inline AdaBoostParams adaboost_params_from_json(const nlohmann::json& j) {
    AdaBoostParams p;
    if (j.contains("n_estimators")) p.n_estimators = j.at("n_estimators").get<std::size_t>();
    if (j.contains("base")) p.base = tree_params_from_json(j.at("base"), p.base);
    p.validate();
    return p;
}

inline GbtParams gbt_params_from_json(const nlohmann::json& j) {
    GbtParams p;
    if (j.contains("n_estimators")) p.n_estimators = j.at("n_estimators").get<std::size_t>();
    if (j.contains("max_depth")) p.max_depth = j.at("max_depth").get<std::size_t>();
    if (j.contains("learning_rate")) p.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("lambda")) p.lambda = j.at("lambda").get<double>();
    if (j.contains("gamma")) p.gamma = j.at("gamma").get<double>();
    if (j.contains("min_child_weight"))
        p.min_child_weight = j.at("min_child_weight").get<double>();
    p.validate();
    return p;
}

inline ObliviousParams oblivious_params_from_json(const nlohmann::json& j) {
    ObliviousParams p;
    if (j.contains("iterations")) p.iterations = j.at("iterations").get<std::size_t>();
    if (j.contains("depth")) p.depth = j.at("depth").get<std::size_t>();
    if (j.contains("learning_rate")) p.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("l2_leaf_reg")) p.l2_leaf_reg = j.at("l2_leaf_reg").get<double>();
    p.validate();
    return p;
}

/// Trains the requested variant from a JSON parameter object. The returned
/// Model carries the classifier only; mask and imputation stats are the
/// caller's responsibility.
inline Model train_model(const Dataset& ds, ModelVariant variant, const nlohmann::json& params,
                         std::uint64_t seed) {
    Model model;
    model.k_classes = ds.k_classes;
    switch (variant) {
        case ModelVariant::DecisionTree: {
            auto p = tree_params_from_json(params);
            model.core = fit_tree(ds, p, seed);
            break;
        }
        case ModelVariant::RandomForest: {
            auto p = forest_params_from_json(params);
            p.seed = seed;
            model.core = fit_random_forest(ds, p);
            break;
        }
        case ModelVariant::AdaBoost: {
            auto p = adaboost_params_from_json(params);
            p.seed = seed;
            model.core = fit_adaboost(ds, p);
            break;
        }
        case ModelVariant::Gbt: {
            auto p = gbt_params_from_json(params);
            p.seed = seed;
            model.core = fit_gbt(ds, p);
            break;
        }
        case ModelVariant::ObliviousGbt: {
            auto p = oblivious_params_from_json(params);
            p.seed = seed;
            model.core = fit_oblivious_gbt(ds, p);
            break;
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridSpec {
    ModelVariant variant = ModelVariant::RandomForest;
    nlohmann::json base_params = nlohmann::json::object();
    std::map<std::string, std::vector<nlohmann::json>> axes; // name -> candidate values

    void validate() const {
        if (axes.empty()) throw ConfigError("grid: no parameter axes");
        for (const auto& [name, values] : axes)
            if (values.empty()) throw ConfigError("grid: axis '" + name + "' has no values");
    }
};

/// Grids centered on the tuned values reported for this task, one step
/// below and above on the two most influential axes per variant.
inline GridSpec default_grid(ModelVariant variant) {
    GridSpec grid;
    grid.variant = variant;
    switch (variant) {
        case ModelVariant::DecisionTree:
            grid.axes["max_depth"] = {20, 40, 60};
            grid.axes["min_samples_split"] = {2, 3, 4};
            break;
        case ModelVariant::RandomForest:
            grid.axes["n_estimators"] = {200, 400, 600};
            grid.axes["min_samples_split"] = {2, 3, 4};
            break;
        case ModelVariant::AdaBoost:
            grid.axes["n_estimators"] = {50, 100, 150};
            grid.axes["base_max_depth"] = {20, 40, 60};
            break;
        case ModelVariant::Gbt:
            grid.axes["n_estimators"] = {250, 500, 750};
            grid.axes["learning_rate"] = {0.05, 0.1, 0.2};
            break;
        case ModelVariant::ObliviousGbt:
            grid.axes["iterations"] = {500, 1000, 1500};
            grid.axes["depth"] = {6, 8, 10};
            break;
    }
    return grid;
}

inline GridSpec grid_from_json(ModelVariant variant, const nlohmann::json& j,
                               const nlohmann::json& base_params) {
    GridSpec grid;
    grid.variant = variant;
    grid.base_params = base_params;
    for (const auto& [name, values] : j.items()) {
        if (!values.is_array())
            throw ConfigError("grid axis '" + name + "' must be an array of candidate values");
        grid.axes[name] = std::vector<nlohmann::json>(values.begin(), values.end());
    }
    grid.validate();
    return grid;
}

/// Applies one grid assignment on top of the base parameter object.
/// "base_"-prefixed names address the AdaBoost base tree.
inline nlohmann::json apply_grid_point(const nlohmann::json& base,
                                       const std::vector<std::pair<std::string, nlohmann::json>>&
                                           assignment) {
    nlohmann::json params = base;
    for (const auto& [name, value] : assignment) {
        if (name.rfind("base_", 0) == 0)
            params["base"][name.substr(5)] = value;
        else
            params[name] = value;
    }
    return params;
}

/// Enumerates the full cartesian product in deterministic order:
/// lexicographic over axis names, earlier names most significant, values in
/// listed order.
inline std::vector<nlohmann::json> enumerate_grid(const GridSpec& grid) {
    grid.validate();
    std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes(grid.axes.begin(),
                                                                          grid.axes.end());
    std::vector<std::size_t> odometer(axes.size(), 0);
    std::vector<nlohmann::json> configs;
    while (true) {
        std::vector<std::pair<std::string, nlohmann::json>> assignment;
        for (std::size_t a = 0; a < axes.size(); ++a)
            assignment.emplace_back(axes[a].first, axes[a].second[odometer[a]]);
        configs.push_back(apply_grid_point(grid.base_params, assignment));

        std::size_t a = axes.size();
        while (a > 0) {
            --a;
            if (++odometer[a] < axes[a].second.size()) break;
            odometer[a] = 0;
            if (a == 0) return configs;
        }
        if (axes.empty()) return configs;
    }
}

struct CvResult {
    std::vector<nlohmann::json> configs;
    std::vector<std::vector<double>> fold_scores; // [config][fold]
    std::vector<double> mean_scores;
    std::vector<double> std_scores;
    std::size_t best_index = 0;
    nlohmann::json best_params;
};

/// Scores every grid configuration by mean stratified-CV accuracy over a
/// fold assignment computed once and shared by all configs; the winner is
/// the maximum mean with ties resolved toward the lowest enumeration index.
inline CvResult grid_search(const GridSpec& grid, const Dataset& ds, std::size_t cv_folds = 10,
                            std::uint64_t seed = 0) {
    CvResult result;
    result.configs = enumerate_grid(grid);
    const auto folds = stratified_kfold(ds, cv_folds, seed);

    const std::size_t n_configs = result.configs.size();
    result.fold_scores.assign(n_configs, std::vector<double>(cv_folds, 0.0));

    std::vector<Dataset> train_sets(cv_folds);
    std::vector<bool> in_fold(ds.n());
    for (std::size_t j = 0; j < cv_folds; ++j) {
        std::fill(in_fold.begin(), in_fold.end(), false);
        for (std::size_t r : folds[j]) in_fold[r] = true;
        std::vector<std::size_t> train_rows;
        train_rows.reserve(ds.n() - folds[j].size());
        for (std::size_t r = 0; r < ds.n(); ++r)
            if (!in_fold[r]) train_rows.push_back(r);
        train_sets[j] = select_rows(ds, train_rows);
    }

    parallel_for(0, n_configs * cv_folds, [&](std::size_t task) {
        const std::size_t c = task / cv_folds;
        const std::size_t j = task % cv_folds;
        const Model model = train_model(train_sets[j], grid.variant, result.configs[c],
                                        Rng::mix(seed ^ (j + 1)));
        std::size_t correct = 0;
        for (std::size_t r : folds[j])
            if (predict_row(model, ds.X.row(r)) == ds.y[r]) ++correct;
        result.fold_scores[c][j] =
            static_cast<double>(correct) / static_cast<double>(folds[j].size());
    });

    result.mean_scores.resize(n_configs);
    result.std_scores.resize(n_configs);
    for (std::size_t c = 0; c < n_configs; ++c) {
        double mean = 0.0;
        for (double s : result.fold_scores[c]) mean += s;
        mean /= static_cast<double>(cv_folds);
        double var = 0.0;
        for (double s : result.fold_scores[c]) var += (s - mean) * (s - mean);
        result.mean_scores[c] = mean;
        result.std_scores[c] = std::sqrt(var / static_cast<double>(cv_folds));
        if (result.mean_scores[c] > result.mean_scores[result.best_index]) result.best_index = c;
    }
    result.best_params = result.configs[result.best_index];
    return result;
}

} // namespace nutripred
