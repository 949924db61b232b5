#pragma once

#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nutripred/adaboost.hpp"
#include "nutripred/data.hpp"
#include "nutripred/forest.hpp"
#include "nutripred/gbt.hpp"
#include "nutripred/oblivious.hpp"
#include "nutripred/parallel.hpp"
#include "nutripred/tree.hpp"

namespace nutripred {

enum class ModelVariant { DecisionTree, RandomForest, AdaBoost, Gbt, ObliviousGbt };

inline std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::DecisionTree: return "decision_tree";
        case ModelVariant::RandomForest: return "random_forest";
        case ModelVariant::AdaBoost: return "adaboost";
        case ModelVariant::Gbt: return "gbt";
        case ModelVariant::ObliviousGbt: return "oblivious_gbt";
    }
    return "decision_tree";
}

inline ModelVariant model_variant_from_string(const std::string& s) {
    if (s == "decision_tree") return ModelVariant::DecisionTree;
    if (s == "random_forest") return ModelVariant::RandomForest;
    if (s == "adaboost") return ModelVariant::AdaBoost;
    if (s == "gbt" || s == "xgboost") return ModelVariant::Gbt;
    if (s == "oblivious_gbt" || s == "catboost") return ModelVariant::ObliviousGbt;
    throw ConfigError("unknown model variant: " + s);
}

/// A trained classifier plus everything needed to score raw records:
/// the feature mask selected during training and the training-time
/// imputation statistics (over the full schema column set).
struct Model {
    std::variant<DecisionTreeModel, RandomForestModel, AdaBoostModel, GbtModel,
                 ObliviousGbtModel>
        core;
    std::vector<std::size_t> feature_mask; // schema feature indices the model consumes
    std::vector<std::string> feature_names;
    std::vector<double> impute_fill; // per schema feature column; may be empty
    int k_classes = 4;

    ModelVariant variant() const { return static_cast<ModelVariant>(core.index()); }
};

/// Class probabilities for one already-masked feature row.
inline std::vector<double> predict_proba_row(const Model& model, std::span<const double> x) {
    return std::visit(
        [&](const auto& m) -> std::vector<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTreeModel>) {
                const auto& d = proba_tree(m, x);
                return {d.begin(), d.end()};
            } else if constexpr (std::is_same_v<T, RandomForestModel>) {
                return proba_forest(m, x);
            } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
                return proba_adaboost(m, x);
            } else if constexpr (std::is_same_v<T, GbtModel>) {
                return proba_gbt(m, x);
            } else {
                return proba_oblivious(m, x);
            }
        },
        model.core);
}

inline int predict_row(const Model& model, std::span<const double> x) {
    auto p = predict_proba_row(model, x);
    return argmax_class(p);
}

/// Applies the model's feature mask to a full-width row.
inline std::vector<double> mask_row(const Model& model, std::span<const double> full_row) {
    std::vector<double> x(model.feature_mask.size());
    for (std::size_t j = 0; j < model.feature_mask.size(); ++j)
        x[j] = full_row[model.feature_mask[j]];
    return x;
}

/// Batch probabilities over a matrix whose columns already match the mask.
inline Matrix predict_proba(const Model& model, const Matrix& X) {
    Matrix probas(X.rows(), static_cast<std::size_t>(model.k_classes));
    parallel_for(0, X.rows(), [&](std::size_t i) {
        auto p = predict_proba_row(model, X.row(i));
        std::copy(p.begin(), p.end(), probas.row(i).begin());
    });
    return probas;
}

inline std::vector<int> predict(const Model& model, const Matrix& X) {
    std::vector<int> out(X.rows());
    parallel_for(0, X.rows(), [&](std::size_t i) { out[i] = predict_row(model, X.row(i)); });
    return out;
}

/// Mean per-tree/stage share of split gain attributed to each feature,
/// normalized to sum 1. Trees without any split are skipped; a model with
/// no splits at all reports the uniform vector.
inline std::vector<double> feature_importance(const Model& model) {
    std::size_t d = 0;
    std::vector<double> total;
    std::size_t contributing = 0;

    auto accumulate = [&](const std::vector<double>& gains) {
        if (total.empty()) total.assign(gains.size(), 0.0);
        double sum = 0.0;
        for (double g : gains) sum += g;
        if (sum <= 0.0) return;
        for (std::size_t f = 0; f < gains.size(); ++f) total[f] += gains[f] / sum;
        ++contributing;
    };

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            d = m.n_features;
            if constexpr (std::is_same_v<T, DecisionTreeModel>) {
                accumulate(m.gain_by_feature);
            } else if constexpr (std::is_same_v<T, RandomForestModel> ||
                                 std::is_same_v<T, AdaBoostModel>) {
                for (const auto& tree : m.trees) accumulate(tree.gain_by_feature);
            } else {
                for (const auto& stage : m.stages)
                    for (const auto& tree : stage) accumulate(tree.gain_by_feature);
            }
        },
        model.core);

    std::vector<double> importance(d, 0.0);
    if (contributing == 0) {
        if (d > 0) std::fill(importance.begin(), importance.end(), 1.0 / static_cast<double>(d));
        return importance;
    }
    double sum = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
        importance[f] = total[f] / static_cast<double>(contributing);
        sum += importance[f];
    }
    for (double& v : importance) v /= sum;
    return importance;
}

// ---------------------------------------------------------------------------
// JSON persistence. Doubles go through nlohmann's shortest round-trip
// serialization, so a saved model reproduces bit-identical predictions.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json tree_to_json(const DecisionTreeModel& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
        nlohmann::json nj;
        nj["f"] = node.feature;
        if (node.feature >= 0) {
            nj["t"] = node.threshold;
            nj["l"] = node.left;
            nj["r"] = node.right;
        } else {
            nj["d"] = node.distribution;
        }
        nodes.push_back(std::move(nj));
    }
    return {{"nodes", std::move(nodes)}, {"gain", tree.gain_by_feature}};
}

inline DecisionTreeModel tree_from_json(const nlohmann::json& j, int k_classes,
                                        std::size_t n_features) {
    DecisionTreeModel tree;
    tree.k_classes = k_classes;
    tree.n_features = n_features;
    tree.gain_by_feature = j.at("gain").get<std::vector<double>>();
    for (const auto& nj : j.at("nodes")) {
        TreeNode node;
        node.feature = nj.at("f").get<int>();
        if (node.feature >= 0) {
            node.threshold = nj.at("t").get<double>();
            node.left = nj.at("l").get<int>();
            node.right = nj.at("r").get<int>();
        } else {
            node.distribution = nj.at("d").get<std::vector<double>>();
        }
        tree.nodes.push_back(std::move(node));
    }
    return tree;
}

inline nlohmann::json regression_tree_to_json(const RegressionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
        nlohmann::json nj;
        nj["f"] = node.feature;
        if (node.feature >= 0) {
            nj["t"] = node.threshold;
            nj["l"] = node.left;
            nj["r"] = node.right;
        } else {
            nj["v"] = node.value;
        }
        nodes.push_back(std::move(nj));
    }
    return {{"nodes", std::move(nodes)}, {"gain", tree.gain_by_feature}};
}

inline RegressionTree regression_tree_from_json(const nlohmann::json& j) {
    RegressionTree tree;
    tree.gain_by_feature = j.at("gain").get<std::vector<double>>();
    for (const auto& nj : j.at("nodes")) {
        RegressionTreeNode node;
        node.feature = nj.at("f").get<int>();
        if (node.feature >= 0) {
            node.threshold = nj.at("t").get<double>();
            node.left = nj.at("l").get<int>();
            node.right = nj.at("r").get<int>();
        } else {
            node.value = nj.at("v").get<double>();
        }
        tree.nodes.push_back(node);
    }
    return tree;
}

inline nlohmann::json oblivious_tree_to_json(const ObliviousTree& tree) {
    return {{"features", tree.features},
            {"thresholds", tree.thresholds},
            {"leaves", tree.leaf_values},
            {"gain", tree.gain_by_feature}};
}

inline ObliviousTree oblivious_tree_from_json(const nlohmann::json& j) {
    ObliviousTree tree;
    tree.features = j.at("features").get<std::vector<int>>();
    tree.thresholds = j.at("thresholds").get<std::vector<double>>();
    tree.leaf_values = j.at("leaves").get<std::vector<double>>();
    tree.gain_by_feature = j.at("gain").get<std::vector<double>>();
    return tree;
}

} // namespace detail

inline nlohmann::json model_to_json(const Model& model) {
    nlohmann::json j;
    j["format"] = "nutripred-model";
    j["version"] = 1;
    j["variant"] = to_string(model.variant());
    j["k_classes"] = model.k_classes;
    j["feature_mask"] = model.feature_mask;
    j["feature_names"] = model.feature_names;
    j["impute_fill"] = model.impute_fill;

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            j["n_features"] = m.n_features;
            if constexpr (std::is_same_v<T, DecisionTreeModel>) {
                j["tree"] = detail::tree_to_json(m);
            } else if constexpr (std::is_same_v<T, RandomForestModel>) {
                auto trees = nlohmann::json::array();
                for (const auto& t : m.trees) trees.push_back(detail::tree_to_json(t));
                j["trees"] = std::move(trees);
            } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
                auto trees = nlohmann::json::array();
                for (const auto& t : m.trees) trees.push_back(detail::tree_to_json(t));
                j["trees"] = std::move(trees);
                j["alphas"] = m.alphas;
                j["round_errors"] = m.round_errors;
            } else if constexpr (std::is_same_v<T, GbtModel>) {
                auto stages = nlohmann::json::array();
                for (const auto& stage : m.stages) {
                    auto sj = nlohmann::json::array();
                    for (const auto& t : stage) sj.push_back(detail::regression_tree_to_json(t));
                    stages.push_back(std::move(sj));
                }
                j["stages"] = std::move(stages);
                j["training_loss"] = m.training_loss;
            } else {
                auto stages = nlohmann::json::array();
                for (const auto& stage : m.stages) {
                    auto sj = nlohmann::json::array();
                    for (const auto& t : stage) sj.push_back(detail::oblivious_tree_to_json(t));
                    stages.push_back(std::move(sj));
                }
                j["stages"] = std::move(stages);
                j["training_loss"] = m.training_loss;
            }
        },
        model.core);
    return j;
}

inline Model model_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != "nutripred-model")
        throw DataError("model file: unrecognized format tag");
    if (j.value("version", 0) != 1)
        throw DataError("model file: unsupported version");

    Model model;
    model.k_classes = j.at("k_classes").get<int>();
    model.feature_mask = j.at("feature_mask").get<std::vector<std::size_t>>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.impute_fill = j.at("impute_fill").get<std::vector<double>>();
    const auto n_features = j.at("n_features").get<std::size_t>();
    const auto variant = model_variant_from_string(j.at("variant").get<std::string>());

    switch (variant) {
        case ModelVariant::DecisionTree:
            model.core = detail::tree_from_json(j.at("tree"), model.k_classes, n_features);
            break;
        case ModelVariant::RandomForest: {
            RandomForestModel m;
            m.k_classes = model.k_classes;
            m.n_features = n_features;
            for (const auto& tj : j.at("trees"))
                m.trees.push_back(detail::tree_from_json(tj, model.k_classes, n_features));
            model.core = std::move(m);
            break;
        }
        case ModelVariant::AdaBoost: {
            AdaBoostModel m;
            m.k_classes = model.k_classes;
            m.n_features = n_features;
            for (const auto& tj : j.at("trees"))
                m.trees.push_back(detail::tree_from_json(tj, model.k_classes, n_features));
            m.alphas = j.at("alphas").get<std::vector<double>>();
            m.round_errors = j.at("round_errors").get<std::vector<double>>();
            model.core = std::move(m);
            break;
        }
        case ModelVariant::Gbt: {
            GbtModel m;
            m.k_classes = model.k_classes;
            m.n_features = n_features;
            for (const auto& sj : j.at("stages")) {
                std::vector<RegressionTree> stage;
                for (const auto& tj : sj) stage.push_back(detail::regression_tree_from_json(tj));
                m.stages.push_back(std::move(stage));
            }
            m.training_loss = j.at("training_loss").get<std::vector<double>>();
            model.core = std::move(m);
            break;
        }
        case ModelVariant::ObliviousGbt: {
            ObliviousGbtModel m;
            m.k_classes = model.k_classes;
            m.n_features = n_features;
            for (const auto& sj : j.at("stages")) {
                std::vector<ObliviousTree> stage;
                for (const auto& tj : sj) stage.push_back(detail::oblivious_tree_from_json(tj));
                m.stages.push_back(std::move(stage));
            }
            m.training_loss = j.at("training_loss").get<std::vector<double>>();
            model.core = std::move(m);
            break;
        }
    }
    return model;
}

inline void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path);
    out << model_to_json(model).dump(1) << '\n';
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file parse error: ") + e.what());
    }
    return model_from_json(j);
}

} // namespace nutripred
