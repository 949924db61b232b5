#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nutripred/gbt.hpp"

namespace nutripred {

/// Oblivious boosting defaults follow the tuned configuration reported for
/// this task: 1000 iterations, depth 8, learning rate 0.1, L2 leaf reg 3.
struct ObliviousParams {
    std::size_t iterations = 1000;
    std::size_t depth = 8;
    double learning_rate = 0.1;
    double l2_leaf_reg = 3.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (iterations < 1) throw ConfigError("oblivious: iterations must be >= 1");
        if (depth < 1) throw ConfigError("oblivious: depth must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("oblivious: learning_rate must be > 0");
        if (l2_leaf_reg < 0.0) throw ConfigError("oblivious: l2_leaf_reg must be >= 0");
    }
};

/// One symmetric tree: level ` applies the same (feature, threshold) test to
/// every sample; a sample's leaf is the bit vector of its test outcomes.
struct ObliviousTree {
    std::vector<int> features;        // one per level
    std::vector<double> thresholds;   // one per level
    std::vector<double> leaf_values;  // 2^levels entries, learning rate applied
    std::vector<double> gain_by_feature;

    std::size_t leaf_of(std::span<const double> x) const {
        std::size_t leaf = 0;
        for (std::size_t level = 0; level < features.size(); ++level) {
            leaf <<= 1;
            if (x[static_cast<std::size_t>(features[level])] > thresholds[level]) leaf |= 1;
        }
        return leaf;
    }

    double apply(std::span<const double> x) const { return leaf_values[leaf_of(x)]; }
};

namespace detail {

/// Per-feature row orderings, computed once per fit and shared across
/// levels, classes, and iterations.
struct ObliviousCandidates {
    std::vector<std::vector<std::size_t>> sorted_rows; // [feature][rank] -> row

    explicit ObliviousCandidates(const Matrix& X) {
        sorted_rows.resize(X.cols());
        for (std::size_t f = 0; f < X.cols(); ++f) {
            auto& order = sorted_rows[f];
            order.resize(X.rows());
            for (std::size_t i = 0; i < X.rows(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&X, f](std::size_t a, std::size_t b) {
                return X.at(a, f) < X.at(b, f);
            });
        }
    }
};

} // namespace detail

/// Fits one oblivious tree on (g, h). Each level picks the single
/// (feature, midpoint threshold) maximizing sum over leaves of G^2/(H+reg),
/// swept in sorted order with incremental per-leaf sums. Leaves left empty
/// by the shared splits get value zero.
inline ObliviousTree fit_oblivious_tree(const Matrix& X, std::span<const double> grad,
                                        std::span<const double> hess,
                                        const detail::ObliviousCandidates& candidates,
                                        const ObliviousParams& params) {
    const std::size_t n = X.rows();
    const double reg = params.l2_leaf_reg;
    ObliviousTree tree;
    tree.gain_by_feature.assign(X.cols(), 0.0);

    std::vector<std::size_t> leaf_of(n, 0);
    std::size_t leaf_count = 1;

    double g_total = 0.0, h_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g_total += grad[i];
        h_total += hess[i];
    }
    double current_score = g_total * g_total / (h_total + reg);

    std::vector<double> g_left, h_left, g_leaf, h_leaf;
    for (std::size_t level = 0; level < params.depth; ++level) {
        g_leaf.assign(leaf_count, 0.0);
        h_leaf.assign(leaf_count, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            g_leaf[leaf_of[i]] += grad[i];
            h_leaf[leaf_of[i]] += hess[i];
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = -1.0;
        for (std::size_t f = 0; f < X.cols(); ++f) {
            const auto& order = candidates.sorted_rows[f];
            g_left.assign(leaf_count, 0.0);
            h_left.assign(leaf_count, 0.0);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const std::size_t r = order[i];
                g_left[leaf_of[r]] += grad[r];
                h_left[leaf_of[r]] += hess[r];
                const double a = X.at(r, f);
                const double b = X.at(order[i + 1], f);
                if (a == b) continue;
                double threshold = a + (b - a) / 2.0;
                if (threshold >= b) threshold = a;
                double score = 0.0;
                for (std::size_t leaf = 0; leaf < leaf_count; ++leaf) {
                    const double gl = g_left[leaf], hl = h_left[leaf];
                    const double gr = g_leaf[leaf] - gl, hr = h_leaf[leaf] - hl;
                    score += gl * gl / (hl + reg);
                    score += gr * gr / (hr + reg);
                }
                if (score > best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold = threshold;
                }
            }
        }
        if (best_feature < 0) break; // all features constant

        tree.features.push_back(best_feature);
        tree.thresholds.push_back(best_threshold);
        tree.gain_by_feature[static_cast<std::size_t>(best_feature)] +=
            std::max(0.0, best_score - current_score);
        current_score = best_score;

        for (std::size_t i = 0; i < n; ++i) {
            leaf_of[i] <<= 1;
            if (X.at(i, static_cast<std::size_t>(best_feature)) > best_threshold)
                leaf_of[i] |= 1;
        }
        leaf_count <<= 1;
    }

    g_leaf.assign(leaf_count, 0.0);
    h_leaf.assign(leaf_count, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        g_leaf[leaf_of[i]] += grad[i];
        h_leaf[leaf_of[i]] += hess[i];
    }
    tree.leaf_values.resize(leaf_count);
    for (std::size_t leaf = 0; leaf < leaf_count; ++leaf) {
        tree.leaf_values[leaf] =
            params.learning_rate * (-g_leaf[leaf] / (h_leaf[leaf] + params.l2_leaf_reg));
    }
    return tree;
}

struct ObliviousGbtModel {
    std::vector<std::vector<ObliviousTree>> stages; // [iteration][class]
    std::vector<double> training_loss;
    int k_classes = 0;
    std::size_t n_features = 0;
};

/// Gradient boosting over oblivious trees with the same softmax Newton
/// scheme as fit_gbt.
inline ObliviousGbtModel fit_oblivious_gbt(const Dataset& ds, const ObliviousParams& params) {
    params.validate();
    ds.validate();
    const std::size_t n = ds.n();
    const auto K = static_cast<std::size_t>(ds.k_classes);

    ObliviousGbtModel model;
    model.k_classes = ds.k_classes;
    model.n_features = ds.d();

    const detail::ObliviousCandidates candidates(ds.X);
    Matrix scores(n, K, 0.0);
    Matrix grad(n, K), hess(n, K);

    for (std::size_t iter = 0; iter < params.iterations; ++iter) {
        parallel_for(0, n, [&](std::size_t i) {
            softmax_grad_hess(scores.row(i), ds.y[i], grad.row(i), hess.row(i));
        });

        std::vector<ObliviousTree> stage(K);
        parallel_for(0, K, [&](std::size_t k) {
            std::vector<double> g_col(n), h_col(n);
            for (std::size_t i = 0; i < n; ++i) {
                g_col[i] = grad.at(i, k);
                h_col[i] = hess.at(i, k);
            }
            stage[k] = fit_oblivious_tree(ds.X, g_col, h_col, candidates, params);
        });

        parallel_for(0, n, [&](std::size_t i) {
            auto row = ds.X.row(i);
            for (std::size_t k = 0; k < K; ++k) scores.at(i, k) += stage[k].apply(row);
        });

        model.stages.push_back(std::move(stage));
        model.training_loss.push_back(multiclass_log_loss(scores, ds.y));
    }
    return model;
}

inline std::vector<double> proba_oblivious(const ObliviousGbtModel& model,
                                           std::span<const double> x) {
    std::vector<double> scores(static_cast<std::size_t>(model.k_classes), 0.0);
    for (const auto& stage : model.stages)
        for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += stage[k].apply(x);
    return softmax(scores);
}

inline int predict_oblivious(const ObliviousGbtModel& model, std::span<const double> x) {
    auto p = proba_oblivious(model, x);
    return argmax_class(p);
}

} // namespace nutripred
