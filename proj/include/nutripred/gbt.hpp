#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nutripred/data.hpp"
#include "nutripred/parallel.hpp"
#include "nutripred/tree.hpp"

namespace nutripred {

/// Second-order softmax boosting defaults follow the tuned configuration
/// reported for this task: 500 rounds, depth cap 100, learning rate 0.1.
struct GbtParams {
    std::size_t n_estimators = 500;
    std::size_t max_depth = 100;
    double learning_rate = 0.1;
    double lambda = 1.0;           // L2 penalty on leaf weights
    double gamma = 0.0;            // per-split penalty
    double min_child_weight = 1.0; // minimum hessian sum per child
    std::uint64_t seed = 0;

    void validate() const {
        if (n_estimators < 1) throw ConfigError("gbt: n_estimators must be >= 1");
        if (!(learning_rate > 0.0) || learning_rate > 1.0)
            throw ConfigError("gbt: learning_rate must be in (0, 1]");
        if (lambda < 0.0) throw ConfigError("gbt: lambda must be >= 0");
        if (gamma < 0.0) throw ConfigError("gbt: gamma must be >= 0");
    }
};

/// Numerically stable softmax.
inline std::vector<double> softmax(std::span<const double> scores) {
    double max_score = scores[0];
    for (double s : scores) max_score = std::max(max_score, s);
    std::vector<double> p(scores.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        p[k] = std::exp(scores[k] - max_score);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

/// Gradient and diagonal hessian of the multiclass log-loss at one sample:
/// g_k = p_k - [y = k], h_k = p_k (1 - p_k).
inline void softmax_grad_hess(std::span<const double> scores, int label,
                              std::span<double> grad, std::span<double> hess) {
    auto p = softmax(scores);
    for (std::size_t k = 0; k < p.size(); ++k) {
        grad[k] = p[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);
        hess[k] = p[k] * (1.0 - p[k]);
    }
}

inline double multiclass_log_loss(const Matrix& scores, const std::vector<int>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto p = softmax(scores.row(i));
        loss -= std::log(std::max(p[static_cast<std::size_t>(y[i])], 1e-15));
    }
    return loss / static_cast<double>(scores.rows());
}

struct RegressionTreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; // leaf weight (learning rate already applied at fit)
};

struct RegressionTree {
    std::vector<RegressionTreeNode> nodes;
    std::vector<double> gain_by_feature;

    double apply(std::span<const double> x) const {
        int id = 0;
        while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
            const auto& node = nodes[static_cast<std::size_t>(id)];
            id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                             : node.right;
        }
        return nodes[static_cast<std::size_t>(id)].value;
    }
};

namespace detail {

struct GbtSplit {
    std::size_t feature;
    double threshold;
    double gain;
};

/// Exact greedy split on (gradient, hessian) sums. Gain is the regularized
/// score improvement 0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)] - gamma;
/// children whose hessian sum falls below min_child_weight are rejected.
inline std::optional<GbtSplit> best_gbt_split(const Matrix& X,
                                              std::span<const double> grad,
                                              std::span<const double> hess,
                                              const std::vector<std::size_t>& rows,
                                              const GbtParams& params) {
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t r : rows) {
        g_total += grad[r];
        h_total += hess[r];
    }
    const double parent_score = g_total * g_total / (h_total + params.lambda);

    struct Entry {
        double value, g, h;
    };
    std::vector<Entry> entries;
    entries.reserve(rows.size());
    std::optional<GbtSplit> best;

    for (std::size_t f = 0; f < X.cols(); ++f) {
        entries.clear();
        for (std::size_t r : rows) entries.push_back({X.at(r, f), grad[r], hess[r]});
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.value < b.value; });

        double g_left = 0.0, h_left = 0.0;
        for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
            g_left += entries[i].g;
            h_left += entries[i].h;
            const double a = entries[i].value;
            const double b = entries[i + 1].value;
            if (a == b) continue;
            const double h_right = h_total - h_left;
            if (h_left < params.min_child_weight || h_right < params.min_child_weight) continue;
            double threshold = a + (b - a) / 2.0;
            if (threshold >= b) threshold = a;
            const double g_right = g_total - g_left;
            const double gain = 0.5 * (g_left * g_left / (h_left + params.lambda) +
                                       g_right * g_right / (h_right + params.lambda) -
                                       parent_score) -
                                params.gamma;
            if (!best || gain > best->gain ||
                (gain == best->gain &&
                 (f < best->feature || (f == best->feature && threshold < best->threshold)))) {
                best = GbtSplit{f, threshold, gain};
            }
        }
    }
    if (best && best->gain <= 0.0) return std::nullopt;
    return best;
}

inline void grow_gbt_node(RegressionTree& tree, const Matrix& X, std::span<const double> grad,
                          std::span<const double> hess, std::vector<std::size_t>&& rows,
                          std::size_t depth, const GbtParams& params, double scale) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::optional<GbtSplit> split;
    if (depth < params.max_depth)
        split = best_gbt_split(X, grad, hess, rows, params);

    if (!split) {
        double g = 0.0, h = 0.0;
        for (std::size_t r : rows) {
            g += grad[r];
            h += hess[r];
        }
        tree.nodes[static_cast<std::size_t>(id)].value = scale * (-g / (h + params.lambda));
        return;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
        if (X.at(r, split->feature) <= split->threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[static_cast<std::size_t>(id)].feature = static_cast<int>(split->feature);
    tree.nodes[static_cast<std::size_t>(id)].threshold = split->threshold;
    tree.gain_by_feature[split->feature] += split->gain;

    const int left_id = static_cast<int>(tree.nodes.size());
    grow_gbt_node(tree, X, grad, hess, std::move(left_rows), depth + 1, params, scale);
    const int right_id = static_cast<int>(tree.nodes.size());
    grow_gbt_node(tree, X, grad, hess, std::move(right_rows), depth + 1, params, scale);
    tree.nodes[static_cast<std::size_t>(id)].left = left_id;
    tree.nodes[static_cast<std::size_t>(id)].right = right_id;
}

} // namespace detail

/// Fits one regression tree on (g, h); leaf values carry `scale` (the
/// learning rate) already multiplied in.
inline RegressionTree fit_gbt_tree(const Matrix& X, std::span<const double> grad,
                                   std::span<const double> hess, const GbtParams& params,
                                   double scale) {
    RegressionTree tree;
    tree.gain_by_feature.assign(X.cols(), 0.0);
    std::vector<std::size_t> rows(X.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    detail::grow_gbt_node(tree, X, grad, hess, std::move(rows), 0, params, scale);
    return tree;
}

struct GbtModel {
    std::vector<std::vector<RegressionTree>> stages; // [iteration][class]
    std::vector<double> training_loss;               // log-loss after each iteration
    int k_classes = 0;
    std::size_t n_features = 0;
};

/// Softmax gradient boosting with second-order (Newton) leaf weights. Each
/// iteration fits one regression tree per class on the current gradients and
/// hessians; class fits within an iteration are independent and run in
/// parallel.
inline GbtModel fit_gbt(const Dataset& ds, const GbtParams& params) {
    params.validate();
    ds.validate();
    const std::size_t n = ds.n();
    const auto K = static_cast<std::size_t>(ds.k_classes);

    GbtModel model;
    model.k_classes = ds.k_classes;
    model.n_features = ds.d();

    Matrix scores(n, K, 0.0);
    Matrix grad(n, K), hess(n, K);

    for (std::size_t iter = 0; iter < params.n_estimators; ++iter) {
        parallel_for(0, n, [&](std::size_t i) {
            softmax_grad_hess(scores.row(i), ds.y[i], grad.row(i), hess.row(i));
        });

        std::vector<RegressionTree> stage(K);
        parallel_for(0, K, [&](std::size_t k) {
            std::vector<double> g_col(n), h_col(n);
            for (std::size_t i = 0; i < n; ++i) {
                g_col[i] = grad.at(i, k);
                h_col[i] = hess.at(i, k);
            }
            stage[k] = fit_gbt_tree(ds.X, g_col, h_col, params, params.learning_rate);
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

inline std::vector<double> gbt_scores(const GbtModel& model, std::span<const double> x) {
    std::vector<double> scores(static_cast<std::size_t>(model.k_classes), 0.0);
    for (const auto& stage : model.stages)
        for (std::size_t k = 0; k < scores.size(); ++k) scores[k] += stage[k].apply(x);
    return scores;
}

inline std::vector<double> proba_gbt(const GbtModel& model, std::span<const double> x) {
    auto scores = gbt_scores(model, x);
    return softmax(scores);
}

inline int predict_gbt(const GbtModel& model, std::span<const double> x) {
    auto p = proba_gbt(model, x);
    return argmax_class(p);
}

} // namespace nutripred
