#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "nutripred/data.hpp"
#include "nutripred/random.hpp"

namespace nutripred {

enum class Criterion { Gini, Entropy };

inline std::string to_string(Criterion c) {
    return c == Criterion::Gini ? "gini" : "entropy";
}

inline Criterion criterion_from_string(const std::string& s) {
    if (s == "gini") return Criterion::Gini;
    if (s == "entropy") return Criterion::Entropy;
    throw ConfigError("unknown criterion: " + s);
}

/// Node-level feature subsampling policy.
struct MaxFeatures {
    enum class Mode { All, Sqrt, Count };
    Mode mode = Mode::All;
    std::size_t count = 0;

    static MaxFeatures all() { return {}; }
    static MaxFeatures sqrt() { return {Mode::Sqrt, 0}; }
    static MaxFeatures fixed(std::size_t k) { return {Mode::Count, k}; }

    std::size_t resolve(std::size_t d) const {
        switch (mode) {
            case Mode::All: return d;
            case Mode::Sqrt:
                return std::max<std::size_t>(
                    1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
            case Mode::Count: return std::clamp<std::size_t>(count, 1, d);
        }
        return d;
    }
};

struct TreeParams {
    Criterion criterion = Criterion::Gini;
    std::optional<std::size_t> max_depth;
    std::size_t min_samples_split = 2;
    std::optional<std::size_t> max_leaf_nodes;
    MaxFeatures max_features = MaxFeatures::all();

    void validate() const {
        if (min_samples_split < 2) throw ConfigError("tree: min_samples_split must be >= 2");
        if (max_leaf_nodes && *max_leaf_nodes < 1)
            throw ConfigError("tree: max_leaf_nodes must be >= 1");
        if (max_features.mode == MaxFeatures::Mode::Count && max_features.count < 1)
            throw ConfigError("tree: max_features count must be >= 1");
    }
};

/// Weighted class-count impurity. Gini: 1 - sum p^2. Entropy in bits.
inline double impurity(std::span<const double> counts, Criterion criterion) {
    double total = 0.0;
    for (double c : counts) total += c;
    if (total <= 0.0) throw std::invalid_argument("impurity: all-zero counts");
    if (criterion == Criterion::Gini) {
        double sum_sq = 0.0;
        for (double c : counts) {
            double p = c / total;
            sum_sq += p * p;
        }
        return 1.0 - sum_sq;
    }
    double h = 0.0;
    for (double c : counts) {
        if (c <= 0.0) continue;
        double p = c / total;
        h -= p * std::log2(p);
    }
    return h;
}

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

namespace detail {

/// Greedy CART split search over a feature subset. `rows` must contain only
/// positive-weight rows. Thresholds sit at midpoints of consecutive distinct
/// sorted values; gain is the weighted impurity decrease. Ties break toward
/// the lowest feature index, then the lowest threshold. Returns nothing when
/// the best gain is <= 0.
inline std::optional<SplitCandidate> best_split_impl(
    const Matrix& X, const std::vector<int>& y, std::span<const double> weights,
    const std::vector<std::size_t>& rows, int k_classes, const TreeParams& params, Rng& rng) {
    const std::size_t d = X.cols();
    const std::size_t subset_size = params.max_features.resolve(d);

    std::vector<std::size_t> features;
    if (subset_size >= d) {
        features.resize(d);
        for (std::size_t f = 0; f < d; ++f) features[f] = f;
    } else {
        features = rng.sample_without_replacement(d, subset_size);
    }

    std::vector<double> parent_counts(static_cast<std::size_t>(k_classes), 0.0);
    double total_weight = 0.0;
    for (std::size_t r : rows) {
        parent_counts[static_cast<std::size_t>(y[r])] += weights[r];
        total_weight += weights[r];
    }
    if (total_weight <= 0.0) return std::nullopt;
    const double parent_impurity = impurity(parent_counts, params.criterion);

    struct Entry {
        double value;
        double weight;
        int cls;
    };
    std::vector<Entry> entries;
    entries.reserve(rows.size());

    std::optional<SplitCandidate> best;
    std::vector<double> left_counts(static_cast<std::size_t>(k_classes));

    for (std::size_t f : features) {
        entries.clear();
        for (std::size_t r : rows)
            entries.push_back({X.at(r, f), weights[r], y[r]});
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.value < b.value; });

        std::fill(left_counts.begin(), left_counts.end(), 0.0);
        double left_weight = 0.0;
        for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
            left_counts[static_cast<std::size_t>(entries[i].cls)] += entries[i].weight;
            left_weight += entries[i].weight;
            const double a = entries[i].value;
            const double b = entries[i + 1].value;
            if (a == b) continue;
            double threshold = a + (b - a) / 2.0;
            if (threshold >= b) threshold = a; // midpoint rounded up; keep separation

            const double right_weight = total_weight - left_weight;
            double left_imp = 0.0, right_imp = 0.0;
            if (params.criterion == Criterion::Gini) {
                double ls = 0.0, rs = 0.0;
                for (std::size_t k = 0; k < left_counts.size(); ++k) {
                    const double lp = left_counts[k] / left_weight;
                    const double rp = (parent_counts[k] - left_counts[k]) / right_weight;
                    ls += lp * lp;
                    rs += rp * rp;
                }
                left_imp = 1.0 - ls;
                right_imp = 1.0 - rs;
            } else {
                for (std::size_t k = 0; k < left_counts.size(); ++k) {
                    const double lc = left_counts[k];
                    const double rc = parent_counts[k] - left_counts[k];
                    if (lc > 0.0) {
                        const double p = lc / left_weight;
                        left_imp -= p * std::log2(p);
                    }
                    if (rc > 0.0) {
                        const double p = rc / right_weight;
                        right_imp -= p * std::log2(p);
                    }
                }
            }
            const double gain = parent_impurity - (left_weight / total_weight) * left_imp -
                                (right_weight / total_weight) * right_imp;
            if (!best || gain > best->gain ||
                (gain == best->gain &&
                 (f < best->feature || (f == best->feature && threshold < best->threshold)))) {
                best = SplitCandidate{f, threshold, gain};
            }
        }
    }
    if (best && best->gain <= 0.0) return std::nullopt;
    return best;
}

} // namespace detail

/// Public split-search entry point (exercised directly by tests).
inline std::optional<SplitCandidate> best_split(const Matrix& X, const std::vector<int>& y,
                                                std::span<const double> weights,
                                                const std::vector<std::size_t>& rows,
                                                int k_classes, const TreeParams& params,
                                                Rng& rng) {
    std::vector<std::size_t> positive;
    positive.reserve(rows.size());
    for (std::size_t r : rows)
        if (weights[r] > 0.0) positive.push_back(r);
    if (positive.size() < params.min_samples_split) return std::nullopt;
    return detail::best_split_impl(X, y, weights, positive, k_classes, params, rng);
}

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> distribution; // leaf: normalized weighted class shares
};

struct DecisionTreeModel {
    std::vector<TreeNode> nodes;
    int k_classes = 0;
    std::size_t n_features = 0;
    std::vector<double> gain_by_feature; // raw importance accumulator

    std::size_t leaf_count() const {
        std::size_t n = 0;
        for (const auto& node : nodes)
            if (node.feature < 0) ++n;
        return n;
    }
};

namespace detail {

struct FrontierEntry {
    int node_id;
    std::size_t creation_index;
    std::size_t depth;
    double node_weight;
    double node_impurity;
    SplitCandidate split;
    std::vector<std::size_t> rows;
};

struct FrontierOrder {
    // max-heap by gain; ties expand the earliest-created node first
    bool operator()(const FrontierEntry& a, const FrontierEntry& b) const {
        if (a.split.gain != b.split.gain) return a.split.gain < b.split.gain;
        return a.creation_index > b.creation_index;
    }
};

} // namespace detail

/// Greedy CART fit with sample weights. Expansion is best-first by gain,
/// which makes max_leaf_nodes meaningful and is equivalent to depth-first
/// growth when no leaf budget is set. Zero-weight rows are excluded
/// throughout, so they cannot influence thresholds or counts. Node feature
/// subsets draw from streams keyed by (seed, node creation index).
inline DecisionTreeModel fit_tree(const Dataset& ds, std::span<const double> weights,
                                  const TreeParams& params, std::uint64_t seed) {
    params.validate();
    if (weights.size() != ds.n()) throw std::invalid_argument("fit_tree: weight count != n");
    double weight_sum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w))
            throw std::invalid_argument("fit_tree: weights must be finite and non-negative");
        weight_sum += w;
    }
    if (weight_sum <= 0.0) throw std::invalid_argument("fit_tree: weights sum to zero");

    DecisionTreeModel model;
    model.k_classes = ds.k_classes;
    model.n_features = ds.d();
    model.gain_by_feature.assign(ds.d(), 0.0);

    std::vector<std::size_t> root_rows;
    root_rows.reserve(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i)
        if (weights[i] > 0.0) root_rows.push_back(i);

    std::priority_queue<detail::FrontierEntry, std::vector<detail::FrontierEntry>,
                        detail::FrontierOrder>
        frontier;
    std::size_t creation_counter = 0;
    std::size_t leaves = 1;
    const std::size_t leaf_budget =
        params.max_leaf_nodes ? *params.max_leaf_nodes : std::numeric_limits<std::size_t>::max();

    auto node_distribution = [&](const std::vector<std::size_t>& rows, double& weight_out) {
        std::vector<double> counts(static_cast<std::size_t>(ds.k_classes), 0.0);
        weight_out = 0.0;
        for (std::size_t r : rows) {
            counts[static_cast<std::size_t>(ds.y[r])] += weights[r];
            weight_out += weights[r];
        }
        return counts;
    };

    // Creates node storage, evaluates its split, and queues it when viable.
    auto open_node = [&](std::vector<std::size_t>&& rows, std::size_t depth) -> int {
        const int id = static_cast<int>(model.nodes.size());
        model.nodes.emplace_back();
        double node_weight = 0.0;
        auto counts = node_distribution(rows, node_weight);
        auto& node = model.nodes[static_cast<std::size_t>(id)];
        node.distribution.resize(counts.size());
        for (std::size_t k = 0; k < counts.size(); ++k)
            node.distribution[k] = counts[k] / node_weight;

        const std::size_t my_creation = creation_counter++;
        const bool depth_ok = !params.max_depth || depth < *params.max_depth;
        if (!depth_ok || rows.size() < params.min_samples_split) return id;

        Rng rng = Rng::stream(seed, my_creation);
        auto split = detail::best_split_impl(ds.X, ds.y, weights, rows, ds.k_classes, params, rng);
        if (!split) return id;

        detail::FrontierEntry entry;
        entry.node_id = id;
        entry.creation_index = my_creation;
        entry.depth = depth;
        entry.node_weight = node_weight;
        entry.node_impurity = impurity(counts, params.criterion);
        entry.split = *split;
        entry.rows = std::move(rows);
        frontier.push(std::move(entry));
        return id;
    };

    open_node(std::move(root_rows), 0);

    const double root_weight = weight_sum;
    while (!frontier.empty() && leaves < leaf_budget) {
        detail::FrontierEntry entry = frontier.top();
        frontier.pop();

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : entry.rows) {
            if (ds.X.at(r, entry.split.feature) <= entry.split.threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }

        auto& node = model.nodes[static_cast<std::size_t>(entry.node_id)];
        node.feature = static_cast<int>(entry.split.feature);
        node.threshold = entry.split.threshold;
        node.distribution.clear();
        model.gain_by_feature[entry.split.feature] +=
            (entry.node_weight / root_weight) * entry.split.gain;
        ++leaves;

        const int left_id = open_node(std::move(left_rows), entry.depth + 1);
        const int right_id = open_node(std::move(right_rows), entry.depth + 1);
        model.nodes[static_cast<std::size_t>(entry.node_id)].left = left_id;
        model.nodes[static_cast<std::size_t>(entry.node_id)].right = right_id;
    }

    return model;
}

inline DecisionTreeModel fit_tree(const Dataset& ds, const TreeParams& params,
                                  std::uint64_t seed) {
    std::vector<double> weights(ds.n(), 1.0);
    return fit_tree(ds, weights, params, seed);
}

inline const std::vector<double>& proba_tree(const DecisionTreeModel& model,
                                             std::span<const double> x) {
    int id = 0;
    while (model.nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const auto& node = model.nodes[static_cast<std::size_t>(id)];
        id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return model.nodes[static_cast<std::size_t>(id)].distribution;
}

inline int argmax_class(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    return static_cast<int>(best);
}

inline int predict_tree(const DecisionTreeModel& model, std::span<const double> x) {
    return argmax_class(proba_tree(model, x));
}

} // namespace nutripred
