#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "nutripred/data.hpp"
#include "nutripred/evaluation.hpp"
#include "nutripred/forest.hpp"
#include "nutripred/parallel.hpp"

namespace nutripred {

struct FeatureScore {
    std::size_t feature = 0;
    std::string statistic;
    double value = 0.0;
};

namespace detail {

/// Bin assignment for filter statistics: categorical codes map to their own
/// bin; numeric values fall between quantile cut points.
inline std::vector<std::size_t> bin_feature(const Dataset& ds, std::size_t f,
                                            std::size_t bins) {
    const std::size_t n = ds.n();
    std::vector<std::size_t> assignment(n);
    if (ds.feature_meta[f].is_categorical()) {
        std::vector<double> distinct;
        for (std::size_t i = 0; i < n; ++i) distinct.push_back(ds.X.at(i, f));
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (std::size_t i = 0; i < n; ++i) {
            auto it = std::lower_bound(distinct.begin(), distinct.end(), ds.X.at(i, f));
            assignment[i] = static_cast<std::size_t>(it - distinct.begin());
        }
        return assignment;
    }
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = ds.X.at(i, f);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    for (std::size_t b = 1; b < bins; ++b) {
        const std::size_t pos = b * n / bins;
        if (pos == 0 || pos >= n) continue;
        cuts.push_back(sorted[pos]);
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i < n; ++i) {
        auto it = std::upper_bound(cuts.begin(), cuts.end(), ds.X.at(i, f));
        assignment[i] = static_cast<std::size_t>(it - cuts.begin());
    }
    return assignment;
}

inline std::vector<std::vector<double>> contingency(const std::vector<std::size_t>& bins_of,
                                                    const std::vector<int>& y, int k_classes) {
    std::size_t n_bins = 0;
    for (std::size_t b : bins_of) n_bins = std::max(n_bins, b + 1);
    std::vector<std::vector<double>> table(
        n_bins, std::vector<double>(static_cast<std::size_t>(k_classes), 0.0));
    for (std::size_t i = 0; i < bins_of.size(); ++i)
        table[bins_of[i]][static_cast<std::size_t>(y[i])] += 1.0;
    return table;
}

} // namespace detail

/// Empirical mutual information (bits) between each binned feature and the
/// label.
inline std::vector<FeatureScore> mutual_information(const Dataset& ds, std::size_t bins = 10) {
    if (ds.n() < 2) throw std::invalid_argument("mutual_information: need n >= 2");
    std::vector<FeatureScore> scores(ds.d());
    const double n = static_cast<double>(ds.n());
    parallel_for(0, ds.d(), [&](std::size_t f) {
        auto table = detail::contingency(detail::bin_feature(ds, f, bins), ds.y, ds.k_classes);
        std::vector<double> row_margin(table.size(), 0.0);
        std::vector<double> col_margin(static_cast<std::size_t>(ds.k_classes), 0.0);
        for (std::size_t r = 0; r < table.size(); ++r)
            for (std::size_t c = 0; c < table[r].size(); ++c) {
                row_margin[r] += table[r][c];
                col_margin[c] += table[r][c];
            }
        double mi = 0.0;
        for (std::size_t r = 0; r < table.size(); ++r) {
            for (std::size_t c = 0; c < table[r].size(); ++c) {
                const double joint = table[r][c] / n;
                if (joint <= 0.0) continue;
                const double px = row_margin[r] / n;
                const double py = col_margin[c] / n;
                mi += joint * std::log2(joint / (px * py));
            }
        }
        scores[f] = {f, "mutual_information", std::max(0.0, mi)};
    });
    return scores;
}

/// Pearson chi-square statistic of each (binned feature x class) table.
/// Cells with zero expected count contribute zero.
inline std::vector<FeatureScore> chi_square(const Dataset& ds, std::size_t bins = 10) {
    if (ds.n() < 2) throw std::invalid_argument("chi_square: need n >= 2");
    std::vector<FeatureScore> scores(ds.d());
    const double n = static_cast<double>(ds.n());
    parallel_for(0, ds.d(), [&](std::size_t f) {
        auto table = detail::contingency(detail::bin_feature(ds, f, bins), ds.y, ds.k_classes);
        std::vector<double> row_margin(table.size(), 0.0);
        std::vector<double> col_margin(static_cast<std::size_t>(ds.k_classes), 0.0);
        for (std::size_t r = 0; r < table.size(); ++r)
            for (std::size_t c = 0; c < table[r].size(); ++c) {
                row_margin[r] += table[r][c];
                col_margin[c] += table[r][c];
            }
        double stat = 0.0;
        for (std::size_t r = 0; r < table.size(); ++r) {
            for (std::size_t c = 0; c < table[r].size(); ++c) {
                const double expected = row_margin[r] * col_margin[c] / n;
                if (expected <= 0.0) continue;
                const double diff = table[r][c] - expected;
                stat += diff * diff / expected;
            }
        }
        scores[f] = {f, "chi_square", stat};
    });
    return scores;
}

/// One-way ANOVA F statistic per feature: (SSB/(K-1)) / (SSW/(n-K)).
/// Zero within-group variance with nonzero between-group variance reports
/// the +infinity sentinel.
inline std::vector<FeatureScore> anova_f(const Dataset& ds) {
    const std::size_t n = ds.n();
    const auto K = static_cast<std::size_t>(ds.k_classes);
    if (n <= K) throw std::invalid_argument("anova_f: need n > K");
    const auto groups = rows_by_class(ds.y, ds.k_classes);
    for (std::size_t k = 0; k < K; ++k)
        if (groups[k].empty())
            throw std::invalid_argument("anova_f: class " + std::to_string(k) + " is empty");

    std::vector<FeatureScore> scores(ds.d());
    parallel_for(0, ds.d(), [&](std::size_t f) {
        double grand_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) grand_sum += ds.X.at(i, f);
        const double grand_mean = grand_sum / static_cast<double>(n);

        double ssb = 0.0, ssw = 0.0;
        for (const auto& rows : groups) {
            double sum = 0.0;
            for (std::size_t r : rows) sum += ds.X.at(r, f);
            const double mean = sum / static_cast<double>(rows.size());
            ssb += static_cast<double>(rows.size()) * (mean - grand_mean) * (mean - grand_mean);
            for (std::size_t r : rows) ssw += (ds.X.at(r, f) - mean) * (ds.X.at(r, f) - mean);
        }

        double value;
        if (ssb <= 0.0) {
            value = 0.0;
        } else if (ssw <= 0.0) {
            value = std::numeric_limits<double>::infinity();
        } else {
            value = (ssb / static_cast<double>(K - 1)) / (ssw / static_cast<double>(n - K));
        }
        scores[f] = {f, "anova_f", value};
    });
    return scores;
}

/// Top-m feature indices by descending score; ties keep the lower index.
inline std::vector<std::size_t> rank_features(const std::vector<FeatureScore>& scores,
                                              std::size_t m) {
    if (m < 1 || m > scores.size())
        throw std::invalid_argument("rank_features: m out of range [1, d]");
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].value != scores[b].value) return scores[a].value > scores[b].value;
        return scores[a].feature < scores[b].feature;
    });
    std::vector<std::size_t> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.push_back(scores[order[i]].feature);
    return out;
}

struct SelectionResult {
    std::vector<std::size_t> selected;      // surviving features, ascending
    std::vector<std::size_t> removed_order; // removal history
    std::vector<double> accuracy_trace;     // CV accuracy after each removal
    std::string method;
};

/// Default wrapper estimator: a small forest keeps the search tractable.
inline ForestParams sbs_default_forest() {
    ForestParams p;
    p.n_estimators = 50;
    return p;
}

namespace detail {

inline double cv_accuracy_on_subset(const Dataset& ds, const std::vector<std::size_t>& subset,
                                    const std::vector<std::vector<std::size_t>>& folds,
                                    const ForestParams& estimator, std::uint64_t step_seed) {
    const Dataset sliced = select_columns(ds, subset);
    std::vector<bool> in_fold(ds.n());
    double acc_sum = 0.0;
    for (std::size_t j = 0; j < folds.size(); ++j) {
        std::fill(in_fold.begin(), in_fold.end(), false);
        for (std::size_t r : folds[j]) in_fold[r] = true;
        std::vector<std::size_t> train_rows;
        train_rows.reserve(ds.n() - folds[j].size());
        for (std::size_t r = 0; r < ds.n(); ++r)
            if (!in_fold[r]) train_rows.push_back(r);

        ForestParams params = estimator;
        params.seed = Rng::mix(step_seed ^ (j + 1));
        const auto model = fit_random_forest(select_rows(sliced, train_rows), params);

        std::size_t correct = 0;
        for (std::size_t r : folds[j])
            if (predict_forest(model, sliced.X.row(r)) == ds.y[r]) ++correct;
        acc_sum += static_cast<double>(correct) / static_cast<double>(folds[j].size());
    }
    return acc_sum / static_cast<double>(folds.size());
}

} // namespace detail

/// Sequential backward selection: repeatedly drop the feature whose removal
/// yields the highest stratified-CV mean accuracy of the forest estimator
/// (accuracy ties drop the higher feature index) until target_size remain.
/// Fold assignment is fixed once; the estimator seed varies per (step, fold)
/// but not per candidate, so candidates compete on identical trials.
inline SelectionResult sequential_backward(const Dataset& ds, const ForestParams& estimator,
                                           std::size_t target_size = 19,
                                           std::size_t cv_folds = 5, std::uint64_t seed = 0) {
    if (target_size < 1 || target_size >= ds.d())
        throw std::invalid_argument("sequential_backward: target_size must be in [1, d)");

    const auto folds = stratified_kfold(ds, cv_folds, seed);
    SelectionResult result;
    result.method = "sequential_backward";
    result.selected.resize(ds.d());
    for (std::size_t f = 0; f < ds.d(); ++f) result.selected[f] = f;

    std::size_t step = 0;
    while (result.selected.size() > target_size) {
        const std::uint64_t step_seed = Rng::mix(Rng::mix(seed) ^ (step + 1));
        const std::size_t n_candidates = result.selected.size();
        std::vector<double> accuracy(n_candidates);
        parallel_for(0, n_candidates, [&](std::size_t c) {
            std::vector<std::size_t> subset;
            subset.reserve(n_candidates - 1);
            for (std::size_t i = 0; i < n_candidates; ++i)
                if (i != c) subset.push_back(result.selected[i]);
            accuracy[c] = detail::cv_accuracy_on_subset(ds, subset, folds, estimator, step_seed);
        });

        std::size_t best = 0;
        for (std::size_t c = 1; c < n_candidates; ++c) {
            if (accuracy[c] > accuracy[best] ||
                (accuracy[c] == accuracy[best] &&
                 result.selected[c] > result.selected[best])) {
                best = c;
            }
        }
        result.removed_order.push_back(result.selected[best]);
        result.accuracy_trace.push_back(accuracy[best]);
        result.selected.erase(result.selected.begin() + static_cast<std::ptrdiff_t>(best));
        ++step;
    }
    return result;
}

} // namespace nutripred
