#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nutripred/data.hpp"
#include "nutripred/random.hpp"

namespace nutripred {

/// Stratified train/test split. Per class: seeded shuffle, floor(f * n_k)
/// rows to test, then the remaining units up to round(f * n) go to the
/// classes with the largest fractional remainders (ties toward the lowest
/// class index). Class proportions are preserved within one row per class.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction,
                                                    std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("stratified_split: test_fraction must be in (0, 1)");
    const auto groups = rows_by_class(ds.y, ds.k_classes);

    const auto total_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(ds.n())));

    struct ClassAlloc {
        std::size_t cls;
        std::size_t test_count;
        double remainder;
    };
    std::vector<ClassAlloc> alloc;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double exact = test_fraction * static_cast<double>(groups[k].size());
        const auto base = static_cast<std::size_t>(std::floor(exact));
        alloc.push_back({k, base, exact - std::floor(exact)});
        assigned += base;
    }

    std::vector<std::size_t> order(alloc.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (alloc[a].remainder != alloc[b].remainder)
            return alloc[a].remainder > alloc[b].remainder;
        return alloc[a].cls < alloc[b].cls;
    });
    std::size_t extra = total_test > assigned ? total_test - assigned : 0;
    for (std::size_t pass = 0; extra > 0 && pass < 2; ++pass) {
        for (std::size_t i : order) {
            if (extra == 0) break;
            if (alloc[i].test_count + 1 < groups[alloc[i].cls].size()) {
                ++alloc[i].test_count;
                --extra;
            }
        }
    }

    std::vector<std::size_t> train_rows, test_rows;
    for (const auto& a : alloc) {
        auto rows = groups[a.cls];
        if (a.test_count == 0 || a.test_count >= rows.size())
            throw DataError("stratified_split: fraction leaves class " + std::to_string(a.cls) +
                            " empty on one side");
        Rng rng = Rng::stream(seed, a.cls);
        rng.shuffle(rows);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i < a.test_count)
                test_rows.push_back(rows[i]);
            else
                train_rows.push_back(rows[i]);
        }
    }
    return {select_rows(ds, train_rows), select_rows(ds, test_rows)};
}

/// Stratified k folds: per class, seeded shuffle then round-robin. Folds
/// partition all rows; per-class fold sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> stratified_kfold(const Dataset& ds, std::size_t k,
                                                              std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2");
    const auto groups = rows_by_class(ds.y, ds.k_classes);
    for (std::size_t c = 0; c < groups.size(); ++c)
        if (groups[c].size() < k)
            throw DataError("stratified_kfold: class " + std::to_string(c) + " has " +
                            std::to_string(groups[c].size()) + " rows, fewer than k=" +
                            std::to_string(k));
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t c = 0; c < groups.size(); ++c) {
        auto rows = groups[c];
        Rng rng = Rng::stream(seed, c);
        rng.shuffle(rows);
        for (std::size_t i = 0; i < rows.size(); ++i) folds[i % k].push_back(rows[i]);
    }
    return folds;
}

struct ConfusionMatrix {
    std::vector<std::vector<std::size_t>> counts; // [true][predicted]

    std::size_t k() const { return counts.size(); }
    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& row : counts)
            for (auto c : row) t += c;
        return t;
    }
    std::size_t trace() const {
        std::size_t t = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
        return t;
    }
    std::size_t row_sum(std::size_t t) const {
        std::size_t s = 0;
        for (auto c : counts[t]) s += c;
        return s;
    }
    std::size_t col_sum(std::size_t p) const {
        std::size_t s = 0;
        for (const auto& row : counts) s += row[p];
        return s;
    }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                        const std::vector<int>& y_pred, int k_classes) {
    if (y_true.size() != y_pred.size())
        throw std::invalid_argument("confusion_matrix: length mismatch");
    ConfusionMatrix m;
    m.counts.assign(static_cast<std::size_t>(k_classes),
                    std::vector<std::size_t>(static_cast<std::size_t>(k_classes), 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= k_classes || y_pred[i] < 0 || y_pred[i] >= k_classes)
            throw DataError("confusion_matrix: label out of range at row " + std::to_string(i));
        ++m.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
    }
    return m;
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool precision_zero_division = false; // no predictions for this class
    bool recall_zero_division = false;    // no true rows for this class
};

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    double precision_weighted = 0.0, recall_weighted = 0.0, f1_weighted = 0.0;
    double precision_macro = 0.0, recall_macro = 0.0, f1_macro = 0.0;
    // one-vs-rest ROC AUC, filled by attach_auc when probabilities exist
    bool has_auc = false;
    std::vector<double> auc_per_class;
    std::vector<bool> auc_defined;
    double auc_weighted = 0.0, auc_macro = 0.0;
};

/// Standard multiclass metrics. Weighted aggregates use class support, which
/// makes weighted recall coincide with accuracy identically.
inline MetricsReport classification_metrics(const ConfusionMatrix& m) {
    const std::size_t total = m.total();
    if (total == 0) throw std::invalid_argument("classification_metrics: empty matrix");
    MetricsReport report;
    report.accuracy = static_cast<double>(m.trace()) / static_cast<double>(total);
    const std::size_t K = m.k();
    report.per_class.resize(K);

    for (std::size_t k = 0; k < K; ++k) {
        auto& cm = report.per_class[k];
        const std::size_t tp = m.counts[k][k];
        const std::size_t col = m.col_sum(k);
        const std::size_t row = m.row_sum(k);
        cm.support = row;
        if (col == 0) {
            cm.precision = 0.0;
            cm.precision_zero_division = true;
        } else {
            cm.precision = static_cast<double>(tp) / static_cast<double>(col);
        }
        if (row == 0) {
            cm.recall = 0.0;
            cm.recall_zero_division = true;
        } else {
            cm.recall = static_cast<double>(tp) / static_cast<double>(row);
        }
        cm.f1 = (cm.precision + cm.recall) > 0.0
                    ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                    : 0.0;
    }

    for (std::size_t k = 0; k < K; ++k) {
        const auto& cm = report.per_class[k];
        const double w = static_cast<double>(cm.support) / static_cast<double>(total);
        report.precision_weighted += w * cm.precision;
        report.recall_weighted += w * cm.recall;
        report.f1_weighted += w * cm.f1;
        report.precision_macro += cm.precision / static_cast<double>(K);
        report.recall_macro += cm.recall / static_cast<double>(K);
        report.f1_macro += cm.f1 / static_cast<double>(K);
    }
    return report;
}

/// Binary AUC of `scores` against `positive` via the Mann-Whitney rank
/// statistic with average ranks for ties.
inline double binary_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t pos_count = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) {
            if (positive[order[t]]) {
                pos_rank_sum += avg_rank;
                ++pos_count;
            }
        }
        i = j;
    }
    const std::size_t neg_count = n - pos_count;
    if (pos_count == 0 || neg_count == 0)
        throw std::invalid_argument("binary_auc: need at least one positive and one negative");
    const double p = static_cast<double>(pos_count);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg_count));
}

struct AucReport {
    std::vector<double> per_class;
    std::vector<bool> defined;
    double weighted = 0.0; // support-weighted over defined classes
    double macro = 0.0;    // unweighted mean over defined classes
};

/// One-vs-rest AUC per class from the probability column for that class.
/// Classes without both positives and negatives are flagged undefined and
/// excluded from the averages.
inline AucReport roc_auc_ovr(const std::vector<int>& y_true, const Matrix& probas) {
    const std::size_t K = probas.cols();
    AucReport report;
    report.per_class.assign(K, 0.0);
    report.defined.assign(K, false);

    std::vector<double> scores(y_true.size());
    std::vector<bool> positive(y_true.size());
    std::vector<std::size_t> support(K, 0);
    for (int label : y_true) ++support[static_cast<std::size_t>(label)];

    double weighted_sum = 0.0, weight_total = 0.0, macro_sum = 0.0;
    std::size_t defined_count = 0;
    for (std::size_t k = 0; k < K; ++k) {
        if (support[k] == 0 || support[k] == y_true.size()) continue;
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            scores[i] = probas.at(i, k);
            positive[i] = static_cast<std::size_t>(y_true[i]) == k;
        }
        report.per_class[k] = binary_auc(scores, positive);
        report.defined[k] = true;
        ++defined_count;
        weighted_sum += static_cast<double>(support[k]) * report.per_class[k];
        weight_total += static_cast<double>(support[k]);
        macro_sum += report.per_class[k];
    }
    if (defined_count > 0) {
        report.weighted = weighted_sum / weight_total;
        report.macro = macro_sum / static_cast<double>(defined_count);
    }
    return report;
}

inline void attach_auc(MetricsReport& metrics, const AucReport& auc) {
    metrics.has_auc = true;
    metrics.auc_per_class = auc.per_class;
    metrics.auc_defined = auc.defined;
    metrics.auc_weighted = auc.weighted;
    metrics.auc_macro = auc.macro;
}

struct RocCurve {
    std::vector<std::pair<double, double>> points; // (fpr, tpr) from (0,0) to (1,1)
    double auc = 0.0;                              // trapezoidal area
};

/// ROC points for class k, sweeping the decision threshold across distinct
/// score values in descending order.
inline RocCurve roc_curve_points(const std::vector<int>& y_true,
                                 const std::vector<double>& scores, int cls) {
    const std::size_t n = scores.size();
    std::size_t pos_total = 0;
    for (int label : y_true)
        if (label == cls) ++pos_total;
    const std::size_t neg_total = n - pos_total;
    if (pos_total == 0 || neg_total == 0)
        throw std::invalid_argument("roc_curve_points: need positives and negatives");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.emplace_back(0.0, 0.0);
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t t = i; t < j; ++t) {
            if (y_true[order[t]] == cls)
                ++tp;
            else
                ++fp;
        }
        curve.points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg_total),
                                  static_cast<double>(tp) / static_cast<double>(pos_total));
        i = j;
    }
    for (std::size_t p = 0; p + 1 < curve.points.size(); ++p) {
        const auto& [x0, y0] = curve.points[p];
        const auto& [x1, y1] = curve.points[p + 1];
        curve.auc += (x1 - x0) * (y1 + y0) / 2.0;
    }
    return curve;
}

} // namespace nutripred
