#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nutripred/csv.hpp"
#include "nutripred/errors.hpp"
#include "nutripred/matrix.hpp"
#include "nutripred/schema.hpp"

namespace nutripred {

/// Rectangular table of optional cells in schema column order. Categorical
/// cells hold the integer code (as double); missing cells are nullopt.
struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<std::optional<double>>> cells; // [row][col]
    /// Per-column count of tokens demoted to missing (invalid categorical
    /// codes, out-of-range numerics, unparseable text).
    std::vector<std::size_t> demoted_counts;

    std::size_t rows() const { return cells.size(); }
    std::size_t cols() const { return column_names.size(); }
};

/// Fully numeric, fully observed design matrix with integer class labels.
struct Dataset {
    Matrix X;
    std::vector<int> y;
    std::vector<FeatureSpec> feature_meta;
    int k_classes = 4;

    std::size_t n() const { return X.rows(); }
    std::size_t d() const { return X.cols(); }

    void validate() const {
        if (n() < 1 || d() < 1) throw DataError("dataset: need n >= 1 and d >= 1");
        if (y.size() != n()) throw DataError("dataset: label count does not match row count");
        if (feature_meta.size() != d())
            throw DataError("dataset: feature metadata does not match column count");
        for (double v : X.data())
            if (!std::isfinite(v)) throw DataError("dataset: non-finite feature value");
        for (int label : y)
            if (label < 0 || label >= k_classes)
                throw DataError("dataset: label " + std::to_string(label) + " outside [0, " +
                                std::to_string(k_classes) + ")");
    }
};

/// Per-class counts and proportions.
struct ClassDistribution {
    std::vector<std::size_t> counts;
    std::vector<double> proportions;

    std::size_t total() const {
        std::size_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

/// The four nutritional status classes, ordered by BMI band.
namespace nutrition_class {
inline constexpr int kSevereMalnutrition = 0;
inline constexpr int kModerateMalnutrition = 1;
inline constexpr int kNormal = 2;
inline constexpr int kOvernutrition = 3;
inline constexpr int kCount = 4;

inline const char* name(int code) {
    switch (code) {
        case kSevereMalnutrition: return "severe_malnutrition";
        case kModerateMalnutrition: return "moderate_malnutrition";
        case kNormal: return "normal";
        case kOvernutrition: return "overnutrition";
        default: return "unknown";
    }
}
} // namespace nutrition_class

/// BMI class boundaries (kg/m^2). Defaults follow the WHO thinness /
/// normal-range / overweight cut points; all three are configurable.
struct BmiCutoffs {
    double severe = 16.0;    // below: severe malnutrition
    double normal_low = 18.5;
    double overweight = 25.0;
};

namespace detail {

inline std::optional<double> parse_double(const std::string& s) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    if (begin == end) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

inline std::optional<double> parse_cell(const std::string& token, const FeatureSpec& spec,
                                        bool& demoted) {
    demoted = false;
    auto value = parse_double(token);
    if (!value) {
        // empty cell is plain missing; non-empty unparseable text is demoted
        demoted = !token.empty();
        return std::nullopt;
    }
    if (spec.is_categorical()) {
        double rounded = std::nearbyint(*value);
        if (rounded != *value) {
            demoted = true;
            return std::nullopt;
        }
        int code = static_cast<int>(rounded);
        if (std::find(spec.valid_codes.begin(), spec.valid_codes.end(), code) ==
            spec.valid_codes.end()) {
            demoted = true;
            return std::nullopt;
        }
        return static_cast<double>(code);
    }
    if ((spec.min_value && *value < *spec.min_value) ||
        (spec.max_value && *value > *spec.max_value)) {
        demoted = true;
        return std::nullopt;
    }
    return value;
}

} // namespace detail

/// Loads a CSV against a schema. The header must contain every schema column
/// (order-insensitive); columns are returned in schema order, label column
/// last when the schema declares one and `require_label` is set. Cells that
/// fail to parse under their FeatureSpec become missing; demotions are
/// counted per column.
inline RawTable load_csv(const std::string& path, const Schema& schema,
                         bool require_label = false) {
    auto records = csv_read_file(path);
    if (records.empty()) throw DataError("empty CSV file: " + path);

    const auto& header = records[0];
    std::vector<std::string> wanted;
    for (const auto& f : schema.features) wanted.push_back(f.name);
    const bool with_label = require_label && !schema.label_name.empty();
    if (with_label) wanted.push_back(schema.label_name);

    std::vector<std::size_t> source_col(wanted.size());
    std::vector<std::string> missing_cols;
    for (std::size_t i = 0; i < wanted.size(); ++i) {
        auto it = std::find(header.begin(), header.end(), wanted[i]);
        if (it == header.end()) {
            missing_cols.push_back(wanted[i]);
        } else {
            source_col[i] = static_cast<std::size_t>(it - header.begin());
        }
    }
    if (!missing_cols.empty()) {
        std::string msg = "CSV header does not match schema; missing columns:";
        for (const auto& c : missing_cols) msg += " " + c;
        throw DataError(msg);
    }

    RawTable table;
    table.column_names = wanted;
    table.demoted_counts.assign(wanted.size(), 0);
    table.cells.reserve(records.size() - 1);

    FeatureSpec label_spec;
    label_spec.name = schema.label_name;
    label_spec.kind = FeatureKind::NominalCategorical;
    for (int c = 0; c < schema.class_count; ++c) label_spec.valid_codes.push_back(c);

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != header.size())
            throw DataError(path + ": row " + std::to_string(r) + " has " +
                            std::to_string(rec.size()) + " fields, header has " +
                            std::to_string(header.size()));
        std::vector<std::optional<double>> row(wanted.size());
        for (std::size_t i = 0; i < wanted.size(); ++i) {
            const FeatureSpec& spec =
                (with_label && i + 1 == wanted.size()) ? label_spec : schema.features[i];
            bool demoted = false;
            row[i] = detail::parse_cell(rec[source_col[i]], spec, demoted);
            if (demoted) ++table.demoted_counts[i];
        }
        table.cells.push_back(std::move(row));
    }
    return table;
}

/// Training-time column statistics: the fill value used for each column
/// (mean for numeric, mode for categorical). Persisted with models so new
/// records can be imputed consistently.
struct ImputeStats {
    std::vector<double> fill_values; // one per table column
};

/// Computes column fill values from the observed cells. Numeric columns use
/// the mean; categorical columns the mode with ties broken by smallest code.
inline ImputeStats compute_impute_stats(const RawTable& table, const Schema& schema) {
    ImputeStats stats;
    stats.fill_values.resize(table.cols());
    for (std::size_t c = 0; c < table.cols(); ++c) {
        const bool categorical =
            c < schema.features.size() ? schema.features[c].is_categorical() : true;
        if (categorical) {
            std::map<int, std::size_t> freq;
            for (const auto& row : table.cells)
                if (row[c]) ++freq[static_cast<int>(*row[c])];
            if (freq.empty())
                throw DataError("column '" + table.column_names[c] + "' has no observed values");
            int best = freq.begin()->first;
            std::size_t best_count = freq.begin()->second;
            for (const auto& [code, count] : freq) {
                if (count > best_count) { // map iteration is ascending, ties keep smallest
                    best = code;
                    best_count = count;
                }
            }
            stats.fill_values[c] = static_cast<double>(best);
        } else {
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& row : table.cells)
                if (row[c]) {
                    sum += *row[c];
                    ++count;
                }
            if (count == 0)
                throw DataError("column '" + table.column_names[c] + "' has no observed values");
            stats.fill_values[c] = sum / static_cast<double>(count);
        }
    }
    return stats;
}

/// Fills missing cells with the given column statistics.
inline RawTable impute_with(const RawTable& table, const ImputeStats& stats) {
    RawTable out = table;
    for (auto& row : out.cells)
        for (std::size_t c = 0; c < row.size(); ++c)
            if (!row[c]) row[c] = stats.fill_values[c];
    return out;
}

/// Mean/mode imputation per column. Errors if a column is entirely missing.
inline RawTable impute(const RawTable& table, const Schema& schema) {
    return impute_with(table, compute_impute_stats(table, schema));
}

/// Encodes an imputed table into a feature matrix: ordinal columns map to
/// their 0-based rank in the ordinal order, nominal columns keep their code,
/// numeric columns pass through.
inline Matrix encode_features(const RawTable& table, const Schema& schema) {
    const std::size_t d = schema.feature_count();
    Matrix X(table.rows(), d);
    for (std::size_t c = 0; c < d; ++c) {
        const FeatureSpec& spec = schema.features[c];
        if (spec.kind == FeatureKind::OrdinalCategorical) {
            auto order = spec.effective_order();
            std::map<int, double> rank;
            for (std::size_t i = 0; i < order.size(); ++i)
                rank[order[i]] = static_cast<double>(i);
            for (std::size_t r = 0; r < table.rows(); ++r) {
                if (!table.cells[r][c])
                    throw DataError("encode: missing cell in column '" + spec.name +
                                    "' (impute first)");
                X.at(r, c) = rank.at(static_cast<int>(*table.cells[r][c]));
            }
        } else {
            for (std::size_t r = 0; r < table.rows(); ++r) {
                if (!table.cells[r][c])
                    throw DataError("encode: missing cell in column '" + spec.name +
                                    "' (impute first)");
                X.at(r, c) = *table.cells[r][c];
            }
        }
    }
    return X;
}

/// Encodes a table whose last column is the label (integer class codes).
inline Dataset encode(const RawTable& table, const Schema& schema) {
    if (table.cols() != schema.feature_count() + 1)
        throw DataError("encode: table must carry the label column last");
    Dataset ds;
    ds.X = encode_features(table, schema);
    ds.feature_meta = schema.features;
    ds.k_classes = schema.class_count;
    ds.y.resize(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto& cell = table.cells[r][schema.feature_count()];
        if (!cell) throw DataError("encode: missing label at row " + std::to_string(r));
        ds.y[r] = static_cast<int>(*cell);
    }
    ds.validate();
    return ds;
}

/// Maps an EDHS-convention BMI (x100 integer) to a nutrition class.
/// Comparison happens in centi-units so configured cutoffs bind exactly.
inline int label_bmi(std::int64_t bmi_centi, const BmiCutoffs& cutoffs = {}) {
    if (bmi_centi < 1000 || bmi_centi > 6000)
        throw DataError("BMI value " + std::to_string(bmi_centi) +
                        " (x100) outside plausible range [1000, 6000]");
    const std::int64_t severe = std::llround(cutoffs.severe * 100.0);
    const std::int64_t normal_low = std::llround(cutoffs.normal_low * 100.0);
    const std::int64_t overweight = std::llround(cutoffs.overweight * 100.0);
    if (bmi_centi < severe) return nutrition_class::kSevereMalnutrition;
    if (bmi_centi < normal_low) return nutrition_class::kModerateMalnutrition;
    if (bmi_centi < overweight) return nutrition_class::kNormal;
    return nutrition_class::kOvernutrition;
}

inline ClassDistribution class_distribution(const std::vector<int>& y, int k_classes) {
    ClassDistribution dist;
    dist.counts.assign(static_cast<std::size_t>(k_classes), 0);
    for (int label : y) {
        if (label < 0 || label >= k_classes)
            throw DataError("class_distribution: label out of range");
        ++dist.counts[static_cast<std::size_t>(label)];
    }
    dist.proportions.resize(dist.counts.size());
    const double n = static_cast<double>(y.size());
    for (std::size_t k = 0; k < dist.counts.size(); ++k)
        dist.proportions[k] = n > 0 ? static_cast<double>(dist.counts[k]) / n : 0.0;
    return dist;
}

inline ClassDistribution class_distribution(const Dataset& ds) {
    return class_distribution(ds.y, ds.k_classes);
}

/// Row indices belonging to each class.
inline std::vector<std::vector<std::size_t>> rows_by_class(const std::vector<int>& y,
                                                           int k_classes) {
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(k_classes));
    for (std::size_t i = 0; i < y.size(); ++i)
        groups[static_cast<std::size_t>(y[i])].push_back(i);
    return groups;
}

/// Copies the given rows into a new Dataset (order preserved).
inline Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.X = Matrix(rows.size(), ds.d());
    out.y.resize(rows.size());
    out.feature_meta = ds.feature_meta;
    out.k_classes = ds.k_classes;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = ds.X.row(rows[i]);
        std::copy(src.begin(), src.end(), out.X.row(i).begin());
        out.y[i] = ds.y[rows[i]];
    }
    return out;
}

/// Copies the given feature columns into a new Dataset (order preserved).
inline Dataset select_columns(const Dataset& ds, const std::vector<std::size_t>& cols) {
    Dataset out;
    out.X = Matrix(ds.n(), cols.size());
    out.y = ds.y;
    out.k_classes = ds.k_classes;
    out.feature_meta.reserve(cols.size());
    for (std::size_t j : cols) out.feature_meta.push_back(ds.feature_meta[j]);
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out.X.at(i, j) = ds.X.at(i, cols[j]);
    return out;
}

} // namespace nutripred
