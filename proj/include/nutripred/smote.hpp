#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "nutripred/data.hpp"
#include "nutripred/parallel.hpp"
#include "nutripred/random.hpp"

namespace nutripred {

struct SmoteParams {
    std::size_t k_neighbors = 5;
    std::optional<std::size_t> target_per_class; // default: majority class count
    std::uint64_t seed = 0;
    bool round_categorical = true;
};

/// One synthetic row's provenance, for the convex-combination test hook.
struct SmoteSynthRecord {
    int cls = 0;
    std::size_t base_row = 0;     // index into the original dataset
    std::size_t neighbor_row = 0; // index into the original dataset
    double u = 0.0;
    std::vector<double> pre_round; // interpolated coordinates before code rounding
};

struct SmoteResult {
    Dataset data;
    std::vector<SmoteSynthRecord> synth;
};

/// The k nearest rows to `row` among `class_rows` excluding itself, by
/// Euclidean distance. Distance ties break toward the lower row index;
/// fewer than k candidates returns them all.
inline std::vector<std::size_t> knn_minority(const Matrix& X,
                                             const std::vector<std::size_t>& class_rows,
                                             std::size_t row, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(class_rows.size());
    auto base = X.row(row);
    for (std::size_t other : class_rows) {
        if (other == row) continue;
        double d2 = 0.0;
        auto o = X.row(other);
        for (std::size_t c = 0; c < o.size(); ++c) {
            double diff = base[c] - o[c];
            d2 += diff * diff;
        }
        dist.emplace_back(d2, other);
    }
    std::sort(dist.begin(), dist.end()); // pair ordering = distance, then row index
    if (k < dist.size()) dist.resize(k);
    std::vector<std::size_t> out;
    out.reserve(dist.size());
    for (const auto& [d2, idx] : dist) out.push_back(idx);
    return out;
}

inline std::vector<double> interpolate_row(std::span<const double> x,
                                           std::span<const double> neighbor, double u) {
    std::vector<double> out(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = x[c] + u * (neighbor[c] - x[c]);
    return out;
}

/// Rounds a coordinate to the nearest valid code; ties toward the smaller code.
inline double round_to_code(double v, const std::vector<int>& codes) {
    double best = static_cast<double>(codes.front());
    double best_dist = std::abs(v - best);
    for (int code : codes) {
        double d = std::abs(v - static_cast<double>(code));
        if (d < best_dist || (d == best_dist && static_cast<double>(code) < best)) {
            best = static_cast<double>(code);
            best_dist = d;
        }
    }
    return best;
}

/// SMOTE oversampling to exact per-class targets. Original rows are the
/// unmodified prefix of the output; synthetic rows follow, grouped by class
/// in class order. Each synthetic row s uses an RNG stream keyed by
/// (seed, s), so output is independent of the parallelism degree.
inline SmoteResult smote_traced(const Dataset& ds, const SmoteParams& params) {
    ds.validate();
    if (params.k_neighbors < 1) throw ConfigError("smote: k_neighbors must be >= 1");

    const auto groups = rows_by_class(ds.y, ds.k_classes);
    std::size_t majority = 0;
    for (const auto& g : groups) majority = std::max(majority, g.size());
    const std::size_t target = params.target_per_class.value_or(majority);

    std::size_t total_synth = 0;
    for (int k = 0; k < ds.k_classes; ++k) {
        const std::size_t count = groups[static_cast<std::size_t>(k)].size();
        if (count > target)
            throw DataError("smote: target_per_class " + std::to_string(target) +
                            " is below class " + std::to_string(k) + " count " +
                            std::to_string(count));
        if (count < target && count < 2)
            throw DataError("smote: class " + std::to_string(k) + " has " +
                            std::to_string(count) + " member(s); need >= 2 to synthesize");
        total_synth += target - count;
    }

    // Neighbor lists for every row of each class that needs synthesis.
    std::vector<std::vector<std::vector<std::size_t>>> neighbors(
        static_cast<std::size_t>(ds.k_classes));
    for (int k = 0; k < ds.k_classes; ++k) {
        const auto& rows = groups[static_cast<std::size_t>(k)];
        if (rows.size() >= target) continue;
        auto& table = neighbors[static_cast<std::size_t>(k)];
        table.resize(rows.size());
        parallel_for(0, rows.size(), [&](std::size_t i) {
            table[i] = knn_minority(ds.X, rows, rows[i], params.k_neighbors);
        });
    }

    SmoteResult result;
    result.data.X = Matrix(ds.n() + total_synth, ds.d());
    result.data.y.resize(ds.n() + total_synth);
    result.data.feature_meta = ds.feature_meta;
    result.data.k_classes = ds.k_classes;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        auto src = ds.X.row(i);
        std::copy(src.begin(), src.end(), result.data.X.row(i).begin());
        result.data.y[i] = ds.y[i];
    }

    // Global synthetic index -> (class, per-class counter), in class order.
    std::vector<std::pair<int, std::size_t>> plan;
    plan.reserve(total_synth);
    for (int k = 0; k < ds.k_classes; ++k) {
        const std::size_t count = groups[static_cast<std::size_t>(k)].size();
        for (std::size_t j = count; j < target; ++j) plan.emplace_back(k, j - count);
    }

    // Rounding targets per column: rank values for ordinal columns (they are
    // rank-encoded by now), raw codes for nominal, empty for numeric.
    std::vector<std::vector<int>> round_codes(ds.d());
    if (params.round_categorical) {
        for (std::size_t c = 0; c < ds.d(); ++c) {
            const auto& meta = ds.feature_meta[c];
            if (meta.kind == FeatureKind::OrdinalCategorical) {
                round_codes[c].resize(meta.effective_order().size());
                for (std::size_t i = 0; i < round_codes[c].size(); ++i)
                    round_codes[c][i] = static_cast<int>(i);
            } else if (meta.kind == FeatureKind::NominalCategorical) {
                round_codes[c] = meta.valid_codes;
            }
        }
    }

    result.synth.resize(total_synth);
    parallel_for(0, total_synth, [&](std::size_t s) {
        const auto [cls, counter] = plan[s];
        (void)counter;
        const auto& rows = groups[static_cast<std::size_t>(cls)];
        Rng rng = Rng::stream(params.seed, s);
        const std::size_t base_pos = rng.next_index(rows.size());
        const auto& knn = neighbors[static_cast<std::size_t>(cls)][base_pos];
        const std::size_t neighbor = knn[rng.next_index(knn.size())];
        const double u = rng.next_double();

        SmoteSynthRecord rec;
        rec.cls = cls;
        rec.base_row = rows[base_pos];
        rec.neighbor_row = neighbor;
        rec.u = u;
        rec.pre_round = interpolate_row(ds.X.row(rec.base_row), ds.X.row(neighbor), u);

        auto dst = result.data.X.row(ds.n() + s);
        for (std::size_t c = 0; c < ds.d(); ++c) {
            double v = rec.pre_round[c];
            if (!round_codes[c].empty()) v = round_to_code(v, round_codes[c]);
            dst[c] = v;
        }
        result.data.y[ds.n() + s] = cls;
        result.synth[s] = std::move(rec);
    });

    return result;
}

inline Dataset smote(const Dataset& ds, const SmoteParams& params) {
    return smote_traced(ds, params).data;
}

} // namespace nutripred
