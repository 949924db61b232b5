#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nutripred/data.hpp"
#include "nutripred/parallel.hpp"
#include "nutripred/random.hpp"
#include "nutripred/schema.hpp"

namespace nutripred {

/// Class-conditional sampling recipe for one feature. Categorical features
/// carry one probability row per class over valid_codes; numeric features a
/// mean and spread per class, with optional rounding and clamping.
struct FeatureGenerator {
    FeatureSpec spec;
    std::vector<std::vector<double>> class_probs; // [class][code index]
    std::vector<double> class_means;              // [class]
    std::vector<double> class_stddevs;            // [class]
    bool round_to_int = false;
};

/// Full recipe: class marginals plus one FeatureGenerator per column.
struct GeneratorSpec {
    int k_classes = 4;
    std::vector<double> class_marginals;
    std::vector<FeatureGenerator> features;
    std::string label_name = "label";

    Schema schema() const {
        Schema s;
        for (const auto& fg : features) s.features.push_back(fg.spec);
        s.label_name = label_name;
        s.class_count = k_classes;
        return s;
    }

    void validate() const {
        if (static_cast<int>(class_marginals.size()) != k_classes)
            throw ConfigError("generator: class_marginals must have one entry per class");
        double sum = 0.0;
        for (double p : class_marginals) {
            if (p < 0.0) throw ConfigError("generator: negative class probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("generator: class marginals sum to " + std::to_string(sum) +
                              ", expected 1 within 1e-9");
        for (const auto& fg : features) {
            fg.spec.validate();
            if (fg.spec.is_categorical()) {
                if (static_cast<int>(fg.class_probs.size()) != k_classes)
                    throw ConfigError("generator feature '" + fg.spec.name +
                                      "': need one probability row per class");
                for (const auto& row : fg.class_probs) {
                    if (row.size() != fg.spec.valid_codes.size())
                        throw ConfigError("generator feature '" + fg.spec.name +
                                          "': probability row length != code count");
                    double s = 0.0;
                    for (double p : row) {
                        if (p < 0.0)
                            throw ConfigError("generator feature '" + fg.spec.name +
                                              "': negative probability");
                        s += p;
                    }
                    if (std::abs(s - 1.0) > 1e-9)
                        throw ConfigError("generator feature '" + fg.spec.name +
                                          "': probabilities sum to " + std::to_string(s));
                }
            } else {
                if (static_cast<int>(fg.class_means.size()) != k_classes ||
                    static_cast<int>(fg.class_stddevs.size()) != k_classes)
                    throw ConfigError("generator feature '" + fg.spec.name +
                                      "': need mean and stddev per class");
            }
        }
    }
};

namespace detail {

inline int sample_categorical(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

} // namespace detail

/// Draws a raw table plus labels. Row i is produced by an RNG stream keyed
/// by (seed, i), so output is identical for any parallelism degree.
inline RawTable generate_synthetic_table(const GeneratorSpec& gen, std::size_t n,
                                         std::uint64_t seed) {
    gen.validate();
    if (n < static_cast<std::size_t>(gen.k_classes))
        throw ConfigError("generator: n must be at least the class count");

    RawTable table;
    for (const auto& fg : gen.features) table.column_names.push_back(fg.spec.name);
    table.column_names.push_back(gen.label_name);
    table.demoted_counts.assign(table.column_names.size(), 0);
    table.cells.assign(n, std::vector<std::optional<double>>(table.column_names.size()));

    parallel_for(0, n, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        const int cls = detail::sample_categorical(gen.class_marginals, rng.next_double());
        auto& row = table.cells[i];
        for (std::size_t c = 0; c < gen.features.size(); ++c) {
            const auto& fg = gen.features[c];
            if (fg.spec.is_categorical()) {
                int idx = detail::sample_categorical(fg.class_probs[cls], rng.next_double());
                row[c] = static_cast<double>(fg.spec.valid_codes[idx]);
            } else {
                double v = fg.class_means[cls] + fg.class_stddevs[cls] * rng.next_normal();
                if (fg.spec.min_value && v < *fg.spec.min_value) v = *fg.spec.min_value;
                if (fg.spec.max_value && v > *fg.spec.max_value) v = *fg.spec.max_value;
                if (fg.round_to_int) v = std::nearbyint(v);
                row[c] = v;
            }
        }
        row[gen.features.size()] = static_cast<double>(cls);
    });
    return table;
}

/// Draws a fully encoded Dataset (same rows as generate_synthetic_table fed
/// through the standard encode path).
inline Dataset generate_synthetic(const GeneratorSpec& gen, std::size_t n, std::uint64_t seed) {
    return encode(generate_synthetic_table(gen, n, seed), gen.schema());
}

inline FeatureGenerator feature_generator_from_json(const nlohmann::json& j) {
    FeatureGenerator fg;
    fg.spec = feature_spec_from_json(j);
    if (fg.spec.is_categorical()) {
        fg.class_probs = j.at("per_class_probs").get<std::vector<std::vector<double>>>();
    } else {
        fg.class_means = j.at("per_class_mean").get<std::vector<double>>();
        fg.class_stddevs = j.at("per_class_stddev").get<std::vector<double>>();
        if (j.contains("round")) fg.round_to_int = j.at("round").get<bool>();
    }
    return fg;
}

inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
    GeneratorSpec gen;
    gen.k_classes = j.value("classes", 4);
    gen.class_marginals = j.at("marginals").get<std::vector<double>>();
    gen.label_name = j.value("label_name", std::string("label"));
    for (const auto& fj : j.at("features"))
        gen.features.push_back(feature_generator_from_json(fj));
    gen.validate();
    return gen;
}

inline GeneratorSpec load_generator_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open generator spec: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("generator spec " + path + ": " + e.what());
    }
    return generator_spec_from_json(j);
}

/// Writes a table (features + label) as CSV. Numeric cells print with enough
/// digits to round-trip exactly.
inline void write_table_csv(const RawTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write CSV: " + path);
    csv_write_row(out, table.column_names);
    std::vector<std::string> fields(table.cols());
    for (const auto& row : table.cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!row[c]) {
                fields[c].clear();
                continue;
            }
            double v = *row[c];
            if (v == std::nearbyint(v) && std::abs(v) < 1e15) {
                fields[c] = std::to_string(static_cast<long long>(v));
            } else {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                fields[c] = buf;
            }
        }
        csv_write_row(out, fields);
    }
}

} // namespace nutripred
