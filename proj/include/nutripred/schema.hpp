#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nutripred/errors.hpp"

namespace nutripred {

enum class FeatureKind { Numeric, OrdinalCategorical, NominalCategorical };

inline std::string to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::Numeric: return "numeric";
        case FeatureKind::OrdinalCategorical: return "ordinal";
        case FeatureKind::NominalCategorical: return "nominal";
    }
    return "numeric";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "numeric") return FeatureKind::Numeric;
    if (s == "ordinal") return FeatureKind::OrdinalCategorical;
    if (s == "nominal") return FeatureKind::NominalCategorical;
    throw ConfigError("unknown feature kind: " + s);
}

/// Column description: name, kind, the admissible codes for categorical
/// columns and an optional explicit ordering for ordinal ones. Numeric
/// columns may carry a plausible [min, max] range; values outside it are
/// demoted to missing (survey sentinel codes such as 9998).
struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    std::vector<int> valid_codes;          // categorical only, non-empty
    std::vector<int> ordinal_order;        // optional permutation of valid_codes
    std::optional<double> min_value;       // numeric only
    std::optional<double> max_value;

    bool is_categorical() const { return kind != FeatureKind::Numeric; }

    void validate() const {
        if (is_categorical()) {
            if (valid_codes.empty())
                throw ConfigError("feature '" + name + "': categorical kind requires valid_codes");
            if (!ordinal_order.empty()) {
                auto a = valid_codes;
                auto b = ordinal_order;
                std::sort(a.begin(), a.end());
                std::sort(b.begin(), b.end());
                if (a != b)
                    throw ConfigError("feature '" + name +
                                      "': ordinal_order is not a permutation of valid_codes");
            }
        }
    }

    /// Ordering used for ordinal rank encoding; defaults to ascending codes.
    std::vector<int> effective_order() const {
        if (!ordinal_order.empty()) return ordinal_order;
        auto sorted = valid_codes;
        std::sort(sorted.begin(), sorted.end());
        return sorted;
    }
};

/// Dataset schema: the feature columns plus the (optional) label column.
struct Schema {
    std::vector<FeatureSpec> features;
    std::string label_name;   // empty when the schema carries no label column
    int class_count = 4;

    std::size_t feature_count() const { return features.size(); }

    int feature_index(const std::string& name) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == name) return static_cast<int>(i);
        return -1;
    }

    void validate() const {
        for (const auto& f : features) f.validate();
        for (std::size_t i = 0; i < features.size(); ++i)
            for (std::size_t j = i + 1; j < features.size(); ++j)
                if (features[i].name == features[j].name)
                    throw ConfigError("duplicate feature name: " + features[i].name);
        if (class_count < 2) throw ConfigError("schema: class_count must be >= 2");
    }
};

inline FeatureSpec feature_spec_from_json(const nlohmann::json& j) {
    FeatureSpec f;
    f.name = j.at("name").get<std::string>();
    f.kind = feature_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("codes")) f.valid_codes = j.at("codes").get<std::vector<int>>();
    if (j.contains("order")) f.ordinal_order = j.at("order").get<std::vector<int>>();
    if (j.contains("min")) f.min_value = j.at("min").get<double>();
    if (j.contains("max")) f.max_value = j.at("max").get<double>();
    f.validate();
    return f;
}

inline nlohmann::json feature_spec_to_json(const FeatureSpec& f) {
    nlohmann::json j;
    j["name"] = f.name;
    j["kind"] = to_string(f.kind);
    if (!f.valid_codes.empty()) j["codes"] = f.valid_codes;
    if (!f.ordinal_order.empty()) j["order"] = f.ordinal_order;
    if (f.min_value) j["min"] = *f.min_value;
    if (f.max_value) j["max"] = *f.max_value;
    return j;
}

inline Schema schema_from_json(const nlohmann::json& j) {
    Schema s;
    for (const auto& fj : j.at("features")) s.features.push_back(feature_spec_from_json(fj));
    if (j.contains("label")) {
        s.label_name = j.at("label").at("name").get<std::string>();
        if (j.at("label").contains("classes"))
            s.class_count = j.at("label").at("classes").get<int>();
    }
    s.validate();
    return s;
}

inline nlohmann::json schema_to_json(const Schema& s) {
    nlohmann::json j;
    j["features"] = nlohmann::json::array();
    for (const auto& f : s.features) j["features"].push_back(feature_spec_to_json(f));
    if (!s.label_name.empty()) j["label"] = {{"name", s.label_name}, {"classes", s.class_count}};
    return j;
}

inline Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("schema file " + path + ": " + e.what());
    }
    return schema_from_json(j);
}

} // namespace nutripred
