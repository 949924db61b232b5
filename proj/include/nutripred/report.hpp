#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nutripred/pipeline.hpp"
#include "nutripred/svg.hpp"

namespace nutripred {

namespace detail {

inline std::string sanitize_name(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else
            out.push_back('_');
    }
    return out.empty() ? "model" : out;
}

inline nlohmann::json distribution_to_json(const ClassDistribution& dist) {
    return {{"counts", dist.counts}, {"proportions", dist.proportions}};
}

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& c : m.per_class) {
        per_class.push_back({{"precision", c.precision},
                             {"recall", c.recall},
                             {"f1", c.f1},
                             {"support", c.support},
                             {"precision_zero_division", c.precision_zero_division},
                             {"recall_zero_division", c.recall_zero_division}});
    }
    nlohmann::json j{{"accuracy", m.accuracy},
                     {"precision_weighted", m.precision_weighted},
                     {"recall_weighted", m.recall_weighted},
                     {"f1_weighted", m.f1_weighted},
                     {"precision_macro", m.precision_macro},
                     {"recall_macro", m.recall_macro},
                     {"f1_macro", m.f1_macro},
                     {"per_class", std::move(per_class)}};
    if (m.has_auc) {
        std::vector<bool> defined(m.auc_defined.begin(), m.auc_defined.end());
        j["auc"] = {{"per_class", m.auc_per_class},
                    {"defined", defined},
                    {"weighted", m.auc_weighted},
                    {"macro", m.auc_macro}};
    }
    return j;
}

inline nlohmann::json cv_to_json(const CvResult& cv) {
    return {{"configs", cv.configs},
            {"fold_scores", cv.fold_scores},
            {"mean_scores", cv.mean_scores},
            {"std_scores", cv.std_scores},
            {"best_index", cv.best_index},
            {"best_params", cv.best_params}};
}

} // namespace detail

/// Deterministic report document (schema version 1). Wall-clock timings are
/// deliberately kept out; they land in timing.json instead.
inline nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["format"] = "nutripred-report";
    j["schema_version"] = 1;
    j["seed"] = report.seed;
    j["config"] = report.config_echo;

    nlohmann::json dataset;
    dataset["n"] = report.n_prepared;
    dataset["k_classes"] = report.k_classes;
    dataset["feature_names"] = report.feature_names;
    dataset["demoted_counts"] = report.demoted_counts;
    dataset["class_distribution"] = detail::distribution_to_json(report.dist_raw);
    dataset["class_distribution_balanced"] =
        report.dist_balanced ? detail::distribution_to_json(*report.dist_balanced)
                             : nlohmann::json();
    dataset["smote_mode"] = report.smote_mode;
    j["dataset"] = std::move(dataset);

    nlohmann::json selection;
    selection["method"] = report.selection_method;
    selection["scores"] = report.selection_scores;
    selection["selected"] = report.selected_features;
    if (report.sbs) {
        selection["sbs"] = {{"removed_order", report.sbs->removed_order},
                            {"accuracy_trace", report.sbs->accuracy_trace}};
    } else {
        selection["sbs"] = nlohmann::json();
    }
    j["selection"] = std::move(selection);

    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : report.runs) {
        nlohmann::json rj;
        rj["model"] = run.name;
        rj["variant"] = to_string(run.variant);
        rj["split"] = run.split_fraction;
        rj["tuned"] = run.tuned;
        rj["params"] = run.params;
        rj["train_class_counts"] = run.train_class_counts;
        rj["confusion"] = run.confusion.counts;
        rj["metrics"] = detail::metrics_to_json(run.metrics);

        nlohmann::json curves = nlohmann::json::array();
        for (std::size_t k = 0; k < run.roc_curves.size(); ++k) {
            const auto& curve = run.roc_curves[k];
            if (curve.points.empty()) continue;
            nlohmann::json points = nlohmann::json::array();
            for (const auto& [fpr, tpr] : curve.points)
                points.push_back(nlohmann::json::array({fpr, tpr}));
            curves.push_back(
                {{"class", k}, {"auc", curve.auc}, {"points", std::move(points)}});
        }
        rj["roc"] = std::move(curves);
        rj["importance"] = run.importance;
        rj["cv"] = run.cv ? detail::cv_to_json(*run.cv) : nlohmann::json();
        runs.push_back(std::move(rj));
    }
    j["runs"] = std::move(runs);
    return j;
}

inline const char* kMetricsCsvHeader = "model,split,accuracy,precision_w,recall_w,f1_w,roc_auc_w";

/// One CSV row per model x split. Every numeric cell is serialized from the
/// same JSON value that report.json carries, so the two files agree exactly.
inline std::string metrics_csv(const nlohmann::json& report_json) {
    std::string out = kMetricsCsvHeader;
    out += '\n';
    for (const auto& run : report_json.at("runs")) {
        const auto& metrics = run.at("metrics");
        out += run.at("model").get<std::string>();
        out += ',';
        out += run.at("split").dump();
        out += ',';
        out += metrics.at("accuracy").dump();
        out += ',';
        out += metrics.at("precision_weighted").dump();
        out += ',';
        out += metrics.at("recall_weighted").dump();
        out += ',';
        out += metrics.at("f1_weighted").dump();
        out += ',';
        out += metrics.contains("auc") ? metrics.at("auc").at("weighted").dump() : "";
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string> class_display_names(int k_classes) {
    std::vector<std::string> names;
    for (int k = 0; k < k_classes; ++k) {
        if (k_classes == nutrition_class::kCount)
            names.push_back(std::to_string(k) + " " + nutrition_class::name(k));
        else
            names.push_back("class " + std::to_string(k));
    }
    return names;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content,
                            std::vector<std::string>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    written.push_back(path.string());
}

} // namespace detail

/// Writes report.json, metrics.csv, timing.json, and per-model SVG plots
/// (ROC, confusion heatmap, feature importances) for the final split ratio.
/// Returns the list of files written.
inline std::vector<std::string> emit_report(const RunReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    const nlohmann::json report_json = report_to_json(report);
    detail::write_text_file(fs::path(out_dir) / "report.json", report_json.dump(1) + "\n",
                            written);
    detail::write_text_file(fs::path(out_dir) / "metrics.csv", metrics_csv(report_json), written);

    nlohmann::json timing(report.timing_seconds);
    detail::write_text_file(fs::path(out_dir) / "timing.json", timing.dump(1) + "\n", written);

    if (report.runs.empty()) return written;

    const double last_split = report.runs.back().split_fraction;
    const auto class_names = detail::class_display_names(report.k_classes);

    std::vector<std::string> selected_names;
    for (std::size_t f : report.selected_features)
        selected_names.push_back(f < report.feature_names.size() ? report.feature_names[f]
                                                                 : "f" + std::to_string(f));

    for (const auto& run : report.runs) {
        if (run.split_fraction != last_split) continue;
        const std::string base = detail::sanitize_name(run.name);
        char split_txt[32];
        std::snprintf(split_txt, sizeof(split_txt), "%.0f/%.0f", (1.0 - last_split) * 100.0,
                      last_split * 100.0);

        std::vector<RocCurve> curves;
        std::vector<double> aucs;
        std::vector<std::string> curve_names;
        for (std::size_t k = 0; k < run.roc_curves.size(); ++k) {
            if (run.roc_curves[k].points.empty()) continue;
            curves.push_back(run.roc_curves[k]);
            aucs.push_back(run.roc_curves[k].auc);
            curve_names.push_back(class_names[k]);
        }
        detail::write_text_file(
            fs::path(out_dir) / ("roc_" + base + ".svg"),
            svg::roc_chart(curves, aucs,
                           "ROC (one-vs-rest) - " + run.name + " @ " + split_txt, curve_names),
            written);
        detail::write_text_file(
            fs::path(out_dir) / ("confusion_" + base + ".svg"),
            svg::confusion_heatmap(run.confusion, "Confusion matrix - " + run.name + " @ " +
                                                      split_txt,
                                   class_names),
            written);
        detail::write_text_file(
            fs::path(out_dir) / ("importance_" + base + ".svg"),
            svg::importance_chart(run.importance, selected_names,
                                  "Feature importance - " + run.name),
            written);
    }
    return written;
}

} // namespace nutripred
