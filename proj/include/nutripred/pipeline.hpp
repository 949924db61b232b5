#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nutripred/data.hpp"
#include "nutripred/evaluation.hpp"
#include "nutripred/model.hpp"
#include "nutripred/selection.hpp"
#include "nutripred/smote.hpp"
#include "nutripred/synthetic.hpp"
#include "nutripred/tuning.hpp"

namespace nutripred {

namespace detail {

/// Runs a pipeline stage, prefixing errors with the stage name for context.
template <typename F>
auto stage(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const DataError& e) {
        throw DataError(name + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

inline nlohmann::json load_json_file(const std::string& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + what + ": " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(what + " " + path + ": " + e.what());
    }
    return j;
}

/// Accepts either an inline JSON object or a string path to a JSON file.
inline nlohmann::json inline_or_file(const nlohmann::json& j, const std::string& what) {
    if (j.is_string()) return load_json_file(j.get<std::string>(), what);
    if (j.is_object()) return j;
    throw ConfigError(what + ": expected an object or a file path");
}

} // namespace detail

struct LabelConfig {
    enum class Source { Column, Bmi };
    Source source = Source::Column;
    std::string bmi_column = "bmi_x100";
    BmiCutoffs cutoffs;
    bool drop_column = false;
};

inline LabelConfig label_config_from_json(const nlohmann::json& j) {
    LabelConfig cfg;
    if (j.is_null()) return cfg;
    const auto source = j.value("source", std::string("column"));
    if (source == "column") {
        cfg.source = LabelConfig::Source::Column;
    } else if (source == "bmi") {
        cfg.source = LabelConfig::Source::Bmi;
        cfg.bmi_column = j.value("column", cfg.bmi_column);
        if (j.contains("cutoffs")) {
            const auto cutoffs = j.at("cutoffs").get<std::vector<double>>();
            if (cutoffs.size() != 3)
                throw ConfigError("label.cutoffs: expected [severe, normal_low, overweight]");
            cfg.cutoffs = {cutoffs[0], cutoffs[1], cutoffs[2]};
        }
        cfg.drop_column = j.value("drop_column", false);
    } else {
        throw ConfigError("label.source must be \"column\" or \"bmi\"");
    }
    return cfg;
}

/// Loaded, imputed, encoded, labeled data plus everything downstream steps
/// need to reproduce the preparation on new records.
struct PreparedData {
    Dataset ds;
    Schema schema; // feature columns only (bmi column dropped when configured)
    ImputeStats impute_stats;
    std::vector<std::size_t> demoted_counts;
};

/// load -> impute -> label -> encode per the config's data and label blocks.
inline PreparedData prepare_data(const nlohmann::json& config) {
    const auto& data_cfg = config.at("data");
    const LabelConfig label_cfg = label_config_from_json(config.value("label", nlohmann::json()));

    Schema schema;
    RawTable table;
    if (data_cfg.contains("generator")) {
        detail::stage("load", [&] {
            const auto gen = generator_spec_from_json(
                detail::inline_or_file(data_cfg.at("generator"), "generator spec"));
            const auto n = data_cfg.value("n", std::size_t{10000});
            const auto seed = config.value("seed", std::uint64_t{0});
            schema = gen.schema();
            table = generate_synthetic_table(gen, n, seed);
            return 0;
        });
    } else if (data_cfg.contains("csv")) {
        detail::stage("load", [&] {
            schema = schema_from_json(
                detail::inline_or_file(data_cfg.at("schema"), "schema"));
            const bool need_label_column = label_cfg.source == LabelConfig::Source::Column;
            if (need_label_column && schema.label_name.empty())
                throw ConfigError("label.source is \"column\" but the schema has no label");
            table = load_csv(data_cfg.at("csv").get<std::string>(), schema, need_label_column);
            return 0;
        });
    } else {
        throw ConfigError("data: need either \"csv\"+\"schema\" or \"generator\"");
    }

    PreparedData out;
    out.demoted_counts = table.demoted_counts;

    ImputeStats stats;
    detail::stage("impute", [&] {
        stats = compute_impute_stats(table, schema);
        table = impute_with(table, stats);
        return 0;
    });

    std::vector<int> labels;
    detail::stage("label", [&] {
        if (label_cfg.source == LabelConfig::Source::Column) {
            const std::size_t col = schema.feature_count(); // label loaded last
            if (table.cols() != col + 1)
                throw DataError("label column '" + schema.label_name + "' was not loaded");
            labels.resize(table.rows());
            for (std::size_t r = 0; r < table.rows(); ++r)
                labels[r] = static_cast<int>(*table.cells[r][col]);
        } else {
            const int col = schema.feature_index(label_cfg.bmi_column);
            if (col < 0)
                throw ConfigError("label.column '" + label_cfg.bmi_column +
                                  "' is not a schema feature");
            labels.resize(table.rows());
            for (std::size_t r = 0; r < table.rows(); ++r)
                labels[r] = label_bmi(
                    std::llround(*table.cells[r][static_cast<std::size_t>(col)]),
                    label_cfg.cutoffs);
        }
        return 0;
    });

    detail::stage("encode", [&] {
        Schema feature_schema = schema;
        RawTable feature_table = table;
        feature_table.column_names.resize(schema.feature_count());
        for (auto& row : feature_table.cells) row.resize(schema.feature_count());

        std::vector<double> fills(stats.fill_values.begin(),
                                  stats.fill_values.begin() +
                                      static_cast<std::ptrdiff_t>(schema.feature_count()));

        if (label_cfg.source == LabelConfig::Source::Bmi && label_cfg.drop_column) {
            const auto col =
                static_cast<std::size_t>(feature_schema.feature_index(label_cfg.bmi_column));
            feature_schema.features.erase(feature_schema.features.begin() +
                                          static_cast<std::ptrdiff_t>(col));
            feature_table.column_names.erase(feature_table.column_names.begin() +
                                             static_cast<std::ptrdiff_t>(col));
            fills.erase(fills.begin() + static_cast<std::ptrdiff_t>(col));
            out.demoted_counts.erase(out.demoted_counts.begin() +
                                     static_cast<std::ptrdiff_t>(col));
            for (auto& row : feature_table.cells)
                row.erase(row.begin() + static_cast<std::ptrdiff_t>(col));
        }

        out.ds.X = encode_features(feature_table, feature_schema);
        out.ds.y = labels;
        out.ds.feature_meta = feature_schema.features;
        out.ds.k_classes = feature_schema.class_count;
        out.ds.validate();
        out.schema = feature_schema;
        out.impute_stats.fill_values = fills;
        return 0;
    });
    return out;
}

struct ModelRunRecord {
    std::string name;
    ModelVariant variant = ModelVariant::RandomForest;
    double split_fraction = 0.0;
    nlohmann::json params;
    bool tuned = false;
    std::optional<CvResult> cv;
    ConfusionMatrix confusion;
    MetricsReport metrics;
    std::vector<RocCurve> roc_curves; // per class; empty when undefined
    std::vector<double> importance;   // over the selected feature set
    std::vector<std::size_t> train_class_counts;
};

struct RunReport {
    nlohmann::json config_echo;
    std::uint64_t seed = 0;
    std::string smote_mode; // "full", "train_only", or "off"
    std::size_t n_prepared = 0;
    int k_classes = 4;
    std::vector<std::string> feature_names; // post label-drop, pre selection
    std::vector<std::size_t> demoted_counts;
    ClassDistribution dist_raw;
    std::optional<ClassDistribution> dist_balanced;
    std::string selection_method;
    nlohmann::json selection_scores = nlohmann::json::object();
    std::vector<std::size_t> selected_features;
    std::optional<SelectionResult> sbs;
    std::vector<ModelRunRecord> runs;
    std::map<std::string, double> timing_seconds; // kept out of report.json
};

namespace detail {

inline std::vector<std::pair<double, double>> thin_curve(
    const std::vector<std::pair<double, double>>& points, std::size_t max_points) {
    if (points.size() <= max_points) return points;
    std::vector<std::pair<double, double>> out;
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < max_points - 1; ++i)
        out.push_back(points[i * (n - 1) / (max_points - 1)]);
    out.push_back(points.back());
    return out;
}

struct StageTimer {
    std::map<std::string, double>& sink;
    std::string name;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    ~StageTimer() {
        sink[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
    }
};

} // namespace detail

/// End-to-end run: prepare -> (optional SMOTE) -> (optional selection) ->
/// per split ratio: split -> (optional grid search) -> train -> evaluate.
/// Every number in the returned report is a pure function of (config, seed).
inline RunReport run_pipeline(const nlohmann::json& config) {
    RunReport report;
    report.config_echo = config;
    report.seed = config.value("seed", std::uint64_t{0});

    PreparedData prepared;
    {
        detail::StageTimer timer{report.timing_seconds, "prepare"};
        prepared = prepare_data(config);
    }
    report.n_prepared = prepared.ds.n();
    report.k_classes = prepared.ds.k_classes;
    report.demoted_counts = prepared.demoted_counts;
    for (const auto& f : prepared.schema.features) report.feature_names.push_back(f.name);
    report.dist_raw = class_distribution(prepared.ds);

    // --- balancing -----------------------------------------------------
    const auto smote_cfg = config.value("smote", nlohmann::json::object());
    const bool smote_enabled = smote_cfg.value("enabled", false);
    const bool smote_train_only = smote_cfg.value("train_only", false);
    SmoteParams smote_params;
    smote_params.k_neighbors = smote_cfg.value("k_neighbors", std::size_t{5});
    smote_params.round_categorical = smote_cfg.value("round_categorical", true);
    if (smote_cfg.contains("target_per_class") && !smote_cfg.at("target_per_class").is_null())
        smote_params.target_per_class = smote_cfg.at("target_per_class").get<std::size_t>();
    smote_params.seed = Rng::mix(report.seed ^ 0x534d4f54ULL); // SMOT

    Dataset working = prepared.ds;
    report.smote_mode = smote_enabled ? (smote_train_only ? "train_only" : "full") : "off";
    if (smote_enabled && !smote_train_only) {
        detail::StageTimer timer{report.timing_seconds, "smote"};
        detail::stage("smote", [&] {
            working = smote(working, smote_params);
            return 0;
        });
        report.dist_balanced = class_distribution(working);
    }

    // --- feature selection ----------------------------------------------
    const auto selection_cfg = config.value("selection", nlohmann::json::object());
    report.selection_method = selection_cfg.value("method", std::string("none"));
    report.selected_features.resize(working.d());
    for (std::size_t f = 0; f < working.d(); ++f) report.selected_features[f] = f;

    if (report.selection_method != "none") {
        detail::StageTimer timer{report.timing_seconds, "select"};
        detail::stage("select", [&] {
            const auto bins = selection_cfg.value("bins", std::size_t{10});
            const auto keep = selection_cfg.value("keep", std::size_t{19});

            const auto mi = mutual_information(working, bins);
            const auto chi2 = chi_square(working, bins);
            const auto anova = anova_f(working);
            auto scores_json = [](const std::vector<FeatureScore>& scores) {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& s : scores) {
                    if (std::isfinite(s.value))
                        arr.push_back(s.value);
                    else
                        arr.push_back("inf"); // JSON has no infinity literal
                }
                return arr;
            };
            report.selection_scores["mutual_information"] = scores_json(mi);
            report.selection_scores["chi_square"] = scores_json(chi2);
            report.selection_scores["anova_f"] = scores_json(anova);

            if (report.selection_method == "mutual_information") {
                report.selected_features = rank_features(mi, keep);
            } else if (report.selection_method == "chi_square") {
                report.selected_features = rank_features(chi2, keep);
            } else if (report.selection_method == "anova_f") {
                report.selected_features = rank_features(anova, keep);
            } else if (report.selection_method == "sequential_backward") {
                ForestParams estimator = sbs_default_forest();
                if (selection_cfg.contains("estimator"))
                    estimator = forest_params_from_json(selection_cfg.at("estimator"));
                const auto cv_folds = selection_cfg.value("cv_folds", std::size_t{5});
                report.sbs = sequential_backward(working, estimator, keep, cv_folds,
                                                 Rng::mix(report.seed ^ 0x53425342ULL));
                report.selected_features = report.sbs->selected;
            } else {
                throw ConfigError("unknown selection.method: " + report.selection_method);
            }
            std::sort(report.selected_features.begin(), report.selected_features.end());
            return 0;
        });
        working = select_columns(working, report.selected_features);
    }

    // --- splits x models --------------------------------------------------
    std::vector<double> splits = {0.30, 0.25, 0.20};
    if (config.contains("splits")) splits = config.at("splits").get<std::vector<double>>();
    const auto cv_folds = config.value("cv_folds", std::size_t{10});
    const auto& models_cfg = config.at("models");
    if (!models_cfg.is_array() || models_cfg.empty())
        throw ConfigError("config: need a non-empty \"models\" array");

    for (std::size_t si = 0; si < splits.size(); ++si) {
        const double fraction = splits[si];
        Dataset train, test;
        {
            detail::StageTimer timer{report.timing_seconds, "split"};
            detail::stage("split", [&] {
                std::tie(train, test) =
                    stratified_split(working, fraction, Rng::mix(report.seed ^ (si + 1)));
                return 0;
            });
            if (smote_enabled && smote_train_only) {
                detail::stage("smote", [&] {
                    SmoteParams per_split = smote_params;
                    per_split.seed = Rng::mix(smote_params.seed ^ (si + 1));
                    train = smote(train, per_split);
                    return 0;
                });
            }
        }

        for (std::size_t mi = 0; mi < models_cfg.size(); ++mi) {
            const auto& model_cfg = models_cfg[static_cast<std::size_t>(mi)];
            ModelRunRecord run;
            run.variant = model_variant_from_string(model_cfg.at("variant").get<std::string>());
            run.name = model_cfg.value("name", to_string(run.variant));
            run.split_fraction = fraction;
            run.params = model_cfg.value("params", nlohmann::json::object());
            run.train_class_counts = class_distribution(train).counts;

            const std::uint64_t model_seed =
                Rng::mix(Rng::mix(report.seed ^ (si + 1)) ^ (mi + 1));

            if (model_cfg.contains("grid") && !model_cfg.at("grid").is_null()) {
                detail::StageTimer timer{report.timing_seconds, "tune"};
                detail::stage("tune", [&] {
                    GridSpec grid;
                    if (model_cfg.at("grid").is_string() &&
                        model_cfg.at("grid").get<std::string>() == "default") {
                        grid = default_grid(run.variant);
                        grid.base_params = run.params;
                    } else {
                        grid = grid_from_json(run.variant, model_cfg.at("grid"), run.params);
                    }
                    run.cv = grid_search(grid, train, cv_folds, Rng::mix(report.seed ^ 0x475253ULL));
                    run.params = run.cv->best_params;
                    run.tuned = true;
                    return 0;
                });
            }

            Model model;
            {
                detail::StageTimer timer{report.timing_seconds, "train"};
                detail::stage("train", [&] {
                    model = train_model(train, run.variant, run.params, model_seed);
                    return 0;
                });
            }

            {
                detail::StageTimer timer{report.timing_seconds, "evaluate"};
                detail::stage("evaluate", [&] {
                    const Matrix probas = predict_proba(model, test.X);
                    std::vector<int> predictions(test.n());
                    for (std::size_t i = 0; i < test.n(); ++i)
                        predictions[i] = argmax_class(probas.row(i));

                    run.confusion = confusion_matrix(test.y, predictions, test.k_classes);
                    run.metrics = classification_metrics(run.confusion);
                    attach_auc(run.metrics, roc_auc_ovr(test.y, probas));

                    run.roc_curves.resize(static_cast<std::size_t>(test.k_classes));
                    std::vector<double> scores(test.n());
                    for (int k = 0; k < test.k_classes; ++k) {
                        if (!run.metrics.auc_defined[static_cast<std::size_t>(k)]) continue;
                        for (std::size_t i = 0; i < test.n(); ++i)
                            scores[i] = probas.at(i, static_cast<std::size_t>(k));
                        auto curve = roc_curve_points(test.y, scores, k);
                        curve.points = detail::thin_curve(curve.points, 256);
                        run.roc_curves[static_cast<std::size_t>(k)] = std::move(curve);
                    }
                    run.importance = feature_importance(model);
                    return 0;
                });
            }
            report.runs.push_back(std::move(run));
        }
    }
    return report;
}

/// Applies a persisted model to a CSV of raw records (schema minus the
/// label): loads, imputes with the model's training statistics, encodes,
/// masks, and writes one output row per input with the predicted class and
/// the K probabilities.
inline std::size_t predict_records(const std::string& model_path, const std::string& input_csv,
                                   const Schema& schema, const std::string& output_csv) {
    const Model model = load_model(model_path);

    std::vector<std::string> schema_names;
    for (const auto& f : schema.features) schema_names.push_back(f.name);
    if (schema_names != model.feature_names)
        throw DataError("model/schema feature disagreement: the model was trained on a "
                        "different feature column set");
    if (model.impute_fill.size() != schema.feature_count())
        throw DataError("model file: imputation statistics do not cover the schema");
    for (std::size_t f : model.feature_mask)
        if (f >= schema.feature_count())
            throw DataError("model/schema feature-mask disagreement: mask index " +
                            std::to_string(f) + " out of range");

    RawTable table = load_csv(input_csv, schema, /*require_label=*/false);
    ImputeStats stats{model.impute_fill};
    table = impute_with(table, stats);
    const Matrix X = encode_features(table, schema);

    std::ofstream out(output_csv, std::ios::binary);
    if (!out) throw DataError("cannot write predictions: " + output_csv);
    std::vector<std::string> header = {"row", "predicted_class"};
    for (int k = 0; k < model.k_classes; ++k) header.push_back("proba_" + std::to_string(k));
    csv_write_row(out, header);

    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto x = mask_row(model, X.row(i));
        const auto proba = predict_proba_row(model, x);
        std::vector<std::string> fields;
        fields.push_back(std::to_string(i));
        fields.push_back(std::to_string(argmax_class(proba)));
        for (double p : proba) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", p);
            fields.emplace_back(buf);
        }
        csv_write_row(out, fields);
    }
    return X.rows();
}

} // namespace nutripred
