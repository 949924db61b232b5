#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "nutripred/evaluation.hpp"

namespace nutripred {
namespace svg {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill,
                        const std::string& extra = "") {
    return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"" + fill + "\" " + extra + "/>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const std::string& stroke,
                        const std::string& extra = "") {
    return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
           num(y2) + "\" stroke=\"" + stroke + "\" " + extra + "/>\n";
}

inline std::string text(double x, double y, const std::string& content,
                        const std::string& extra = "") {
    std::string escaped;
    for (char c : content) {
        if (c == '<') escaped += "&lt;";
        else if (c == '>') escaped += "&gt;";
        else if (c == '&') escaped += "&amp;";
        else escaped.push_back(c);
    }
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) +
           "\" font-family=\"sans-serif\" font-size=\"11\" " + extra + ">" + escaped +
           "</text>\n";
}

inline std::string document(double width, double height, const std::string& body) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
           "width=\"" +
           num(width) + "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
           num(height) + "\">\n" + rect(0, 0, width, height, "#ffffff") + body + "</svg>\n";
}

inline const std::vector<std::string>& class_palette() {
    static const std::vector<std::string> colors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                    "#9467bd", "#8c564b"};
    return colors;
}

/// Blue-scale heatmap of a confusion matrix with cell counts.
inline std::string confusion_heatmap(const ConfusionMatrix& m, const std::string& title,
                                     const std::vector<std::string>& class_names) {
    const std::size_t K = m.k();
    const double cell = 64.0, left = 90.0, top = 60.0;
    const double width = left + cell * static_cast<double>(K) + 40.0;
    const double height = top + cell * static_cast<double>(K) + 70.0;
    std::size_t max_count = 1;
    for (const auto& row : m.counts)
        for (auto c : row) max_count = std::max(max_count, c);

    std::string body;
    body += text(left, 24, title, "font-size=\"14\" font-weight=\"bold\"");
    body += text(left, 42, "rows: true class, columns: predicted class");
    for (std::size_t t = 0; t < K; ++t) {
        body += text(left - 80, top + cell * (static_cast<double>(t) + 0.55),
                     class_names[t]);
        for (std::size_t p = 0; p < K; ++p) {
            const double x = left + cell * static_cast<double>(p);
            const double y = top + cell * static_cast<double>(t);
            const double intensity =
                static_cast<double>(m.counts[t][p]) / static_cast<double>(max_count);
            const int shade = static_cast<int>(255.0 - 175.0 * intensity);
            char fill[16];
            std::snprintf(fill, sizeof(fill), "#%02x%02xff", shade, shade);
            body += rect(x, y, cell - 2, cell - 2, fill, "stroke=\"#cccccc\"");
            body += text(x + cell / 2 - 14, y + cell / 2 + 4,
                         std::to_string(m.counts[t][p]),
                         intensity > 0.6 ? "fill=\"#ffffff\"" : "");
        }
    }
    for (std::size_t p = 0; p < K; ++p)
        body += text(left + cell * static_cast<double>(p) + 6,
                     top + cell * static_cast<double>(K) + 18, class_names[p]);
    return document(width, height, body);
}

/// One-vs-rest ROC curves for all classes with per-class AUC legend.
inline std::string roc_chart(const std::vector<RocCurve>& curves,
                             const std::vector<double>& aucs, const std::string& title,
                             const std::vector<std::string>& class_names) {
    const double size = 320.0, left = 60.0, top = 50.0;
    const double width = left + size + 200.0;
    const double height = top + size + 60.0;

    std::string body;
    body += text(left, 24, title, "font-size=\"14\" font-weight=\"bold\"");
    body += rect(left, top, size, size, "none", "stroke=\"#333333\"");
    body += line(left, top + size, left + size, top, "#999999",
                 "stroke-dasharray=\"4 4\""); // chance diagonal
    body += text(left + size / 2 - 60, top + size + 34, "false positive rate");
    body += text(left - 46, top + size / 2,
                 "TPR", "transform=\"rotate(-90 " + num(left - 46) + " " +
                             num(top + size / 2) + ")\"");

    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& color = class_palette()[k % class_palette().size()];
        std::string points;
        for (const auto& [fpr, tpr] : curves[k].points) {
            points += num(left + fpr * size) + "," + num(top + (1.0 - tpr) * size) + " ";
        }
        body += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" +
                points + "\"/>\n";
        char label[96];
        std::snprintf(label, sizeof(label), "%s (AUC %.4f)", class_names[k].c_str(), aucs[k]);
        const double ly = top + 16.0 * static_cast<double>(k + 1);
        body += line(left + size + 14, ly - 4, left + size + 34, ly - 4, color,
                     "stroke-width=\"2\"");
        body += text(left + size + 40, ly, label);
    }
    return document(width, height, body);
}

/// Horizontal bar chart of normalized feature importances, largest first.
inline std::string importance_chart(const std::vector<double>& importance,
                                    const std::vector<std::string>& names,
                                    const std::string& title) {
    std::vector<std::size_t> order(importance.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });

    const double bar_h = 16.0, left = 170.0, top = 50.0, bar_max = 360.0;
    const double height = top + bar_h * static_cast<double>(order.size()) + 30.0;
    double max_v = 1e-12;
    for (double v : importance) max_v = std::max(max_v, v);

    std::string body;
    body += text(left, 24, title, "font-size=\"14\" font-weight=\"bold\"");
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t f = order[i];
        const double y = top + bar_h * static_cast<double>(i);
        body += text(8, y + 11, names[f]);
        body += rect(left, y + 2, bar_max * importance[f] / max_v, bar_h - 5, "#1f77b4");
        char label[32];
        std::snprintf(label, sizeof(label), "%.4f", importance[f]);
        body += text(left + bar_max * importance[f] / max_v + 6, y + 11, label);
    }
    return document(left + bar_max + 90.0, height, body);
}

} // namespace svg
} // namespace nutripred
