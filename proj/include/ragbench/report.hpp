#pragma once

// Report generation over sweep outputs: grouped metric tables, the
// best-of-metric selection table, and SVG box plots of score or timing
// distributions.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragbench/pipeline.hpp"
#include "ragbench/stats.hpp"
#include "ragbench/sweep.hpp"

namespace ragbench {

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ReportFormat { text_table, csv, json };

struct ReportSpec {
    std::string group_by = "chunking";  // config field
    std::vector<std::string> metrics{"context_precision", "context_recall", "faithfulness"};
    ReportFormat format = ReportFormat::text_table;
};

inline std::string group_key(const PipelineConfig& c, const std::string& dim) {
    if (dim == "vector_metric") return to_string(c.vector_metric);
    if (dim == "rerank") return c.rerank ? "rerank" : "no-rerank";
    if (dim == "max_tokens") return std::to_string(c.max_tokens);
    if (dim == "temperature") {
        std::ostringstream ss;
        ss << c.temperature;
        return ss.str();
    }
    if (dim == "k_docs") return std::to_string(c.k_docs);
    if (dim == "chunking") return c.chunking.key();
    if (dim == "config") return c.id();
    throw ReportError("invalid group-by dimension: " + dim);
}

struct ReportRow {
    std::string group;
    std::map<std::string, double> metric_means;
    double mean_time_s = 0.0;
};

inline std::vector<ReportRow> grouped_rows(const std::vector<ConfigSummary>& summaries,
                                           const ReportSpec& spec) {
    for (const auto& m : spec.metrics)
        if (std::find(metric_names().begin(), metric_names().end(), m) == metric_names().end())
            throw ReportError("unknown metric: " + m);

    std::map<std::string, std::vector<const ConfigSummary*>> groups;
    for (const auto& s : summaries) groups[group_key(s.config, spec.group_by)].push_back(&s);

    std::vector<ReportRow> rows;
    for (const auto& [key, members] : groups) {
        ReportRow row;
        row.group = key;
        for (const auto& metric : spec.metrics) {
            std::vector<double> vals;
            for (const auto* s : members) {
                auto it = s->metric_means.find(metric);
                if (it != s->metric_means.end()) vals.push_back(it->second);
            }
            if (!vals.empty()) row.metric_means[metric] = mean(vals);
        }
        std::vector<double> times;
        for (const auto* s : members) times.push_back(s->mean_total_ns);
        row.mean_time_s = mean(times) / 1e9;
        rows.push_back(std::move(row));
    }
    return rows;  // std::map iteration gives deterministic group order
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string format_cell(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << v;
    return ss.str();
}

inline std::string pretty_metric(const std::string& name) {
    static const std::map<std::string, std::string> names{
        {"faithfulness", "Faithfulness"},
        {"answer_correctness", "Answer Correctness"},
        {"answer_relevancy", "Answer Relevancy"},
        {"context_precision", "Context Precision"},
        {"context_recall", "Context Recall"},
        {"context_entity_recall", "Context Entity Recall"},
        {"answer_similarity", "Answer Similarity"}};
    auto it = names.find(name);
    return it == names.end() ? name : it->second;
}

// Rows = groups, columns = chosen metric means + mean execution time.
inline std::string table_report(const std::vector<ConfigSummary>& summaries,
                                const ReportSpec& spec) {
    auto rows = grouped_rows(summaries, spec);

    std::vector<std::string> header{spec.group_by};
    for (const auto& m : spec.metrics) header.push_back(pretty_metric(m));
    header.push_back("Execution Time (s)");

    if (spec.format == ReportFormat::csv) {
        std::ostringstream out;
        for (std::size_t i = 0; i < header.size(); ++i)
            out << (i ? "," : "") << csv_quote(header[i]);
        out << "\n";
        for (const auto& row : rows) {
            out << csv_quote(row.group);
            for (const auto& m : spec.metrics) {
                out << ",";
                auto it = row.metric_means.find(m);
                if (it != row.metric_means.end()) out << format_cell(it->second);
            }
            out << "," << format_cell(row.mean_time_s) << "\n";
        }
        return out.str();
    }
    if (spec.format == ReportFormat::json) {
        nlohmann::json jrows = nlohmann::json::array();
        for (const auto& row : rows) {
            nlohmann::json jr{{spec.group_by, row.group},
                              {"execution_time_s", row.mean_time_s}};
            for (const auto& [k, v] : row.metric_means) jr[k] = v;
            jrows.push_back(std::move(jr));
        }
        return jrows.dump(2) + "\n";
    }

    // text table
    std::vector<std::vector<std::string>> cells{header};
    for (const auto& row : rows) {
        std::vector<std::string> line{row.group};
        for (const auto& m : spec.metrics) {
            auto it = row.metric_means.find(m);
            line.push_back(it != row.metric_means.end() ? format_cell(it->second) : "-");
        }
        line.push_back(format_cell(row.mean_time_s));
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
    std::ostringstream out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t i = 0; i < cells[r].size(); ++i)
            out << std::left << std::setw(static_cast<int>(widths[i]) + 2) << cells[r][i];
        out << "\n";
        if (r == 0) {
            for (std::size_t i = 0; i < widths.size(); ++i)
                out << std::string(widths[i], '-') << "  ";
            out << "\n";
        }
    }
    return out.str();
}

// One row per metric: the configuration with the highest mean score,
// configuration fields as columns plus the score.
inline std::string best_of_metric_table(const std::vector<ConfigSummary>& summaries,
                                        ReportFormat format = ReportFormat::text_table) {
    struct Row {
        std::string metric;
        const ConfigSummary* best;
        double score;
    };
    std::vector<Row> rows;
    for (const auto& metric : metric_names()) {
        auto ranked = rank_configs(summaries, metric);
        if (ranked.empty()) continue;
        auto it = ranked.front().metric_means.find(metric);
        if (it == ranked.front().metric_means.end()) continue;
        for (const auto& s : summaries) {
            if (s.config_id == ranked.front().config_id) {
                rows.push_back({metric, &s, it->second});
                break;
            }
        }
    }

    std::vector<std::string> header{"Metric",      "Reranking", "Vector Metric", "Max Tokens",
                                    "Temperature", "Max Docs",  "Chunking",      "Score"};
    auto row_cells = [](const Row& r) {
        std::ostringstream temp;
        temp << r.best->config.temperature;
        return std::vector<std::string>{pretty_metric(r.metric),
                                        r.best->config.rerank ? "true" : "false",
                                        to_string(r.best->config.vector_metric),
                                        std::to_string(r.best->config.max_tokens),
                                        temp.str(),
                                        std::to_string(r.best->config.k_docs),
                                        r.best->config.chunking.key(),
                                        format_cell(r.score)};
    };

    if (format == ReportFormat::csv) {
        std::ostringstream out;
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << "\n";
        for (const auto& r : rows) {
            auto cells = row_cells(r);
            for (std::size_t i = 0; i < cells.size(); ++i)
                out << (i ? "," : "") << csv_quote(cells[i]);
            out << "\n";
        }
        return out.str();
    }
    if (format == ReportFormat::json) {
        nlohmann::json jrows = nlohmann::json::array();
        for (const auto& r : rows) {
            jrows.push_back({{"metric", r.metric},
                             {"config_id", r.best->config_id},
                             {"config", config_to_json(r.best->config)},
                             {"score", r.score}});
        }
        return jrows.dump(2) + "\n";
    }

    std::vector<std::vector<std::string>> cells{header};
    for (const auto& r : rows) cells.push_back(row_cells(r));
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
    std::ostringstream out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t i = 0; i < cells[r].size(); ++i)
            out << std::left << std::setw(static_cast<int>(widths[i]) + 2) << cells[r][i];
        out << "\n";
        if (r == 0) {
            for (std::size_t i = 0; i < widths.size(); ++i)
                out << std::string(widths[i], '-') << "  ";
            out << "\n";
        }
    }
    return out.str();
}

// -- box plots --------------------------------------------------------------

// Self-contained SVG 1.1; one box (min, Q1, median, Q3, max, outliers
// beyond 1.5*IQR) per group, groups left to right in sorted order.
inline std::string distribution_plot(const std::map<std::string, std::vector<double>>& groups,
                                     const std::string& title) {
    if (groups.empty()) throw ReportError("distribution_plot: no groups");
    for (const auto& [name, xs] : groups)
        if (xs.empty()) throw ReportError("distribution_plot: empty group: " + name);

    const double width = 160.0 * static_cast<double>(groups.size()) + 80.0;
    const double height = 360.0;
    const double plot_top = 50.0, plot_bottom = height - 50.0;

    double lo = 1e300, hi = -1e300;
    std::map<std::string, BoxStats> stats;
    for (const auto& [name, xs] : groups) {
        auto b = box_stats(xs);
        lo = std::min(lo, b.min);
        hi = std::max(hi, b.max);
        stats.emplace(name, b);
    }
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    auto y = [&](double v) {
        return plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - plot_top);
    };

    std::ostringstream svg;
    svg << std::fixed << std::setprecision(2);
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    svg << "<line x1=\"40\" y1=\"" << plot_top << "\" x2=\"40\" y2=\"" << plot_bottom
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"36\" y=\"" << y(hi) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
        << hi << "</text>\n";
    svg << "<text x=\"36\" y=\"" << y(lo) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
        << lo << "</text>\n";

    double cx = 130.0;
    const double box_w = 60.0;
    for (const auto& [name, b] : stats) {
        double x0 = cx - box_w / 2, x1 = cx + box_w / 2;
        // whiskers
        svg << "<line x1=\"" << cx << "\" y1=\"" << y(b.whisker_hi) << "\" x2=\"" << cx
            << "\" y2=\"" << y(b.q3) << "\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << cx << "\" y1=\"" << y(b.q1) << "\" x2=\"" << cx << "\" y2=\""
            << y(b.whisker_lo) << "\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << x0 << "\" y1=\"" << y(b.whisker_hi) << "\" x2=\"" << x1
            << "\" y2=\"" << y(b.whisker_hi) << "\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << x0 << "\" y1=\"" << y(b.whisker_lo) << "\" x2=\"" << x1
            << "\" y2=\"" << y(b.whisker_lo) << "\" stroke=\"black\"/>\n";
        // box
        svg << "<rect x=\"" << x0 << "\" y=\"" << y(b.q3) << "\" width=\"" << box_w
            << "\" height=\"" << std::max(0.0, y(b.q1) - y(b.q3))
            << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
        // median
        svg << "<line x1=\"" << x0 << "\" y1=\"" << y(b.median) << "\" x2=\"" << x1 << "\" y2=\""
            << y(b.median) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        // outliers
        for (double o : b.outliers)
            svg << "<circle cx=\"" << cx << "\" cy=\"" << y(o)
                << "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << cx << "\" y=\"" << plot_bottom + 20
            << "\" text-anchor=\"middle\" font-size=\"11\">" << name << "</text>\n";
        cx += 160.0;
    }
    svg << "</svg>\n";
    return svg.str();
}

// Per-question values of one metric grouped by a config dimension.
inline std::map<std::string, std::vector<double>> metric_distribution(
    const std::map<std::string, std::vector<RunRecord>>& records_by_config,
    const std::vector<ConfigSummary>& summaries, const std::string& group_by,
    const std::string& metric) {
    std::map<std::string, const PipelineConfig*> configs;
    for (const auto& s : summaries) configs[s.config_id] = &s.config;
    std::map<std::string, std::vector<double>> out;
    for (const auto& [id, records] : records_by_config) {
        auto it = configs.find(id);
        if (it == configs.end()) continue;
        std::string key = group_key(*it->second, group_by);
        for (const auto& rec : records) {
            if (metric == "execution_time") {
                out[key].push_back(static_cast<double>(rec.timings.total) / 1e9);
                continue;
            }
            auto scores = rec.scores.as_map();
            auto sit = scores.find(metric);
            if (sit != scores.end() && sit->second.is_defined())
                out[key].push_back(*sit->second.value);
        }
    }
    return out;
}

}  // namespace ragbench
