#include "quizgen/report.hpp"

#include <algorithm>
#include <cstdio>

namespace quizgen {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

std::string correlation_cell(double v) {
    std::string s = fixed(v, 3);
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
    return s;
}

std::string_view metric_column(Metric m) noexcept {
    switch (m) {
        case Metric::Bleu: return "BLEU";
        case Metric::Rouge1: return "R-1";
        case Metric::RougeL: return "R-L";
        case Metric::Meteor: return "MET";
        case Metric::EmbedF1: return "EmbF1";
    }
    return {};
}

std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
    };
    measure(header);
    for (const auto& r : rows) measure(r);
    auto line = [&](const std::vector<std::string>& row) {
        std::string out;
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < row.size() ? row[c] : "";
            const std::string pad(width[c] - cell.size(), ' ');
            if (c > 0) out += "  ";
            out += c == 0 ? cell + pad : pad + cell;
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    std::size_t total = 0;
    for (auto w : width) total += w;
    total += 2 * (width.empty() ? 0 : width.size() - 1);
    std::string out = line(header);
    out += std::string(total, '-') + "\n";
    for (const auto& r : rows) {
        if (r.empty()) {
            out += std::string(total, '-') + "\n";
        } else {
            out += line(r);
        }
    }
    return out;
}

namespace {

std::string percent(double v) { return fixed(100.0 * v, 1); }

std::string cell(const std::optional<double>& v, bool correlation) {
    if (!v) return "-";
    return correlation ? correlation_cell(*v) : percent(*v);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// Acceptance
// ---------------------------------------------------------------------------

Json to_json(const AcceptanceReport& r) {
    auto stat = [](const AcceptanceStat& s) {
        return Json{{"accepted", s.accepted}, {"total", s.total}, {"rate", s.rate()}};
    };
    Json models = Json::object();
    for (const auto& [m, s] : r.per_model) models[m] = stat(s);
    return Json{{"analysis", "acceptance"}, {"per_model", models}, {"overall", stat(r.overall)}};
}

std::string render_table(const AcceptanceReport& r) {
    std::vector<std::vector<std::string>> rows;
    auto row = [](const std::string& name, const AcceptanceStat& s) {
        return std::vector<std::string>{name, std::to_string(s.accepted), std::to_string(s.total), percent(s.rate())};
    };
    for (const auto& [m, s] : r.per_model) rows.push_back(row(m, s));
    rows.emplace_back();
    rows.push_back(row("overall", r.overall));
    return format_table({"Model", "Accepted", "Total", "%Acc."}, rows);
}

// ---------------------------------------------------------------------------
// Error distribution
// ---------------------------------------------------------------------------

Json to_json(const std::map<ModelId, ErrorBreakdown>& d) {
    Json models = Json::object();
    for (const auto& [m, b] : d) {
        Json cats = Json::object();
        for (const char* col : kOutcomeColumns) cats[col] = b.categories.at(col);
        Json subs = Json::object();
        for (const auto& cat : taxonomy()) {
            for (const auto& leaf : cat.leaves) {
                const std::string key(leaf.label);
                subs[key] = b.subtypes.at(key);
            }
        }
        models[m] = Json{{"total", b.total}, {"categories", cats}, {"subtypes", subs}};
    }
    return Json{{"analysis", "errors"}, {"per_model", models}};
}

std::string render_table(const std::map<ModelId, ErrorBreakdown>& d) {
    std::vector<std::string> header{"Model", "N"};
    for (const char* col : kOutcomeColumns) header.emplace_back(col);
    std::vector<std::vector<std::string>> rows;
    for (const auto& [m, b] : d) {
        std::vector<std::string> row{m, std::to_string(b.total)};
        for (const char* col : kOutcomeColumns) row.push_back(percent(b.categories.at(col)));
        rows.push_back(std::move(row));
    }
    std::string out = format_table(header, rows);
    std::vector<std::string> sub_header{"Model"};
    for (const auto& cat : taxonomy()) {
        for (const auto& leaf : cat.leaves) sub_header.emplace_back(leaf.label);
    }
    std::vector<std::vector<std::string>> sub_rows;
    for (const auto& [m, b] : d) {
        std::vector<std::string> row{m};
        for (std::size_t c = 1; c < sub_header.size(); ++c) row.push_back(percent(b.subtypes.at(sub_header[c])));
        sub_rows.push_back(std::move(row));
    }
    return out + "\n" + format_table(sub_header, sub_rows);
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

Json to_json(const AgreementReport& r) {
    Json per = Json::object();
    for (const auto& [m, c] : r.per_model_coefficients) per[m] = c;
    return Json{{"analysis", "iaa"},
                {"coefficient", optional_json(r.coefficient)},
                {"co_annotated_count", r.co_annotated_count},
                {"per_model_coefficients", per}};
}

std::string render_table(const AgreementReport& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"pooled", r.coefficient ? fixed(*r.coefficient, 3) : "-"});
    for (const auto& [m, c] : r.per_model_coefficients) rows.push_back({m, fixed(c, 3)});
    return format_table({"Scope", "Pearson"}, rows) +
           "co-annotated questions: " + std::to_string(r.co_annotated_count) + "\n";
}

// ---------------------------------------------------------------------------
// Correlations and upper bound
// ---------------------------------------------------------------------------

Json to_json(Metric metric, const InstanceCorrelation& c) {
    return Json{{"analysis", "instance-corr"},
                {"metric", metric_name(metric)},
                {"coefficient", c.coefficient},
                {"scored", c.scored},
                {"excluded", c.excluded}};
}

std::string render_table(Metric metric, const InstanceCorrelation& c) {
    return format_table({"Metric", "Pearson", "Scored", "Excluded"},
                        {{std::string(metric_name(metric)), fixed(c.coefficient, 3), std::to_string(c.scored),
                          std::to_string(c.excluded)}});
}

Json to_json(Metric metric, const SystemCorrelation& c) {
    Json models = Json::object();
    for (const auto& [m, v] : c.metric_values) {
        models[m] = Json{{"acceptance_rate", c.acceptance.at(m)}, {"metric_value", v}};
    }
    return Json{{"analysis", "system-corr"},
                {"metric", metric_name(metric)},
                {"coefficient", c.coefficient},
                {"per_model", models}};
}

std::string render_table(Metric metric, const SystemCorrelation& c) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [m, v] : c.metric_values) rows.push_back({m, percent(c.acceptance.at(m)), percent(v)});
    rows.emplace_back();
    rows.push_back({"Pearson", "", fixed(c.coefficient, 3)});
    return format_table({"Model", "%Acc.", std::string(metric_column(metric))}, rows);
}

Json upper_bound_json(Metric metric, double value) {
    return Json{{"analysis", "upper-bound"}, {"metric", metric_name(metric)}, {"value", value}};
}

std::string upper_bound_table(Metric metric, double value) {
    return format_table({"Metric", "Upper bound"}, {{std::string(metric_name(metric)), fixed(value, 3)}});
}

// ---------------------------------------------------------------------------
// Combined report
// ---------------------------------------------------------------------------

Json to_json(const MetricReport& r) {
    auto by_metric = [&](const std::map<Metric, std::optional<double>>& values) {
        Json out = Json::object();
        for (Metric m : r.metrics) out[std::string(metric_name(m))] = optional_json(values.at(m));
        return out;
    };
    Json models = Json::object();
    for (const auto& [m, row] : r.per_model) {
        models[m] = Json{{"acceptance_rate", row.acceptance_rate},
                         {"judged", row.judged},
                         {"metric_values", by_metric(row.metric_values)}};
    }
    Json meta = Json::object();
    for (const auto& [k, v] : r.metadata) meta[k] = v;
    return Json{{"analysis", "report"},
                {"per_model", models},
                {"upper_bound", by_metric(r.upper_bound)},
                {"instance_corr", by_metric(r.instance_corr)},
                {"system_corr", by_metric(r.system_corr)},
                {"metadata", meta}};
}

std::string render_table(const MetricReport& r) {
    std::vector<std::string> header{"Model Name", "%Acc."};
    for (Metric m : r.metrics) header.emplace_back(metric_column(m));
    std::vector<std::pair<ModelId, const ModelRow*>> models;
    for (const auto& [m, row] : r.per_model) models.emplace_back(m, &row);
    std::stable_sort(models.begin(), models.end(),
                     [](const auto& a, const auto& b) { return a.second->acceptance_rate < b.second->acceptance_rate; });
    std::vector<std::vector<std::string>> rows;
    for (const auto& [m, row] : models) {
        std::vector<std::string> line{m, percent(row->acceptance_rate)};
        for (Metric metric : r.metrics) line.push_back(cell(row->metric_values.at(metric), false));
        rows.push_back(std::move(line));
    }
    rows.emplace_back();
    auto summary = [&](std::string name, const std::map<Metric, std::optional<double>>& values, bool corr) {
        std::vector<std::string> line{std::move(name), corr ? "-" : "100.0"};
        for (Metric metric : r.metrics) line.push_back(cell(values.at(metric), corr));
        rows.push_back(std::move(line));
    };
    summary("Upper Bound", r.upper_bound, false);
    summary("Instance Corr.", r.instance_corr, true);
    summary("System Corr.", r.system_corr, true);
    return format_table(header, rows);
}

}  // namespace quizgen
