#pragma once

#include <map>
#include <string>
#include <vector>

#include "quizgen/analytics.hpp"
#include "quizgen/domain_json.hpp"

// JSON and plain-text renderings of analytics results. The table renderings
// show the same numbers as the JSON, rounded for display.
namespace quizgen {

Json to_json(const AcceptanceReport& r);
Json to_json(const std::map<ModelId, ErrorBreakdown>& d);
Json to_json(const AgreementReport& r);
Json to_json(Metric metric, const InstanceCorrelation& c);
Json to_json(Metric metric, const SystemCorrelation& c);
Json upper_bound_json(Metric metric, double value);
Json to_json(const MetricReport& r);

std::string render_table(const AcceptanceReport& r);
std::string render_table(const std::map<ModelId, ErrorBreakdown>& d);
std::string render_table(const AgreementReport& r);
std::string render_table(Metric metric, const InstanceCorrelation& c);
std::string render_table(Metric metric, const SystemCorrelation& c);
std::string upper_bound_table(Metric metric, double value);

/// Models ordered by acceptance rate, scores x100 with one decimal, then the
/// upper-bound row and the two correlation rows.
std::string render_table(const MetricReport& r);

/// Column header used for each metric in the combined table.
std::string_view metric_column(Metric m) noexcept;

/// Left-aligned first column, right-aligned others, a rule under the header.
std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

/// printf-style fixed-point formatting.
std::string fixed(double v, int decimals);

/// Correlation as printed in the combined table: three decimals with the
/// leading zero dropped (".724", "-.120").
std::string correlation_cell(double v);

}  // namespace quizgen
