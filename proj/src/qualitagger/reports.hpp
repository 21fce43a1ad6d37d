#pragma once

#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "qualitagger/compare.hpp"
#include "qualitagger/metrics.hpp"
#include "qualitagger/quality.hpp"

namespace qtag::evalstat {

enum class ReportFormat { Json, Text, Csv };

// "json", "text", "csv"; throws UsageError otherwise.
ReportFormat parse_report_format(std::string_view name);

nlohmann::json to_json(const ConfusionCounts& c);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const MultiLabelReport& r);
// Per-resample F1 samples are left out.
nlohmann::json to_json(const ComparisonReport& r);

// label is the row name (usually the quality under evaluation).
std::string format_text(const EvalReport& r, std::string_view label);
std::string format_text(const MultiLabelReport& r, std::string_view label);
std::string format_text(const ComparisonReport& r, std::string_view label);

std::string format_csv(const EvalReport& r, std::string_view label);
std::string format_csv(const MultiLabelReport& r, std::string_view label);
std::string format_csv(const ComparisonReport& r, std::string_view label);

struct LabeledComparison {
  std::string label;
  ComparisonReport report;
};

// One table row per comparison.
std::string format_text(std::span<const LabeledComparison> rows);
std::string format_csv(std::span<const LabeledComparison> rows);

// Cliff's delta cell: "-0.3536 (M)".
std::string delta_cell(double delta, Magnitude m);

}  // namespace qtag::evalstat
