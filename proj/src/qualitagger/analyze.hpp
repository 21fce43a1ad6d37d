#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qualitagger/quality.hpp"
#include "qualitagger/util.hpp"

namespace qtag::analyze {

struct TaggedIssue {
  std::string issue_id;
  std::string repo;
  Timestamp created_at{};
  std::optional<std::string> repo_language;
  QualitySet predicted;
};

// {issue_id, repo, created_at, repo_language?, predicted: [...]}; extra
// fields (scores, forced...) are ignored so tagger output reads directly.
TaggedIssue tagged_from_json(const nlohmann::json& j);
std::vector<TaggedIssue> read_tagged_jsonl(std::string_view text);

struct FrequencyRow {
  Quality quality;
  std::size_t count = 0;
  double relative_frequency = 0.0;  // percent of total_issues
};

// One row per quality, canonical order. The denominator is the number of
// issues scanned, not the sum of counts. Throws DataError when total_issues
// is 0 or smaller than the number of tagged issues.
std::vector<FrequencyRow> quality_frequency(std::span<const TaggedIssue> tagged,
                                            std::size_t total_issues);

struct SpecificityEntry {
  Quality a;
  Quality b;  // a < b in canonical order
  std::size_t both = 0;
  std::size_t either = 0;
  double score = 0.0;
};

// Jaccard overlap of the issue sets of each unordered quality pair.
class SpecificityMatrix {
 public:
  explicit SpecificityMatrix(std::vector<SpecificityEntry> entries)
      : entries_(std::move(entries)) {}
  const std::vector<SpecificityEntry>& entries() const { return entries_; }
  // Symmetric lookup; a != b.
  double score(Quality a, Quality b) const;

 private:
  std::vector<SpecificityEntry> entries_;  // 21 pairs in canonical order
};

SpecificityMatrix specificity_scores(std::span<const TaggedIssue> tagged);

struct Peak {
  std::string period;  // "2019-10", "2019-Q4", "2019"
  std::size_t count = 0;
};

struct PeakRow {
  Quality quality;
  Peak monthly;
  Peak quarterly;
  Peak yearly;
};

// Busiest calendar month, quarter, and year (UTC) per quality; ties go to
// the earliest period. Qualities that never occur get no row.
std::vector<PeakRow> temporal_peaks(std::span<const TaggedIssue> tagged);

struct ImpactRow {
  Quality quality;
  std::size_t count = 0;
  double percentage = 0.0;  // share of the summed per-quality counts
};

// Canonical order. Throws DataError when no issue carries any quality.
std::vector<ImpactRow> td_impact(std::span<const TaggedIssue> tagged);

// language -> per-quality counts (canonical order). Issues without a
// language are counted under "unknown".
using LanguageTable = std::map<std::string, std::array<std::size_t, kQualityCount>>;
inline constexpr std::string_view kUnknownLanguage = "unknown";

LanguageTable language_breakdown(std::span<const TaggedIssue> tagged);

struct AnalysisReport {
  std::optional<std::string> repo;  // scope filter, if any
  std::size_t total_issues = 0;
  std::vector<FrequencyRow> frequency;
  SpecificityMatrix specificity{{}};
  std::vector<PeakRow> peaks;
  std::vector<ImpactRow> impact;  // empty when nothing was tagged
  LanguageTable languages;
};

AnalysisReport analyze_all(std::span<const TaggedIssue> tagged,
                           std::optional<std::size_t> total_issues);

nlohmann::json to_json(const AnalysisReport& report);
std::string format_text(const AnalysisReport& report);
// Table name ("frequency", "specificity", "peaks", "td_impact", "languages")
// -> CSV document.
std::map<std::string, std::string> format_csv(const AnalysisReport& report);

}  // namespace qtag::analyze
