#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qualitagger/quality.hpp"
#include "qualitagger/util.hpp"

namespace qtag::ingest {

struct IssueRecord {
  std::string id;
  std::string repo;  // "owner/name"
  std::string title;
  std::string body;
  std::vector<std::string> labels;
  Timestamp created_at{};
  std::optional<std::string> repo_language;

  // The classified text: title and body joined by a newline.
  std::string text() const { return title + "\n" + body; }

  bool operator==(const IssueRecord&) const = default;
};

// Throws DataError when id is empty or repo is not "owner/name".
void validate(const IssueRecord& record);

nlohmann::json to_json(const IssueRecord& record);
// Simplified issue schema {id, repo, title, body, labels, created_at, repo_language?}.
IssueRecord issue_from_json(const nlohmann::json& j);

std::string write_issues_jsonl(std::span<const IssueRecord> records);
// Strict: any invalid line is a DataError naming the line number.
std::vector<IssueRecord> read_issues_jsonl(std::string_view text);

struct ParseResult {
  std::vector<IssueRecord> records;
  std::size_t lines = 0;
  std::size_t skipped = 0;  // malformed lines
  std::size_t ignored = 0;  // well-formed but not issue-bearing events
};

// Newline-delimited JSON events (GitHub archive IssuesEvent objects or the
// simplified issue schema, mixed freely). Gzip input is detected by magic
// bytes. One record per issue-bearing event, in stream order.
ParseResult parse_event_stream(std::string_view bytes);

// Keeps the last record seen for each id and orders the result by (repo, id).
std::vector<IssueRecord> merge_latest(std::vector<IssueRecord> records);

// Quality label patterns. A label matches a quality when its lowercase form
// contains one of the quality's stems anywhere.
struct LabelStem {
  std::string_view stem;
  Quality quality;
};
std::span<const LabelStem> label_stems();

QualitySet match_quality_labels(std::span<const std::string> labels);

enum class RuleKind { ScrubPhrase, ForceTag };

struct LabelRule {
  RuleKind kind = RuleKind::ScrubPhrase;
  std::string pattern;
  std::optional<Quality> target;

  static LabelRule scrub(std::string pattern) {
    return {RuleKind::ScrubPhrase, std::move(pattern), std::nullopt};
  }
  static LabelRule force(std::string pattern, Quality target) {
    return {RuleKind::ForceTag, std::move(pattern), target};
  }
};

// Throws UsageError for an empty pattern, a force-tag without target or a
// scrub-phrase with one.
void validate(const LabelRule& rule);

// JSONL of {kind: "scrub-phrase"|"force-tag", pattern, target?}.
std::vector<LabelRule> parse_rules(std::string_view jsonl);

struct RuleOutcome {
  IssueRecord record;
  QualitySet forced;
};

// Scrub rules delete every case-insensitive occurrence of their pattern from
// title and body, collapsing whitespace in fields they touched. Force rules
// are matched against the original text.
RuleOutcome apply_rules(const IssueRecord& record, std::span<const LabelRule> rules);

}  // namespace qtag::ingest
