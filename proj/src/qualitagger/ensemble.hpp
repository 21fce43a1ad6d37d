#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qualitagger/backend.hpp"
#include "qualitagger/ingest.hpp"

namespace qtag::classify {

inline constexpr double kDefaultThreshold = 0.9;

// Throws UsageError unless 0 < threshold < 1.
void validate_threshold(double threshold);

// One scoring member per quality plus the shared decision threshold.
struct EnsembleModel {
  std::array<std::shared_ptr<const ScoringBackend>, kQualityCount> members;
  double threshold = kDefaultThreshold;

  const ScoringBackend& member(Quality q) const { return *members[index_of(q)]; }
};

// Reads <quality>.qtag for all seven qualities from a model directory.
EnsembleModel load_ensemble(const std::filesystem::path& model_dir,
                            double threshold = kDefaultThreshold);
// Seven remote members, model names = lowercase quality names.
EnsembleModel remote_ensemble(const Endpoint& endpoint, double threshold = kDefaultThreshold);

using ScoreMap = std::array<std::optional<double>, kQualityCount>;

// {q : scores[q] >= threshold}; missing scores never qualify.
QualitySet threshold_set(const ScoreMap& scores, double threshold);

struct TagSet {
  std::string issue_id;
  std::string repo;
  Timestamp created_at{};
  std::optional<std::string> repo_language;
  ScoreMap scores;
  QualitySet predicted;  // threshold_set(scores) | forced
  QualitySet forced;
  QualitySet failed;     // members whose backend could not score the issue
  std::string error;

  bool ok() const { return failed.empty(); }
};

nlohmann::json to_json(const TagSet& tags);

// Applies the rules, normalizes the rewritten text the way training data is
// cleaned, scores it with all seven members and thresholds. Backend failures are reported in the result, not thrown.
TagSet tag_issue(const EnsembleModel& ensemble, const ingest::IssueRecord& record,
                 std::span<const ingest::LabelRule> rules);

// Same as tag_issue for every record, with one scoring call per member.
std::vector<TagSet> tag_issues(const EnsembleModel& ensemble,
                               std::span<const ingest::IssueRecord> records,
                               std::span<const ingest::LabelRule> rules);

}  // namespace qtag::classify
