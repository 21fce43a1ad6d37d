#include "qualitagger/ensemble.hpp"

#include <cmath>

#include "qualitagger/corpus.hpp"
#include "qualitagger/error.hpp"

namespace qtag::classify {

using nlohmann::json;

void validate_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("threshold must be in (0, 1)");
}

EnsembleModel load_ensemble(const std::filesystem::path& model_dir, double threshold) {
  validate_threshold(threshold);
  EnsembleModel e;
  e.threshold = threshold;
  for (Quality q : kAllQualities) {
    const auto path = model_dir / (std::string(to_string(q)) + ".qtag");
    if (!std::filesystem::exists(path)) {
      throw DataError("ensemble is missing the " + std::string(to_string(q)) + " model (" +
                      path.string() + ")");
    }
    BinaryModel model = load_binary_model(path);
    if (model.quality != q) {
      throw DataError(path.string() + " holds a " + std::string(to_string(model.quality)) +
                      " model");
    }
    e.members[index_of(q)] =
        std::make_shared<LocalBackend>(std::make_shared<const BinaryModel>(std::move(model)));
  }
  return e;
}

EnsembleModel remote_ensemble(const Endpoint& endpoint, double threshold) {
  validate_threshold(threshold);
  EnsembleModel e;
  e.threshold = threshold;
  for (Quality q : kAllQualities) {
    e.members[index_of(q)] = std::make_shared<RemoteBackend>(endpoint, std::string(to_string(q)));
  }
  return e;
}

QualitySet threshold_set(const ScoreMap& scores, double threshold) {
  QualitySet out;
  for (Quality q : kAllQualities) {
    const auto& s = scores[index_of(q)];
    if (s && *s >= threshold) out.insert(q);
  }
  return out;
}

json to_json(const TagSet& t) {
  json scores = json::object();
  for (Quality q : kAllQualities) {
    if (const auto& s = t.scores[index_of(q)]) scores[std::string(to_string(q))] = *s;
  }
  json j = {
      {"issue_id", t.issue_id},
      {"repo", t.repo},
      {"created_at", format_timestamp(t.created_at)},
      {"scores", scores},
      {"predicted", to_strings(t.predicted)},
      {"forced", to_strings(t.forced)},
  };
  if (t.repo_language) j["repo_language"] = *t.repo_language;
  if (!t.ok()) {
    j["failed"] = to_strings(t.failed);
    j["error"] = t.error;
  }
  return j;
}

std::vector<TagSet> tag_issues(const EnsembleModel& ensemble,
                               std::span<const ingest::IssueRecord> records,
                               std::span<const ingest::LabelRule> rules) {
  validate_threshold(ensemble.threshold);
  for (const auto& r : rules) ingest::validate(r);

  std::vector<TagSet> out(records.size());
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto outcome = ingest::apply_rules(records[i], rules);
    TagSet& t = out[i];
    t.issue_id = records[i].id;
    t.repo = records[i].repo;
    t.created_at = records[i].created_at;
    t.repo_language = records[i].repo_language;
    t.forced = outcome.forced;
    texts.push_back(corpus::normalize_text(outcome.record.text()));
  }

  for (Quality q : kAllQualities) {
    const auto& member = ensemble.members[index_of(q)];
    if (!member) throw UsageError("ensemble has no " + std::string(to_string(q)) + " member");
    try {
      const std::vector<double> scores = member->score(texts);
      if (scores.size() != texts.size()) {
        throw BackendError(BackendErrorKind::LengthMismatch, member->describe());
      }
      for (std::size_t i = 0; i < out.size(); ++i) out[i].scores[index_of(q)] = scores[i];
    } catch (const BackendError& e) {
      for (auto& t : out) {
        t.failed.insert(q);
        if (!t.error.empty()) t.error += "; ";
        t.error += std::string(to_string(q)) + ": " + e.what();
      }
    }
  }

  for (auto& t : out) t.predicted = threshold_set(t.scores, ensemble.threshold) | t.forced;
  return out;
}

TagSet tag_issue(const EnsembleModel& ensemble, const ingest::IssueRecord& record,
                 std::span<const ingest::LabelRule> rules) {
  return std::move(tag_issues(ensemble, std::span(&record, 1), rules).front());
}

}  // namespace qtag::classify
