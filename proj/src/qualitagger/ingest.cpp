#include "qualitagger/ingest.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "qualitagger/error.hpp"

namespace qtag::ingest {

using nlohmann::json;

void validate(const IssueRecord& record) {
  if (record.id.empty()) throw DataError("issue id must not be empty");
  const auto slashes = std::count(record.repo.begin(), record.repo.end(), '/');
  if (slashes != 1 || record.repo.front() == '/' || record.repo.back() == '/') {
    throw DataError("repo must be 'owner/name', got '" + record.repo + "'");
  }
}

json to_json(const IssueRecord& record) {
  json j = {
      {"id", record.id},
      {"repo", record.repo},
      {"title", record.title},
      {"body", record.body},
      {"labels", record.labels},
      {"created_at", format_timestamp(record.created_at)},
  };
  if (record.repo_language) j["repo_language"] = *record.repo_language;
  return j;
}

namespace {

std::string string_field(const json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw DataError(std::string("missing field '") + key + "'");
    return {};
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw DataError(std::string("field '") + key + "' must be a string");
}

std::vector<std::string> label_names(const json& labels) {
  std::vector<std::string> out;
  if (!labels.is_array()) return out;
  for (const auto& l : labels) {
    if (l.is_string()) {
      out.push_back(l.get<std::string>());
    } else if (l.is_object() && l.contains("name") && l["name"].is_string()) {
      out.push_back(l["name"].get<std::string>());
    }
  }
  return out;
}

std::optional<std::string> language_of(const json& j) {
  if (j.is_object()) {
    auto it = j.find("language");
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return std::nullopt;
}

bool is_issue_action(std::string_view action) {
  return action == "opened" || action == "labeled" || action == "edited" || action == "reopened";
}

// GitHub archive IssuesEvent -> record. Returns nullopt for non-issue events.
std::optional<IssueRecord> from_event(const json& ev) {
  if (ev.at("type").get<std::string>() != "IssuesEvent") return std::nullopt;
  const json& payload = ev.at("payload");
  if (!is_issue_action(payload.at("action").get<std::string>())) return std::nullopt;
  const json& issue = payload.at("issue");

  IssueRecord r;
  r.repo = ev.at("repo").at("name").get<std::string>();
  r.id = r.repo + "#" + std::to_string(issue.at("number").get<long long>());
  r.title = string_field(issue, "title", false);
  r.body = string_field(issue, "body", false);
  r.labels = label_names(issue.value("labels", json::array()));
  if (payload.contains("label")) {
    for (auto& extra : label_names(json::array({payload["label"]}))) {
      if (std::find(r.labels.begin(), r.labels.end(), extra) == r.labels.end()) {
        r.labels.push_back(std::move(extra));
      }
    }
  }
  std::string created = string_field(issue, "created_at", false);
  if (created.empty()) created = string_field(ev, "created_at", true);
  r.created_at = parse_timestamp(created);
  r.repo_language = language_of(ev.at("repo"));
  if (!r.repo_language && payload.contains("repository")) {
    r.repo_language = language_of(payload["repository"]);
  }
  validate(r);
  return r;
}

}  // namespace

IssueRecord issue_from_json(const json& j) {
  if (!j.is_object()) throw DataError("issue must be a JSON object");
  IssueRecord r;
  r.id = string_field(j, "id", true);
  r.repo = string_field(j, "repo", true);
  r.title = string_field(j, "title", false);
  r.body = string_field(j, "body", false);
  if (j.contains("labels") && !j["labels"].is_array()) throw DataError("'labels' must be an array");
  r.labels = label_names(j.value("labels", json::array()));
  r.created_at = parse_timestamp(string_field(j, "created_at", true));
  if (j.contains("repo_language") && j["repo_language"].is_string()) {
    r.repo_language = j["repo_language"].get<std::string>();
  }
  validate(r);
  return r;
}

std::string write_issues_jsonl(std::span<const IssueRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<IssueRecord> read_issues_jsonl(std::string_view text) {
  std::vector<IssueRecord> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    try {
      out.push_back(issue_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError("issues line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ParseResult parse_event_stream(std::string_view bytes) {
  const std::string text = gunzip_if_needed(std::string(bytes));
  ParseResult result;
  for (std::string_view line : split_lines(text)) {
    ++result.lines;
    try {
      json j = json::parse(line);
      if (!j.is_object()) {
        ++result.skipped;
      } else if (j.contains("type")) {
        if (auto r = from_event(j)) {
          result.records.push_back(std::move(*r));
        } else {
          ++result.ignored;
        }
      } else {
        result.records.push_back(issue_from_json(j));
      }
    } catch (const std::exception&) {
      ++result.skipped;
    }
  }
  return result;
}

std::vector<IssueRecord> merge_latest(std::vector<IssueRecord> records) {
  std::map<std::pair<std::string, std::string>, IssueRecord> latest;
  for (auto& r : records) {
    auto key = std::make_pair(r.repo, r.id);
    latest.insert_or_assign(std::move(key), std::move(r));
  }
  std::vector<IssueRecord> out;
  out.reserve(latest.size());
  for (auto& [key, r] : latest) out.push_back(std::move(r));
  return out;
}

namespace {

constexpr std::array<LabelStem, 8> kStems = {{
    {"maintain", Quality::Maintainability},
    {"securit", Quality::Security},
    {"reliab", Quality::Reliability},
    {"usab", Quality::Usability},
    {"compatib", Quality::Compatibility},
    {"scal", Quality::Performance},
    {"perform", Quality::Performance},
    {"portab", Quality::Portability},
}};

}  // namespace

std::span<const LabelStem> label_stems() { return kStems; }

QualitySet match_quality_labels(std::span<const std::string> labels) {
  QualitySet out;
  for (const auto& label : labels) {
    const std::string lowered = to_lower_ascii(label);
    for (const auto& s : kStems) {
      if (lowered.find(s.stem) != std::string::npos) out.insert(s.quality);
    }
  }
  return out;
}

void validate(const LabelRule& rule) {
  if (rule.pattern.empty()) throw UsageError("label rule pattern must not be empty");
  if (rule.kind == RuleKind::ForceTag && !rule.target) {
    throw UsageError("force-tag rule '" + rule.pattern + "' needs a target quality");
  }
  if (rule.kind == RuleKind::ScrubPhrase && rule.target) {
    throw UsageError("scrub-phrase rule '" + rule.pattern + "' must not carry a target");
  }
}

std::vector<LabelRule> parse_rules(std::string_view jsonl) {
  std::vector<LabelRule> rules;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(jsonl)) {
    ++line_no;
    LabelRule rule;
    try {
      json j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "scrub-phrase") {
        rule.kind = RuleKind::ScrubPhrase;
      } else if (kind == "force-tag") {
        rule.kind = RuleKind::ForceTag;
      } else {
        throw DataError("unknown rule kind '" + kind + "'");
      }
      rule.pattern = j.at("pattern").get<std::string>();
      if (j.contains("target") && !j["target"].is_null()) {
        const std::string target = j["target"].get<std::string>();
        rule.target = parse_quality(target);
        if (!rule.target) throw DataError("unknown quality '" + target + "'");
      }
      validate(rule);
    } catch (const std::exception& e) {
      throw DataError("rules line " + std::to_string(line_no) + ": " + e.what());
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

namespace {

bool contains_ci(std::string_view haystack_lower, std::string_view needle) {
  return haystack_lower.find(to_lower_ascii(needle)) != std::string_view::npos;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

// Removes every case-insensitive occurrence; returns whether anything matched.
bool erase_ci(std::string& field, std::string_view pattern) {
  const std::string needle = to_lower_ascii(pattern);
  std::string lowered = to_lower_ascii(field);
  std::string out;
  std::size_t pos = 0;
  bool hit = false;
  for (std::size_t at; (at = lowered.find(needle, pos)) != std::string::npos; pos = at + needle.size()) {
    out.append(field, pos, at - pos);
    hit = true;
  }
  if (!hit) return false;
  out.append(field, pos, std::string::npos);
  field = std::move(out);
  return true;
}

}  // namespace

RuleOutcome apply_rules(const IssueRecord& record, std::span<const LabelRule> rules) {
  RuleOutcome outcome{record, {}};
  const std::string title_lower = to_lower_ascii(record.title);
  const std::string body_lower = to_lower_ascii(record.body);
  bool title_touched = false;
  bool body_touched = false;
  for (const auto& rule : rules) {
    if (rule.kind == RuleKind::ForceTag) {
      if (contains_ci(title_lower, rule.pattern) || contains_ci(body_lower, rule.pattern)) {
        outcome.forced.insert(*rule.target);
      }
    } else {
      title_touched |= erase_ci(outcome.record.title, rule.pattern);
      body_touched |= erase_ci(outcome.record.body, rule.pattern);
    }
  }
  if (title_touched) outcome.record.title = collapse_whitespace(outcome.record.title);
  if (body_touched) outcome.record.body = collapse_whitespace(outcome.record.body);
  return outcome;
}

}  // namespace qtag::ingest
