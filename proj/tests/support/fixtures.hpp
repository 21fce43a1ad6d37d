#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "qualitagger/ingest.hpp"
#include "qualitagger/quality.hpp"
#include "qualitagger/util.hpp"

namespace qtag::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("qtag_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline const std::array<std::vector<std::string>, kQualityCount>& planted_keywords() {
  static const std::array<std::vector<std::string>, kQualityCount> words = {{
      {"refactor", "cleanup", "deprecated", "technical", "debt", "readability"},
      {"vulnerability", "xss", "injection", "exploit", "csrf", "cve"},
      {"crash", "segfault", "flaky", "hang", "deadlock", "corrupted"},
      {"confusing", "tooltip", "accessibility", "ux", "button", "misaligned"},
      {"incompatible", "upgrade", "breaking", "version", "backward", "legacy"},
      {"slow", "latency", "memory", "throughput", "benchmark", "cpu"},
      {"windows", "macos", "arm64", "cross", "platform", "docker"},
  }};
  return words;
}

inline const std::vector<std::string>& filler_phrases() {
  static const std::vector<std::string> phrases = {
      "steps to reproduce are below",  "seen on the latest release",
      "thanks for looking into this",  "the logs are attached",
      "it started after the last update", "expected behavior is different",
      "happens in the test suite too", "we noticed it this morning",
      "any help would be appreciated", "the config file is unchanged",
      "users reported it twice",       "not sure where to start"};
  return phrases;
}

inline const std::vector<std::string>& components() {
  static const std::vector<std::string> names = {"parser", "scheduler", "dashboard", "cli",
                                                 "storage", "auth module", "renderer"};
  return names;
}

struct SyntheticIssue {
  ingest::IssueRecord record;
  QualitySet truth;
};

// Issues planting one keyword in the title and 3 distinct keywords of each
// true quality in the body, next to one stock phrase. Every issue has one
// quality; with second_quality_every = k about one in k also gets a second
// (0 disables).
inline std::vector<SyntheticIssue> synthetic_issues(std::size_t n, std::uint64_t seed,
                                                    std::size_t repos = 5,
                                                    std::uint64_t second_quality_every = 8) {
  SeededRng rng(seed);
  const auto& phrases = filler_phrases();
  std::vector<SyntheticIssue> out;
  for (std::size_t i = 0; i < n; ++i) {
    SyntheticIssue s;
    const Quality primary = kAllQualities[i % kQualityCount];
    s.truth.insert(primary);
    if (second_quality_every > 0 && rng.below(second_quality_every) == 0) {
      s.truth.insert(kAllQualities[rng.below(kQualityCount)]);
    }
    std::vector<std::string> parts;
    parts.push_back(phrases[rng.below(phrases.size())]);
    std::string title_kw;
    for (Quality q : s.truth.members()) {
      auto kw = planted_keywords()[index_of(q)];
      rng.shuffle(kw);
      if (title_kw.empty()) title_kw = kw[3];
      parts.insert(parts.end(), kw.begin(), kw.begin() + 3);
    }
    rng.shuffle(parts);
    std::string body;
    for (const auto& w : parts) body += (body.empty() ? "" : " ") + w;
    auto& r = s.record;
    r.repo = "org" + std::to_string(rng.below(repos)) + "/project";
    r.id = r.repo + "#" + std::to_string(i + 1);
    r.title = title_kw + " in " + components()[rng.below(components().size())];
    r.body = body;
    for (Quality q : s.truth.members()) r.labels.push_back("type: " + std::string(to_string(q)));
    r.created_at = Timestamp(std::chrono::seconds(1577836800 + static_cast<long>(i) * 86400));
    r.repo_language = (i % 3 == 0) ? std::optional<std::string>("Python")
                                   : std::optional<std::string>("TypeScript");
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<ingest::IssueRecord> records_of(const std::vector<SyntheticIssue>& issues) {
  std::vector<ingest::IssueRecord> out;
  for (const auto& s : issues) out.push_back(s.record);
  return out;
}

}  // namespace qtag::testing
