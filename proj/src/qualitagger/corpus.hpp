#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qualitagger/ingest.hpp"
#include "qualitagger/quality.hpp"

namespace qtag::corpus {

inline constexpr std::size_t kDefaultMinLen = 30;

struct LabeledExample {
  std::string text;  // cleaned, lowercase
  Quality quality = Quality::Maintainability;
  int label = 0;     // 1 positive, 0 negative
  std::string source_repo;
  std::string source_id;

  bool operator==(const LabeledExample&) const = default;
};

nlohmann::json to_json(const LabeledExample& ex);
LabeledExample example_from_json(const nlohmann::json& j);
std::string write_dataset_jsonl(std::span<const LabeledExample> examples);
std::vector<LabeledExample> read_dataset_jsonl(std::string_view text);

// Lowercases, strips URLs, emoji, and characters outside [a-z0-9] plus basic
// punctuation, then collapses whitespace. Never rejects.
std::string normalize_text(std::string_view raw);

// normalize_text, rejected (nullopt) when shorter than min_len characters.
std::optional<std::string> clean_text(std::string_view raw, std::size_t min_len);

// The built-in list of 50 common English function words.
std::span<const std::string_view> function_words();

// ASCII letters make up at least 90% of all letters and at least one token is
// a common English function word. Works on raw or cleaned text.
bool is_english(std::string_view text);

// FNV-1a over the normalized issue text.
std::uint64_t content_hash(const ingest::IssueRecord& record);

// First record per content hash, input order preserved.
std::vector<ingest::IssueRecord> deduplicate(std::span<const ingest::IssueRecord> records);

struct CleanStats {
  std::size_t input = 0;
  std::size_t duplicates = 0;
  std::size_t non_english = 0;
  std::size_t too_short = 0;
  std::size_t kept = 0;
};

struct CleanResult {
  std::vector<ingest::IssueRecord> records;  // title and body normalized
  CleanStats stats;
};

// Full cleaning stage: language filter on the raw text, then normalization,
// length check, and deduplication.
CleanResult clean_corpus(std::span<const ingest::IssueRecord> records, std::size_t min_len);

// Balanced 1:1 binary dataset for one quality. Positives carry the quality;
// negatives are drawn from records labelled with some other quality and not
// this one. Records whose cleaned text is shorter than min_len are skipped.
std::vector<LabeledExample> build_binary_dataset(std::span<const ingest::IssueRecord> records,
                                                 Quality quality, std::uint64_t seed,
                                                 std::size_t min_len = 0);

using Fold = std::vector<std::size_t>;

// k folds over positions of `labels`; each fold holds a near-proportional
// share of every class (within one of exact proportionality).
std::vector<Fold> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);
std::vector<Fold> stratified_kfold(std::span<const LabeledExample> examples, int k,
                                   std::uint64_t seed);

struct LeaveOneOut {
  std::vector<ingest::IssueRecord> train;
  std::vector<ingest::IssueRecord> held_out;
  std::string held_out_repo;
};

// Holds out every record of the repo with the most positives for `quality`
// (ties broken by repo name).
LeaveOneOut leave_one_out_split(std::span<const ingest::IssueRecord> records, Quality quality);

struct SplitManifest {
  std::uint64_t seed = 0;
  int k = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<Fold> folds;  // positions into train_ids
  std::optional<std::string> held_out_repo;
};

nlohmann::json to_json(const SplitManifest& m);
SplitManifest manifest_from_json(const nlohmann::json& j);

// Stratified train/test split of a dataset followed by k folds over train.
// k = 0 skips fold generation.
SplitManifest holdout_split(std::span<const LabeledExample> examples, double test_fraction, int k,
                            std::uint64_t seed);

// The leave-one-repo-out protocol applied to a dataset file: the repo with the
// most positive examples of `quality` becomes the test set.
SplitManifest leave_one_out_manifest(std::span<const LabeledExample> examples, Quality quality,
                                     int k, std::uint64_t seed);

}  // namespace qtag::corpus
