#include "qualitagger/corpus.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <regex>
#include <unordered_set>

#include "qualitagger/error.hpp"
#include "qualitagger/util.hpp"

namespace qtag::corpus {

using ingest::IssueRecord;
using nlohmann::json;

json to_json(const LabeledExample& ex) {
  return {
      {"text", ex.text},
      {"quality", to_string(ex.quality)},
      {"label", ex.label},
      {"source_repo", ex.source_repo},
      {"source_id", ex.source_id},
  };
}

LabeledExample example_from_json(const json& j) {
  LabeledExample ex;
  ex.text = j.at("text").get<std::string>();
  const std::string q = j.at("quality").get<std::string>();
  auto quality = parse_quality(q);
  if (!quality) throw DataError("unknown quality '" + q + "'");
  ex.quality = *quality;
  ex.label = j.at("label").get<int>();
  if (ex.label != 0 && ex.label != 1) throw DataError("label must be 0 or 1");
  ex.source_repo = j.value("source_repo", "");
  ex.source_id = j.at("source_id").get<std::string>();
  return ex;
}

std::string write_dataset_jsonl(std::span<const LabeledExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_json(ex).dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledExample> read_dataset_jsonl(std::string_view text) {
  std::vector<LabeledExample> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    try {
      out.push_back(example_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point at `pos`, advancing it; kInvalid on malformed input.
char32_t next_code_point(std::string_view s, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos++]);
  if (lead < 0x80) return lead;
  int extra;
  char32_t cp;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    return kInvalid;
  }
  for (int i = 0; i < extra; ++i) {
    if (pos >= s.size() || (static_cast<unsigned char>(s[pos]) & 0xC0) != 0x80) return kInvalid;
    cp = (cp << 6) | (static_cast<unsigned char>(s[pos++]) & 0x3F);
  }
  return cp;
}

// Rough "is this a letter in some script" test for non-ASCII code points:
// excludes punctuation/symbol blocks, private use, variation selectors, and
// the emoji planes.
bool is_non_ascii_letter(char32_t cp) {
  if (cp < 0xC0 || cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xE000 && cp <= 0xF8FF) return false;
  if (cp >= 0xFE00 && cp <= 0xFE0F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF20) return false;
  if (cp >= 0x1F000) return false;
  return true;
}

bool is_allowed_ascii(char c) {
  if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) return true;
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case '\'':
    case '"': case '(': case ')': case '-': case '_': case '/':
      return true;
    default:
      return false;
  }
}

const std::regex& url_pattern() {
  static const std::regex re(R"([a-z][a-z0-9+.\-]*://\S*|www\.\S*)", std::regex::optimize);
  return re;
}

constexpr std::array<std::string_view, 50> kFunctionWords = {
    "the",  "be",    "to",   "of",    "and",   "a",     "in",   "that", "have", "i",
    "it",   "for",   "not",  "on",    "with",  "he",    "as",   "you",  "do",   "at",
    "this", "but",   "his",  "by",    "from",  "they",  "we",   "is",   "her",  "she",
    "or",   "an",    "will", "my",    "are",   "all",   "would", "there", "their", "what",
    "so",   "up",    "out",  "if",    "about", "who",   "was",  "which", "when", "me",
};

}  // namespace

std::string normalize_text(std::string_view raw) {
  // Lowercase ASCII; anything else (emoji, other scripts, control and
  // malformed bytes) becomes a separator.
  std::string ascii;
  ascii.reserve(raw.size());
  for (std::size_t pos = 0; pos < raw.size();) {
    const char32_t cp = next_code_point(raw, pos);
    if (cp < 0x80 && cp >= 0x20 && cp != 0x7F) {
      char c = static_cast<char>(cp);
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      ascii += c;
    } else {
      ascii += ' ';
    }
  }

  const std::string no_urls = std::regex_replace(ascii, url_pattern(), " ");

  std::string out;
  out.reserve(no_urls.size());
  bool pending_space = false;
  for (char c : no_urls) {
    if (!is_allowed_ascii(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::optional<std::string> clean_text(std::string_view raw, std::size_t min_len) {
  std::string cleaned = normalize_text(raw);
  if (cleaned.size() < min_len) return std::nullopt;
  return cleaned;
}

std::span<const std::string_view> function_words() { return kFunctionWords; }

bool is_english(std::string_view text) {
  static const std::unordered_set<std::string_view> words(kFunctionWords.begin(),
                                                          kFunctionWords.end());
  std::size_t ascii_letters = 0;
  std::size_t other_letters = 0;
  bool has_function_word = false;
  std::string token;
  auto flush = [&] {
    if (!token.empty() && words.contains(token)) has_function_word = true;
    token.clear();
  };
  for (std::size_t pos = 0; pos < text.size();) {
    const char32_t cp = next_code_point(text, pos);
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) {
      ++ascii_letters;
      token += static_cast<char>(cp | 0x20);
    } else {
      if (cp != kInvalid && is_non_ascii_letter(cp)) ++other_letters;
      flush();
    }
  }
  flush();
  const std::size_t letters = ascii_letters + other_letters;
  if (letters == 0) return false;
  return static_cast<double>(ascii_letters) >= 0.9 * static_cast<double>(letters) &&
         has_function_word;
}

std::uint64_t content_hash(const IssueRecord& record) {
  return fnv1a64(normalize_text(record.text()));
}

std::vector<IssueRecord> deduplicate(std::span<const IssueRecord> records) {
  std::unordered_set<std::uint64_t> seen;
  std::vector<IssueRecord> out;
  for (const auto& r : records) {
    if (seen.insert(content_hash(r)).second) out.push_back(r);
  }
  return out;
}

CleanResult clean_corpus(std::span<const IssueRecord> records, std::size_t min_len) {
  CleanResult result;
  result.stats.input = records.size();
  std::unordered_set<std::uint64_t> seen;
  for (const auto& r : records) {
    if (!is_english(r.text())) {
      ++result.stats.non_english;
      continue;
    }
    const std::string joined = normalize_text(r.text());
    if (joined.size() < min_len || joined.empty()) {
      ++result.stats.too_short;
      continue;
    }
    if (!seen.insert(fnv1a64(joined)).second) {
      ++result.stats.duplicates;
      continue;
    }
    IssueRecord cleaned = r;
    cleaned.title = normalize_text(r.title);
    cleaned.body = normalize_text(r.body);
    result.records.push_back(std::move(cleaned));
  }
  result.stats.kept = result.records.size();
  return result;
}

std::vector<LabeledExample> build_binary_dataset(std::span<const IssueRecord> records,
                                                 Quality quality, std::uint64_t seed,
                                                 std::size_t min_len) {
  std::vector<LabeledExample> positives;
  std::vector<LabeledExample> pool;
  for (const auto& r : records) {
    const QualitySet qualities = ingest::match_quality_labels(r.labels);
    if (qualities.empty()) continue;
    auto text = clean_text(r.text(), min_len);
    if (!text) continue;
    LabeledExample ex{std::move(*text), quality, 0, r.repo, r.id};
    if (qualities.contains(quality)) {
      ex.label = 1;
      positives.push_back(std::move(ex));
    } else {
      pool.push_back(std::move(ex));
    }
  }
  const std::string name(to_string(quality));
  if (positives.empty()) throw DataError("no positive examples for quality '" + name + "'");
  if (pool.empty()) throw DataError("no negative candidates for quality '" + name + "'");

  SeededRng rng(seed);
  if (pool.size() < positives.size()) positives = rng.sample(positives, pool.size());
  std::vector<LabeledExample> out = std::move(positives);
  std::vector<LabeledExample> negatives = rng.sample(pool, out.size());
  out.insert(out.end(), std::make_move_iterator(negatives.begin()),
             std::make_move_iterator(negatives.end()));
  rng.shuffle(out);
  return out;
}

std::vector<Fold> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("k must be at least 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.empty()) throw DataError("cannot stratify an empty dataset");
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw DataError("cannot stratify: class " + std::to_string(label) + " has " +
                      std::to_string(members.size()) + " members, fewer than k=" +
                      std::to_string(k));
    }
  }

  SeededRng rng(seed);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  // Deal each shuffled class round-robin, continuing where the previous
  // class stopped, so fold sizes also stay within one of each other.
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(members);
    for (std::size_t idx : members) {
      folds[next % folds.size()].push_back(idx);
      ++next;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<Fold> stratified_kfold(std::span<const LabeledExample> examples, int k,
                                   std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& ex : examples) labels.push_back(ex.label);
  return stratified_kfold(labels, k, seed);
}

namespace {

std::string top_repo(const std::map<std::string, std::size_t>& positives_per_repo,
                     Quality quality) {
  if (positives_per_repo.size() < 2) {
    throw DataError("leave-one-out needs positives for '" + std::string(to_string(quality)) +
                    "' in at least 2 repositories");
  }
  // std::map iterates repos lexicographically, so strict '>' keeps the
  // first name among equal counts.
  auto best = positives_per_repo.begin();
  for (auto it = positives_per_repo.begin(); it != positives_per_repo.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

}  // namespace

LeaveOneOut leave_one_out_split(std::span<const IssueRecord> records, Quality quality) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    if (ingest::match_quality_labels(r.labels).contains(quality)) ++counts[r.repo];
  }
  LeaveOneOut out;
  out.held_out_repo = top_repo(counts, quality);
  for (const auto& r : records) {
    (r.repo == out.held_out_repo ? out.held_out : out.train).push_back(r);
  }
  return out;
}

json to_json(const SplitManifest& m) {
  json j = {
      {"seed", m.seed},
      {"k", m.k},
      {"train_ids", m.train_ids},
      {"test_ids", m.test_ids},
      {"folds", m.folds},
  };
  if (m.held_out_repo) j["held_out_repo"] = *m.held_out_repo;
  return j;
}

SplitManifest manifest_from_json(const json& j) {
  SplitManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.k = j.at("k").get<int>();
  m.train_ids = j.at("train_ids").get<std::vector<std::string>>();
  m.test_ids = j.at("test_ids").get<std::vector<std::string>>();
  m.folds = j.value("folds", std::vector<Fold>{});
  if (j.contains("held_out_repo")) m.held_out_repo = j["held_out_repo"].get<std::string>();
  return m;
}

namespace {

void fill_folds(SplitManifest& m, std::span<const LabeledExample> train, int k,
                std::uint64_t seed) {
  m.k = k;
  if (k == 0) return;
  m.folds = stratified_kfold(train, k, derive_seed(seed, 1));
}

}  // namespace

SplitManifest holdout_split(std::span<const LabeledExample> examples, double test_fraction, int k,
                            std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test fraction must be in (0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < examples.size(); ++i) by_class[examples[i].label].push_back(i);

  SeededRng rng(derive_seed(seed, 0));
  std::vector<bool> in_test(examples.size(), false);
  for (auto& [label, members] : by_class) {
    rng.shuffle(members);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < n_test; ++i) in_test[members[i]] = true;
  }

  SplitManifest m;
  m.seed = seed;
  std::vector<LabeledExample> train;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (in_test[i]) {
      m.test_ids.push_back(examples[i].source_id);
    } else {
      m.train_ids.push_back(examples[i].source_id);
      train.push_back(examples[i]);
    }
  }
  fill_folds(m, train, k, seed);
  return m;
}

SplitManifest leave_one_out_manifest(std::span<const LabeledExample> examples, Quality quality,
                                     int k, std::uint64_t seed) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : examples) {
    if (ex.quality == quality && ex.label == 1) ++counts[ex.source_repo];
  }
  SplitManifest m;
  m.seed = seed;
  m.held_out_repo = top_repo(counts, quality);
  std::vector<LabeledExample> train;
  for (const auto& ex : examples) {
    if (ex.source_repo == *m.held_out_repo) {
      m.test_ids.push_back(ex.source_id);
    } else {
      m.train_ids.push_back(ex.source_id);
      train.push_back(ex);
    }
  }
  fill_folds(m, train, k, seed);
  return m;
}

}  // namespace qtag::corpus
