#include "qualitagger/analyze.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "qualitagger/error.hpp"

namespace qtag::analyze {

using nlohmann::json;

TaggedIssue tagged_from_json(const json& j) {
  TaggedIssue t;
  t.issue_id = j.at("issue_id").get<std::string>();
  t.repo = j.at("repo").get<std::string>();
  t.created_at = parse_timestamp(j.at("created_at").get<std::string>());
  if (j.contains("repo_language") && j["repo_language"].is_string()) {
    t.repo_language = j["repo_language"].get<std::string>();
  }
  for (const auto& name : j.at("predicted")) {
    const std::string s = name.get<std::string>();
    auto q = parse_quality(s);
    if (!q) throw DataError("unknown quality '" + s + "'");
    t.predicted.insert(*q);
  }
  return t;
}

std::vector<TaggedIssue> read_tagged_jsonl(std::string_view text) {
  std::vector<TaggedIssue> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    try {
      out.push_back(tagged_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError("tagged issues line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<FrequencyRow> quality_frequency(std::span<const TaggedIssue> tagged,
                                            std::size_t total_issues) {
  if (total_issues == 0) throw DataError("total issue count must be positive");
  if (total_issues < tagged.size()) {
    throw DataError("total issue count " + std::to_string(total_issues) + " is below the " +
                    std::to_string(tagged.size()) + " tagged issues scanned");
  }
  std::vector<FrequencyRow> rows;
  for (Quality q : kAllQualities) {
    const auto count = static_cast<std::size_t>(
        std::count_if(tagged.begin(), tagged.end(),
                      [q](const TaggedIssue& t) { return t.predicted.contains(q); }));
    rows.push_back({q, count, 100.0 * static_cast<double>(count) / static_cast<double>(total_issues)});
  }
  return rows;
}

double SpecificityMatrix::score(Quality a, Quality b) const {
  if (a == b) throw UsageError("specificity is defined for distinct qualities only");
  if (index_of(b) < index_of(a)) std::swap(a, b);
  for (const auto& e : entries_) {
    if (e.a == a && e.b == b) return e.score;
  }
  return 0.0;
}

SpecificityMatrix specificity_scores(std::span<const TaggedIssue> tagged) {
  std::vector<SpecificityEntry> entries;
  for (std::size_t i = 0; i < kQualityCount; ++i) {
    for (std::size_t j = i + 1; j < kQualityCount; ++j) {
      SpecificityEntry e{kAllQualities[i], kAllQualities[j]};
      for (const auto& t : tagged) {
        const bool in_a = t.predicted.contains(e.a);
        const bool in_b = t.predicted.contains(e.b);
        e.both += in_a && in_b;
        e.either += in_a || in_b;
      }
      e.score = e.either == 0 ? 0.0
                              : static_cast<double>(e.both) / static_cast<double>(e.either);
      entries.push_back(e);
    }
  }
  return SpecificityMatrix(std::move(entries));
}

namespace {

struct Periods {
  std::string month, quarter, year;
};

Periods periods_of(Timestamp t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  const int y = static_cast<int>(ymd.year());
  const unsigned m = static_cast<unsigned>(ymd.month());
  char buf[32];
  Periods p;
  std::snprintf(buf, sizeof buf, "%04d-%02u", y, m);
  p.month = buf;
  std::snprintf(buf, sizeof buf, "%04d-Q%u", y, (m - 1) / 3 + 1);
  p.quarter = buf;
  std::snprintf(buf, sizeof buf, "%04d", y);
  p.year = buf;
  return p;
}

// Zero-padded period labels sort chronologically, so the first maximum in
// map order is the earliest.
Peak busiest(const std::map<std::string, std::size_t>& buckets) {
  Peak best;
  for (const auto& [period, count] : buckets) {
    if (count > best.count) best = {period, count};
  }
  return best;
}

}  // namespace

std::vector<PeakRow> temporal_peaks(std::span<const TaggedIssue> tagged) {
  std::array<std::map<std::string, std::size_t>, kQualityCount> months, quarters, years;
  for (const auto& t : tagged) {
    if (t.predicted.empty()) continue;
    const Periods p = periods_of(t.created_at);
    for (Quality q : t.predicted.members()) {
      ++months[index_of(q)][p.month];
      ++quarters[index_of(q)][p.quarter];
      ++years[index_of(q)][p.year];
    }
  }
  std::vector<PeakRow> rows;
  for (Quality q : kAllQualities) {
    const std::size_t i = index_of(q);
    if (months[i].empty()) continue;
    rows.push_back({q, busiest(months[i]), busiest(quarters[i]), busiest(years[i])});
  }
  return rows;
}

std::vector<ImpactRow> td_impact(std::span<const TaggedIssue> tagged) {
  std::vector<ImpactRow> rows;
  std::size_t sum = 0;
  for (Quality q : kAllQualities) {
    const auto count = static_cast<std::size_t>(
        std::count_if(tagged.begin(), tagged.end(),
                      [q](const TaggedIssue& t) { return t.predicted.contains(q); }));
    rows.push_back({q, count, 0.0});
    sum += count;
  }
  if (sum == 0) throw DataError("technical-debt impact needs at least one tagged quality");
  for (auto& r : rows) r.percentage = 100.0 * static_cast<double>(r.count) / static_cast<double>(sum);
  return rows;
}

LanguageTable language_breakdown(std::span<const TaggedIssue> tagged) {
  LanguageTable table;
  for (const auto& t : tagged) {
    const std::string lang = t.repo_language ? *t.repo_language : std::string(kUnknownLanguage);
    auto& row = table[lang];
    for (Quality q : t.predicted.members()) ++row[index_of(q)];
  }
  return table;
}

AnalysisReport analyze_all(std::span<const TaggedIssue> tagged,
                           std::optional<std::size_t> total_issues) {
  AnalysisReport r;
  r.total_issues = total_issues.value_or(tagged.size());
  r.frequency = quality_frequency(tagged, r.total_issues);
  r.specificity = specificity_scores(tagged);
  r.peaks = temporal_peaks(tagged);
  const bool any = std::any_of(tagged.begin(), tagged.end(),
                               [](const TaggedIssue& t) { return !t.predicted.empty(); });
  if (any) r.impact = td_impact(tagged);
  r.languages = language_breakdown(tagged);
  return r;
}

json to_json(const AnalysisReport& r) {
  json freq = json::array();
  for (const auto& f : r.frequency) {
    freq.push_back({{"quality", to_string(f.quality)},
                    {"count", f.count},
                    {"relative_frequency", f.relative_frequency}});
  }
  json spec = json::array();
  for (const auto& e : r.specificity.entries()) {
    spec.push_back({{"pair", {to_string(e.a), to_string(e.b)}},
                    {"both", e.both},
                    {"either", e.either},
                    {"score", e.score}});
  }
  json peaks = json::array();
  for (const auto& p : r.peaks) {
    peaks.push_back({{"quality", to_string(p.quality)},
                     {"monthly", {{"period", p.monthly.period}, {"count", p.monthly.count}}},
                     {"quarterly", {{"period", p.quarterly.period}, {"count", p.quarterly.count}}},
                     {"yearly", {{"period", p.yearly.period}, {"count", p.yearly.count}}}});
  }
  json impact = json::array();
  for (const auto& i : r.impact) {
    impact.push_back({{"quality", to_string(i.quality)},
                      {"count", i.count},
                      {"percentage", i.percentage}});
  }
  json langs = json::object();
  for (const auto& [lang, counts] : r.languages) {
    json row = json::object();
    for (Quality q : kAllQualities) row[std::string(to_string(q))] = counts[index_of(q)];
    langs[lang] = row;
  }
  json j = {{"total_issues", r.total_issues}, {"frequency", freq},   {"specificity", spec},
            {"peaks", peaks},                 {"td_impact", impact}, {"languages", langs}};
  if (r.repo) j["repo"] = *r.repo;
  return j;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string format_text(const AnalysisReport& r) {
  std::ostringstream os;
  os << "Quality frequencies" << (r.repo ? " (" + *r.repo + ")" : std::string()) << ", "
     << r.total_issues << " issues scanned\n";
  os << std::left << std::setw(18) << "Quality" << std::right << std::setw(12) << "Count"
     << std::setw(16) << "Relative (%)" << "\n";
  for (const auto& f : r.frequency) {
    os << std::left << std::setw(18) << display_name(f.quality) << std::right << std::setw(12)
       << f.count << std::setw(16) << fixed(f.relative_frequency, 4) << "\n";
  }

  os << "\nSpecificity scores for label pairs\n";
  os << std::left << std::setw(32) << "Label pair" << std::right << std::setw(10) << "Score"
     << "\n";
  for (const auto& e : r.specificity.entries()) {
    const std::string pair = std::string(display_name(e.a)) + "-" + std::string(display_name(e.b));
    os << std::left << std::setw(32) << pair << std::right << std::setw(10) << fixed(e.score, 3)
       << "\n";
  }

  os << "\nPeak frequencies\n";
  os << std::left << std::setw(18) << "Label" << std::setw(10) << "Month" << std::right
     << std::setw(7) << "Count" << "  " << std::left << std::setw(9) << "Quarter" << std::right
     << std::setw(7) << "Count" << "  " << std::left << std::setw(6) << "Year" << std::right
     << std::setw(7) << "Count" << "\n";
  for (const auto& p : r.peaks) {
    os << std::left << std::setw(18) << display_name(p.quality) << std::setw(10)
       << p.monthly.period << std::right << std::setw(7) << p.monthly.count << "  " << std::left
       << std::setw(9) << p.quarterly.period << std::right << std::setw(7) << p.quarterly.count
       << "  " << std::left << std::setw(6) << p.yearly.period << std::right << std::setw(7)
       << p.yearly.count << "\n";
  }

  os << "\nQuality impact (share of all quality tags)\n";
  os << std::left << std::setw(18) << "Quality" << std::right << std::setw(12) << "Count"
     << std::setw(12) << "Percentage" << "\n";
  std::vector<ImpactRow> impact = r.impact;
  std::stable_sort(impact.begin(), impact.end(),
                   [](const ImpactRow& a, const ImpactRow& b) { return a.count > b.count; });
  for (const auto& i : impact) {
    os << std::left << std::setw(18) << display_name(i.quality) << std::right << std::setw(12)
       << i.count << std::setw(11) << fixed(i.percentage, 2) << "%\n";
  }

  os << "\nQualities by programming language\n";
  os << std::left << std::setw(14) << "Language";
  for (Quality q : kAllQualities) os << std::right << std::setw(8) << to_string(q).substr(0, 4);
  os << "\n";
  for (const auto& [lang, counts] : r.languages) {
    os << std::left << std::setw(14) << lang;
    for (Quality q : kAllQualities) os << std::right << std::setw(8) << counts[index_of(q)];
    os << "\n";
  }
  return os.str();
}

std::map<std::string, std::string> format_csv(const AnalysisReport& r) {
  std::map<std::string, std::string> out;
  {
    std::ostringstream os;
    os << "quality,count,relative_frequency\n";
    for (const auto& f : r.frequency) {
      os << to_string(f.quality) << ',' << f.count << ',' << fixed(f.relative_frequency, 4) << "\n";
    }
    out["frequency"] = os.str();
  }
  {
    std::ostringstream os;
    os << "quality_a,quality_b,both,either,score\n";
    for (const auto& e : r.specificity.entries()) {
      os << to_string(e.a) << ',' << to_string(e.b) << ',' << e.both << ',' << e.either << ','
         << fixed(e.score, 6) << "\n";
    }
    out["specificity"] = os.str();
  }
  {
    std::ostringstream os;
    os << "quality,month,month_count,quarter,quarter_count,year,year_count\n";
    for (const auto& p : r.peaks) {
      os << to_string(p.quality) << ',' << p.monthly.period << ',' << p.monthly.count << ','
         << p.quarterly.period << ',' << p.quarterly.count << ',' << p.yearly.period << ','
         << p.yearly.count << "\n";
    }
    out["peaks"] = os.str();
  }
  {
    std::ostringstream os;
    os << "quality,count,percentage\n";
    for (const auto& i : r.impact) {
      os << to_string(i.quality) << ',' << i.count << ',' << fixed(i.percentage, 4) << "\n";
    }
    out["td_impact"] = os.str();
  }
  {
    std::ostringstream os;
    os << "language";
    for (Quality q : kAllQualities) os << ',' << to_string(q);
    os << "\n";
    for (const auto& [lang, counts] : r.languages) {
      os << lang;
      for (Quality q : kAllQualities) os << ',' << counts[index_of(q)];
      os << "\n";
    }
    out["languages"] = os.str();
  }
  return out;
}

}  // namespace qtag::analyze
