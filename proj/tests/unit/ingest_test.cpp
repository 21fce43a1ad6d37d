#include <zlib.h>

#include "doctest.h"
#include "qualitagger/error.hpp"
#include "qualitagger/ingest.hpp"
#include "support/archive.hpp"

using namespace qtag;
using namespace qtag::ingest;
using nlohmann::json;

namespace {

std::string gzip(const std::string& data) {
  z_stream zs{};
  REQUIRE(deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                       Z_DEFAULT_STRATEGY) == Z_OK);
  std::string out(deflateBound(&zs, data.size()), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  REQUIRE(deflate(&zs, Z_FINISH) == Z_STREAM_END);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

std::string issue_event(const std::string& title, const json& labels,
                        const std::string& action = "opened") {
  return json{{"type", "IssuesEvent"},
              {"repo", {{"name", "acme/web"}, {"language", "Go"}}},
              {"created_at", "2020-05-01T10:00:00Z"},
              {"payload",
               {{"action", action},
                {"issue",
                 {{"number", 7}, {"title", title}, {"body", "details"}, {"labels", labels}}}}}}
      .dump();
}

IssueRecord sample_record() {
  IssueRecord r;
  r.id = "acme/web#1";
  r.repo = "acme/web";
  r.title = "Crash on save";
  r.body = "It crashes \"always\"\nwith unicode \xc3\xa9";
  r.labels = {"bug", "reliability"};
  r.created_at = parse_timestamp("2021-02-03T04:05:06Z");
  r.repo_language = "C++";
  return r;
}

}  // namespace

TEST_CASE("parse_event_stream: one well-formed issue event") {
  const auto result = parse_event_stream(issue_event("crash on save", json::array({"bug"})));
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].title == "crash on save");
  CHECK(result.records[0].labels == std::vector<std::string>{"bug"});
  CHECK(result.records[0].id == "acme/web#7");
  CHECK(result.records[0].repo_language == std::optional<std::string>("Go"));
  CHECK(result.skipped == 0);
}

TEST_CASE("parse_event_stream: truncated middle line is skipped and counted") {
  const std::string good = issue_event("a", json::array());
  const std::string text = good + "\n" + good.substr(0, good.size() / 2) + "\n" + good + "\n";
  const auto result = parse_event_stream(text);
  CHECK(result.records.size() == 2);
  CHECK(result.skipped == 1);
  CHECK(result.lines == 3);
}

TEST_CASE("parse_event_stream: synthetic archive yields exactly its issue events") {
  const auto archive = testing::synthetic_archive(10000, 7421, 99);
  CHECK(archive.issue_events == 7421);
  const auto result = parse_event_stream(archive.text);
  CHECK(result.lines == 10000);
  CHECK(result.records.size() == 7421);
  CHECK(result.ignored == archive.ignored);
  CHECK(result.skipped == archive.malformed);
}

TEST_CASE("parse_event_stream: gzip input is detected by magic bytes") {
  const auto archive = testing::synthetic_archive(500, 321, 4);
  const auto plain = parse_event_stream(archive.text);
  const auto zipped = parse_event_stream(gzip(archive.text));
  CHECK(zipped.records == plain.records);
  CHECK(zipped.records.size() == 321);
}

TEST_CASE("parse_event_stream: non-issue actions and event types are ignored") {
  const std::string text = issue_event("x", json::array(), "closed") + "\n" +
                           json{{"type", "PushEvent"}, {"payload", json::object()}}.dump() + "\n";
  const auto result = parse_event_stream(text);
  CHECK(result.records.empty());
  CHECK(result.ignored == 2);
  CHECK(result.skipped == 0);
}

TEST_CASE("parse_event_stream: label named in a labeled payload is merged") {
  json ev = json::parse(issue_event("x", json::array({"bug"}), "labeled"));
  ev["payload"]["label"] = {{"name", "security"}};
  const auto result = parse_event_stream(ev.dump());
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].labels == std::vector<std::string>{"bug", "security"});
}

TEST_CASE("parse_event_stream: simplified issue schema is accepted") {
  const auto r = sample_record();
  const auto result = parse_event_stream(to_json(r).dump());
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0] == r);
}

TEST_CASE("parse_event_stream: empty input is an empty result") {
  const auto result = parse_event_stream("");
  CHECK(result.records.empty());
  CHECK(result.lines == 0);
}

TEST_CASE("merge_latest keeps the last event per id ordered by repo and id") {
  IssueRecord a = sample_record();
  IssueRecord b = a;
  b.labels = {"bug", "security"};
  IssueRecord c = a;
  c.repo = "aaa/first";
  c.id = "aaa/first#3";
  const auto merged = merge_latest({a, c, b});
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].id == "aaa/first#3");
  CHECK(merged[1].labels == b.labels);
}

TEST_CASE("issue records round-trip through JSONL") {
  const std::vector<IssueRecord> records = {sample_record()};
  const auto back = read_issues_jsonl(write_issues_jsonl(records));
  CHECK(back == records);
  IssueRecord no_lang = sample_record();
  no_lang.repo_language.reset();
  CHECK(issue_from_json(to_json(no_lang)) == no_lang);
}

TEST_CASE("issue validation rejects bad ids and repos") {
  IssueRecord r = sample_record();
  r.id.clear();
  CHECK_THROWS_AS(validate(r), DataError);
  r = sample_record();
  r.repo = "no-slash";
  CHECK_THROWS_AS(validate(r), DataError);
  r.repo = "a/b/c";
  CHECK_THROWS_AS(validate(r), DataError);
  CHECK_THROWS_AS(read_issues_jsonl("{\"id\":\"x\"}\n"), DataError);
}

TEST_CASE("match_quality_labels: stems from the label table") {
  CHECK(match_quality_labels(std::vector<std::string>{"security-vulnerability"}) ==
        QualitySet{Quality::Security});
  CHECK(match_quality_labels(std::vector<std::string>{"bug", "help wanted"}).empty());
  CHECK(match_quality_labels(
            std::vector<std::string>{"Usability", "performance-regression", "scalability"}) ==
        QualitySet{Quality::Usability, Quality::Performance});
  CHECK(match_quality_labels(std::vector<std::string>{"high-performance"}) ==
        QualitySet{Quality::Performance});
  CHECK(match_quality_labels(std::vector<std::string>{}).empty());
}

TEST_CASE("match_quality_labels: any suffix after a stem still matches") {
  SeededRng rng(31);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz-_ 0123456789";
  for (const auto& s : label_stems()) {
    for (int i = 0; i < 50; ++i) {
      std::string suffix;
      const auto len = rng.below(12);
      for (std::uint64_t k = 0; k < len; ++k) suffix += alphabet[rng.below(alphabet.size())];
      const std::vector<std::string> labels = {std::string(s.stem) + suffix};
      CHECK(match_quality_labels(labels).contains(s.quality));
    }
  }
}

TEST_CASE("match_quality_labels is idempotent and order-insensitive") {
  std::vector<std::string> labels = {"Compatibility", "bug", "Portability issue", "reliable"};
  const QualitySet once = match_quality_labels(labels);
  std::vector<std::string> doubled = labels;
  doubled.insert(doubled.end(), labels.begin(), labels.end());
  CHECK(match_quality_labels(doubled) == once);
  std::reverse(labels.begin(), labels.end());
  CHECK(match_quality_labels(labels) == once);
}

TEST_CASE("apply_rules: scrub and force on the same phrase") {
  IssueRecord r = sample_record();
  r.body = "Snyk found CVE-2023-1";
  const std::vector<LabelRule> rules = {LabelRule::scrub("Snyk"),
                                        LabelRule::force("Snyk", Quality::Security)};
  const auto out = apply_rules(r, rules);
  CHECK(out.record.body == "found CVE-2023-1");
  CHECK(out.forced == QualitySet{Quality::Security});
}

TEST_CASE("apply_rules: empty rule list is the identity") {
  const IssueRecord r = sample_record();
  const auto out = apply_rules(r, {});
  CHECK(out.record == r);
  CHECK(out.forced.empty());
}

TEST_CASE("apply_rules: case-insensitive removal of every occurrence") {
  IssueRecord r = sample_record();
  r.body = "aikido AIKIDO aikido";
  const std::vector<LabelRule> rules = {LabelRule::scrub("aikido")};
  CHECK(apply_rules(r, rules).record.body.empty());
}

TEST_CASE("apply_rules: scrub rules leave identity fields alone") {
  const IssueRecord r = sample_record();
  const std::vector<LabelRule> rules = {LabelRule::scrub("crash"), LabelRule::scrub("with")};
  const auto out = apply_rules(r, rules).record;
  CHECK(out.id == r.id);
  CHECK(out.repo == r.repo);
  CHECK(out.labels == r.labels);
  CHECK(out.created_at == r.created_at);
  CHECK(out.title == "on save");
}

TEST_CASE("rules parse from JSONL and are validated") {
  const auto rules = parse_rules(
      "{\"kind\":\"scrub-phrase\",\"pattern\":\"Snyk\"}\n"
      "{\"kind\":\"force-tag\",\"pattern\":\"snyk\",\"target\":\"security\"}\n");
  REQUIRE(rules.size() == 2);
  CHECK(rules[0].kind == RuleKind::ScrubPhrase);
  CHECK(rules[1].target == Quality::Security);
  CHECK_THROWS_AS(parse_rules("{\"kind\":\"force-tag\",\"pattern\":\"x\"}\n"), DataError);
  CHECK_THROWS_AS(parse_rules("{\"kind\":\"scrub-phrase\",\"pattern\":\"\"}\n"), DataError);
  CHECK_THROWS_AS(validate(LabelRule{RuleKind::ForceTag, "x", std::nullopt}), UsageError);
  CHECK_THROWS_AS(validate(LabelRule{RuleKind::ScrubPhrase, "x", Quality::Security}), UsageError);
}
