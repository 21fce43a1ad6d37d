#include "qualitagger/pipeline.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

#include "qualitagger/analyze.hpp"
#include "qualitagger/backend.hpp"
#include "qualitagger/error.hpp"
#include "qualitagger/ingest.hpp"
#include "qualitagger/metrics.hpp"
#include "qualitagger/multiclass.hpp"
#include "qualitagger/stub_server.hpp"
#include "qualitagger/util.hpp"

namespace qtag::pipeline {

using nlohmann::json;

void emit(const Path& out, std::string_view content) {
  if (out == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  write_file(out, content);
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, std::string_view stage) {
  if (!seed) throw UsageError(std::string(stage) + " is randomized: --seed is required");
  return *seed;
}

namespace {

std::string read_input(const Path& path) {
  if (!std::filesystem::exists(path)) throw DataError("input file '" + path.string() + "' not found");
  return read_file(path);
}

std::vector<json> read_json_lines(const Path& path) {
  const std::string text = read_input(path);
  std::vector<json> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    try {
      json j = json::parse(line);
      if (!j.is_object()) throw DataError("expected a JSON object");
      out.push_back(std::move(j));
    } catch (const std::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

json stats_json(const corpus::CleanStats& s) {
  return {{"input", s.input},
          {"duplicates", s.duplicates},
          {"non_english", s.non_english},
          {"too_short", s.too_short},
          {"kept", s.kept}};
}

}  // namespace

json mine(const MineOptions& o) {
  if (o.inputs.empty()) throw UsageError("mine needs at least one input archive");
  std::vector<ingest::IssueRecord> all;
  std::size_t lines = 0, skipped = 0, ignored = 0;
  for (const auto& path : o.inputs) {
    auto parsed = ingest::parse_event_stream(read_input(path));
    lines += parsed.lines;
    skipped += parsed.skipped;
    ignored += parsed.ignored;
    for (auto& r : parsed.records) all.push_back(std::move(r));
  }
  const std::size_t events = all.size();
  auto merged = ingest::merge_latest(std::move(all));
  emit(o.out, ingest::write_issues_jsonl(merged));
  return {{"lines", lines},     {"skipped", skipped},       {"ignored", ignored},
          {"events", events},   {"issues", merged.size()}};
}

json clean(const CleanOptions& o) {
  const auto records = ingest::read_issues_jsonl(read_input(o.input));
  const auto result = corpus::clean_corpus(records, o.min_len);
  emit(o.out, ingest::write_issues_jsonl(result.records));
  return stats_json(result.stats);
}

json build_dataset(const BuildDatasetOptions& o) {
  const std::uint64_t seed = require_seed(o.seed, "build-dataset");
  const auto records = ingest::read_issues_jsonl(read_input(o.input));
  const auto examples = corpus::build_binary_dataset(records, o.quality, seed, o.min_len);
  emit(o.out, corpus::write_dataset_jsonl(examples));
  std::size_t positives = 0;
  for (const auto& ex : examples) positives += ex.label == 1;
  return {{"quality", to_string(o.quality)},
          {"examples", examples.size()},
          {"positives", positives},
          {"negatives", examples.size() - positives}};
}

namespace {

Quality dataset_quality(std::span<const corpus::LabeledExample> examples) {
  if (examples.empty()) throw DataError("dataset is empty");
  const Quality q = examples.front().quality;
  for (const auto& ex : examples) {
    if (ex.quality != q) throw DataError("dataset mixes several qualities");
  }
  return q;
}

}  // namespace

json split(const SplitOptions& o) {
  const std::uint64_t seed = require_seed(o.seed, "split");
  if (o.k == 1 || o.k < 0) throw UsageError("--k must be 0 (no folds) or at least 2");
  const auto examples = corpus::read_dataset_jsonl(read_input(o.input));
  const Quality q = dataset_quality(examples);
  const corpus::SplitManifest m = o.leave_one_out
                                      ? corpus::leave_one_out_manifest(examples, q, o.k, seed)
                                      : corpus::holdout_split(examples, o.test_fraction, o.k, seed);
  emit(o.out, corpus::to_json(m).dump(2) + "\n");
  json summary = {{"train", m.train_ids.size()}, {"test", m.test_ids.size()}, {"folds", m.folds.size()}};
  if (m.held_out_repo) summary["held_out_repo"] = *m.held_out_repo;
  return summary;
}

namespace {

// Keeps the examples named by ids, in the order of ids.
template <typename T, typename IdFn>
std::vector<T> select_ids(const std::vector<T>& items, const std::vector<std::string>& ids,
                          IdFn id_of) {
  std::map<std::string, const T*> by_id;
  for (const auto& item : items) by_id.emplace(id_of(item), &item);
  std::vector<T> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("manifest id '" + id + "' is not in the training input");
    out.push_back(*it->second);
  }
  return out;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& items, const std::vector<std::size_t>& positions) {
  std::vector<T> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(items.at(p));
  return out;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::vector<std::size_t>>& folds,
                                    std::size_t skip) {
  std::vector<bool> held(n, false);
  for (std::size_t p : folds[skip]) held[p] = true;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!held[i]) out.push_back(i);
  }
  return out;
}

json mean_of(const std::vector<json>& rows, std::initializer_list<const char*> keys) {
  json mean = json::object();
  for (const char* k : keys) {
    double sum = 0.0;
    for (const auto& r : rows) sum += r.at(k).get<double>();
    mean[k] = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
  }
  return mean;
}

json train_binary_stage(const TrainOptions& o, classify::TrainConfig config,
                        const std::optional<corpus::SplitManifest>& manifest) {
  auto examples = corpus::read_dataset_jsonl(read_input(o.input));
  if (manifest) {
    examples = select_ids(examples, manifest->train_ids,
                          [](const corpus::LabeledExample& ex) { return ex.source_id; });
  }
  const Quality q = dataset_quality(examples);
  auto model = classify::train_binary(examples, config, o.feature_dim);
  model.quality = q;
  classify::save(model, o.out);
  json summary = {{"quality", to_string(q)}, {"examples", examples.size()}};
  if (!o.cross_validate) return summary;

  std::vector<corpus::Fold> folds;
  if (manifest && !manifest->folds.empty()) {
    folds = manifest->folds;
  } else {
    folds = corpus::stratified_kfold(examples, o.k, derive_seed(config.seed, 2));
  }
  std::vector<json> rows;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train_part = pick(examples, complement(examples.size(), folds, f));
    const auto test_part = pick(examples, folds[f]);
    const auto fold_model = classify::train_binary(train_part, config, o.feature_dim);
    std::vector<double> scores;
    std::vector<int> truths;
    for (const auto& ex : test_part) {
      scores.push_back(classify::predict_score(fold_model, ex.text));
      truths.push_back(ex.label);
    }
    json row = evalstat::to_json(evalstat::evaluate_binary(scores, truths, o.threshold));
    row["fold"] = f;
    rows.push_back(row);
  }
  json report = {{"quality", to_string(q)},
                 {"k", folds.size()},
                 {"folds", rows},
                 {"mean", mean_of(rows, {"precision", "recall", "accuracy", "f1", "mcc", "auc"})}};
  const Path report_path = o.cv_report ? *o.cv_report : Path(o.out.string() + ".cv.json");
  emit(report_path, report.dump(2) + "\n");
  summary["cv_mean_f1"] = report["mean"]["f1"];
  return summary;
}

json train_multiclass_stage(const TrainOptions& o, classify::TrainConfig config,
                            const std::optional<corpus::SplitManifest>& manifest) {
  auto records = ingest::read_issues_jsonl(read_input(o.input));
  if (manifest) {
    records = select_ids(records, manifest->train_ids,
                         [](const ingest::IssueRecord& r) { return r.id; });
  }
  std::vector<classify::MulticlassExample> examples;
  for (const auto& r : records) {
    auto label = classify::multiclass_label(ingest::match_quality_labels(r.labels));
    if (!label) continue;
    examples.push_back({corpus::normalize_text(r.text()), *label});
  }
  const auto model = classify::train_multiclass(examples, config, o.feature_dim);
  classify::save(model, o.out);
  json summary = {{"kind", "multiclass"}, {"examples", examples.size()}};
  if (!o.cross_validate) return summary;

  std::vector<int> labels;
  for (const auto& ex : examples) labels.push_back(static_cast<int>(index_of(ex.quality)));
  const auto folds = corpus::stratified_kfold(labels, o.k, derive_seed(config.seed, 2));
  std::vector<json> rows;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train_part = pick(examples, complement(examples.size(), folds, f));
    const auto fold_model = classify::train_multiclass(train_part, config, o.feature_dim);
    std::size_t correct = 0;
    for (std::size_t p : folds[f]) {
      correct += classify::predict_multiclass(fold_model, examples[p].text).quality ==
                 examples[p].quality;
    }
    rows.push_back({{"fold", f},
                    {"n", folds[f].size()},
                    {"accuracy", static_cast<double>(correct) /
                                     static_cast<double>(std::max<std::size_t>(1, folds[f].size()))}});
  }
  json report = {{"kind", "multiclass"}, {"k", folds.size()}, {"folds", rows},
                 {"mean", mean_of(rows, {"accuracy"})}};
  const Path report_path = o.cv_report ? *o.cv_report : Path(o.out.string() + ".cv.json");
  emit(report_path, report.dump(2) + "\n");
  summary["cv_mean_accuracy"] = report["mean"]["accuracy"];
  return summary;
}

}  // namespace

json train(const TrainOptions& o) {
  classify::TrainConfig config = o.config;
  config.seed = require_seed(o.seed, "train");
  classify::validate(config);
  if (o.cross_validate && o.k < 2) throw UsageError("--k must be at least 2 for cross-validation");
  std::optional<corpus::SplitManifest> manifest;
  if (o.manifest) {
    try {
      manifest = corpus::manifest_from_json(json::parse(read_input(*o.manifest)));
    } catch (const json::exception& e) {
      throw DataError("manifest '" + o.manifest->string() + "': " + e.what());
    }
  }
  return o.multiclass ? train_multiclass_stage(o, config, manifest)
                      : train_binary_stage(o, config, manifest);
}

json tag(const TagOptions& o) {
  classify::validate_threshold(o.threshold);
  std::optional<std::string> url = o.backend_url;
  if (!url && !o.model_dir) {
    if (const char* env = std::getenv(std::string(kBackendUrlEnv).c_str()); env && *env) {
      url = env;
    }
  }
  if (o.model_dir && url) throw UsageError("give either --model-dir or --backend-url, not both");
  if (!o.model_dir && !url) {
    throw UsageError("tag needs --model-dir or --backend-url (or " + std::string(kBackendUrlEnv) + ")");
  }
  const auto ensemble = o.model_dir
                            ? classify::load_ensemble(*o.model_dir, o.threshold)
                            : classify::remote_ensemble(classify::Endpoint::parse(*url), o.threshold);
  std::vector<ingest::LabelRule> rules;
  if (o.rules) rules = ingest::parse_rules(read_input(*o.rules));
  const auto records = ingest::read_issues_jsonl(read_input(o.input));
  const auto tags = classify::tag_issues(ensemble, records, rules);
  std::string out;
  std::size_t failed = 0, tagged = 0;
  for (const auto& t : tags) {
    out += classify::to_json(t).dump();
    out += '\n';
    failed += !t.ok();
    tagged += !t.predicted.empty();
  }
  emit(o.out, out);
  return {{"issues", tags.size()}, {"tagged", tagged}, {"failed", failed}};
}

namespace {

// One line of a predictions or truth file. Field spellings from the tagger,
// dataset, and issue formats are all accepted.
struct Row {
  std::string id;
  std::optional<double> score;
  std::optional<QualitySet> pred_set;
  std::optional<std::array<std::optional<double>, kQualityCount>> scores;
  std::optional<int> truth;
  std::optional<Quality> truth_quality;  // quality a dataset label refers to
  std::optional<QualitySet> truth_set;
};

QualitySet parse_set(const json& arr, std::string_view field) {
  if (!arr.is_array()) throw DataError(std::string(field) + " must be an array");
  QualitySet s;
  for (const auto& v : arr) {
    const std::string name = v.get<std::string>();
    auto q = parse_quality(name);
    if (!q) throw DataError("unknown quality '" + name + "' in " + std::string(field));
    s.insert(*q);
  }
  return s;
}

int parse_truth(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d != 0.0 && d != 1.0) throw DataError("truth values must be 0 or 1");
    return d == 1.0 ? 1 : 0;
  }
  throw DataError("truth must be 0/1 or a boolean");
}

Row parse_row(const json& j) {
  Row r;
  for (const char* key : {"id", "issue_id", "source_id"}) {
    if (j.contains(key)) {
      r.id = j[key].get<std::string>();
      break;
    }
  }
  if (r.id.empty()) throw DataError("record without id, issue_id or source_id");
  if (j.contains("score")) {
    r.score = j["score"].get<double>();
    if (!(*r.score >= 0.0 && *r.score <= 1.0)) throw DataError("score outside [0, 1] for " + r.id);
  }
  if (j.contains("pred_set")) r.pred_set = parse_set(j["pred_set"], "pred_set");
  else if (j.contains("predicted")) r.pred_set = parse_set(j["predicted"], "predicted");
  if (j.contains("scores") && j["scores"].is_object()) {
    std::array<std::optional<double>, kQualityCount> s{};
    for (const auto& [name, v] : j["scores"].items()) {
      auto q = parse_quality(name);
      if (!q) throw DataError("unknown quality '" + name + "' in scores");
      if (v.is_number()) s[index_of(*q)] = v.get<double>();
    }
    r.scores = s;
  }
  if (j.contains("truth")) r.truth = parse_truth(j["truth"]);
  else if (j.contains("label") && j["label"].is_number()) r.truth = parse_truth(j["label"]);
  if (j.contains("quality") && j["quality"].is_string()) {
    r.truth_quality = parse_quality(j["quality"].get<std::string>());
  }
  if (j.contains("true_set")) r.truth_set = parse_set(j["true_set"], "true_set");
  else if (j.contains("labels") && j["labels"].is_array()) {
    r.truth_set = ingest::match_quality_labels(j["labels"].get<std::vector<std::string>>());
  }
  return r;
}

std::vector<Row> read_rows(const Path& path) {
  std::vector<Row> rows;
  for (const auto& j : read_json_lines(path)) rows.push_back(parse_row(j));
  if (rows.empty()) throw DataError("'" + path.string() + "' holds no records");
  return rows;
}

double binary_score(const Row& r, std::optional<Quality> q) {
  if (r.score) return *r.score;
  if (q && r.scores && (*r.scores)[index_of(*q)]) return *(*r.scores)[index_of(*q)];
  if (q && r.pred_set) return r.pred_set->contains(*q) ? 1.0 : 0.0;
  throw DataError("no usable prediction for " + r.id +
                  (q ? " and quality " + std::string(to_string(*q)) : std::string(" (pass --quality)")));
}

QualitySet predicted_set(const Row& r, double threshold) {
  if (r.pred_set) return *r.pred_set;
  if (r.scores) return classify::threshold_set(*r.scores, threshold);
  throw DataError("no predicted set for " + r.id);
}

int binary_truth(const Row& r, std::optional<Quality> q) {
  if (r.truth) {
    if (q && r.truth_quality && *r.truth_quality != *q) {
      throw DataError("truth for " + r.id + " refers to " + std::string(to_string(*r.truth_quality)));
    }
    return *r.truth;
  }
  if (q && r.truth_set) return r.truth_set->contains(*q) ? 1 : 0;
  throw DataError("no usable truth for " + r.id);
}

QualitySet truth_set(const Row& r) {
  if (r.truth_set) return *r.truth_set;
  throw DataError("no truth set for " + r.id);
}

// Truth rows aligned with preds: from the truth file by id, else the
// prediction rows themselves.
std::vector<Row> align_truth(const std::vector<Row>& preds, const std::optional<Path>& truth_path) {
  if (!truth_path) return preds;
  std::map<std::string, Row> by_id;
  for (auto& r : read_rows(*truth_path)) by_id.insert_or_assign(r.id, r);
  std::vector<Row> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw DataError("no truth record for " + p.id);
    out.push_back(it->second);
  }
  return out;
}

std::string render(evalstat::ReportFormat f, const json& j, const std::string& text,
                   const std::string& csv) {
  switch (f) {
    case evalstat::ReportFormat::Json: return j.dump(2) + "\n";
    case evalstat::ReportFormat::Text: return text;
    case evalstat::ReportFormat::Csv: return csv;
  }
  return j.dump(2) + "\n";
}

}  // namespace

json evaluate(const EvaluateOptions& o) {
  classify::validate_threshold(o.threshold);
  const auto preds = read_rows(o.preds);
  const auto truths = align_truth(preds, o.truth);
  const bool binary = o.quality.has_value() || preds.front().score.has_value();
  if (binary) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      scores.push_back(binary_score(preds[i], o.quality));
      labels.push_back(binary_truth(truths[i], o.quality));
    }
    const auto report = evalstat::evaluate_binary(scores, labels, o.threshold);
    const std::string label = o.quality ? std::string(display_name(*o.quality)) : "model";
    json j = evalstat::to_json(report);
    if (o.quality) j["quality"] = to_string(*o.quality);
    emit(o.out, render(o.format, j, evalstat::format_text(report, label),
                       evalstat::format_csv(report, label)));
    return {{"mode", "binary"}, {"n", report.n}, {"f1", report.f1}, {"mcc", report.mcc}};
  }
  std::vector<QualitySet> predicted, truth;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    predicted.push_back(predicted_set(preds[i], o.threshold));
    truth.push_back(truth_set(truths[i]));
  }
  const auto report = evalstat::evaluate_multilabel(predicted, truth);
  emit(o.out, render(o.format, evalstat::to_json(report), evalstat::format_text(report, "ensemble"),
                     evalstat::format_csv(report, "ensemble")));
  return {{"mode", "multilabel"},
          {"n", report.n},
          {"hamming_loss", report.hamming_loss},
          {"at_least_one_match", report.at_least_one_match}};
}

json compare(const CompareOptions& o) {
  const std::uint64_t seed = require_seed(o.seed, "compare");
  classify::validate_threshold(o.threshold);
  if (o.iterations < 2) throw UsageError("--iterations must be at least 2");
  const auto preds_a = read_rows(o.preds_a);
  std::map<std::string, Row> b_by_id;
  for (auto& r : read_rows(o.preds_b)) b_by_id.insert_or_assign(r.id, r);
  std::vector<Row> preds_b;
  for (const auto& a : preds_a) {
    auto it = b_by_id.find(a.id);
    if (it == b_by_id.end()) throw DataError("model B has no prediction for " + a.id);
    preds_b.push_back(it->second);
  }
  const auto truths = align_truth(preds_a, o.truth);

  std::vector<std::optional<Quality>> targets;
  if (o.quality) targets.push_back(o.quality);
  else if (preds_a.front().score) targets.push_back(std::nullopt);
  else targets.assign(kAllQualities.begin(), kAllQualities.end());

  std::vector<evalstat::LabeledComparison> rows;
  for (const auto& q : targets) {
    std::vector<int> a, b, t;
    for (std::size_t i = 0; i < preds_a.size(); ++i) {
      a.push_back(binary_score(preds_a[i], q) >= o.threshold ? 1 : 0);
      b.push_back(binary_score(preds_b[i], q) >= o.threshold ? 1 : 0);
      t.push_back(binary_truth(truths[i], q));
    }
    rows.push_back({q ? std::string(display_name(*q)) : std::string("model"),
                    evalstat::compare_models(a, b, t, o.iterations, seed)});
  }
  json j = json::array();
  for (const auto& row : rows) {
    json r = evalstat::to_json(row.report);
    r["label"] = row.label;
    j.push_back(r);
  }
  json doc = rows.size() == 1 ? j.front() : json{{"comparisons", j}};
  emit(o.out, render(o.format, doc, evalstat::format_text(rows), evalstat::format_csv(rows)));
  json summary = json::array();
  for (const auto& row : rows) {
    summary.push_back({{"label", row.label},
                       {"mcnemar_p", row.report.mcnemar_p},
                       {"significant", row.report.bootstrap.significant}});
  }
  return {{"comparisons", summary}};
}

json analyze(const AnalyzeOptions& o) {
  auto tagged = analyze::read_tagged_jsonl(read_input(o.input));
  if (o.repo) {
    std::erase_if(tagged, [&](const analyze::TaggedIssue& t) { return t.repo != *o.repo; });
    if (tagged.empty()) throw DataError("no tagged issues for repo '" + *o.repo + "'");
  }
  auto report = analyze::analyze_all(tagged, o.total_issues);
  report.repo = o.repo;
  switch (o.format) {
    case evalstat::ReportFormat::Json:
      emit(o.out, analyze::to_json(report).dump(2) + "\n");
      break;
    case evalstat::ReportFormat::Text:
      emit(o.out, analyze::format_text(report));
      break;
    case evalstat::ReportFormat::Csv: {
      const auto tables = analyze::format_csv(report);
      if (o.out == "-") {
        std::string all;
        for (const auto& [name, csv] : tables) all += "# " + name + "\n" + csv + "\n";
        emit(o.out, all);
      } else {
        std::filesystem::create_directories(o.out);
        for (const auto& [name, csv] : tables) write_file(o.out / (name + ".csv"), csv);
      }
      break;
    }
  }
  return {{"issues", tagged.size()}, {"total_issues", report.total_issues}};
}

void serve_stub(const ServeOptions& o) {
  auto service = classify::load_model_service(o.model_dir);
  if (o.stdio) {
    service.serve_stream(std::cin, std::cout);
    return;
  }
  classify::StubServer server(std::move(service));
  const int port = server.bind(o.host, o.port);
  if (o.port_file) write_file(*o.port_file, std::to_string(port) + "\n");
  std::cerr << "serving on http://" << o.host << ':' << port << std::endl;
  server.run();
}

}  // namespace qtag::pipeline
