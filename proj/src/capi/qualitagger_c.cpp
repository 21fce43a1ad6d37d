#include "qualitagger/qualitagger.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "qualitagger/backend.hpp"
#include "qualitagger/binary_model.hpp"
#include "qualitagger/compare.hpp"
#include "qualitagger/corpus.hpp"
#include "qualitagger/ensemble.hpp"
#include "qualitagger/error.hpp"
#include "qualitagger/ingest.hpp"
#include "qualitagger/metrics.hpp"
#include "qualitagger/pipeline.hpp"
#include "qualitagger/stub_server.hpp"

using namespace qtag;

struct qt_model {
  classify::BinaryModel model;
};

struct qt_backend {
  classify::RemoteBackend backend;
};

struct qt_ensemble {
  classify::EnsembleModel ensemble;
};

struct qt_stub_server {
  std::unique_ptr<classify::StubServer> server;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
qt_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return QT_OK;
  } catch (const UsageError& e) {
    g_last_error = e.what();
    return QT_ERR_USAGE;
  } catch (const DataError& e) {
    g_last_error = e.what();
    return QT_ERR_DATA;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return QT_ERR_IO;
  } catch (const BackendError& e) {
    g_last_error = e.what();
    return QT_ERR_BACKEND;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return QT_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) throw UsageError(std::string(what) + " must not be NULL");
}

std::string str(const char* s, const char* what) {
  need(s, what);
  return s;
}

std::optional<std::string> opt(const char* s) {
  if (!s || !*s) return std::nullopt;
  return std::string(s);
}

Quality quality_arg(const char* name) {
  const std::string s = str(name, "quality");
  auto q = parse_quality(s);
  if (!q) throw UsageError("unknown quality '" + s + "'");
  return *q;
}

std::optional<std::uint64_t> seed_arg(int has_seed, std::uint64_t seed) {
  if (!has_seed) return std::nullopt;
  return seed;
}

evalstat::ReportFormat format_arg(const char* f) {
  return evalstat::parse_report_format(f ? f : "json");
}

void give_summary(const nlohmann::json& summary, char** out) {
  if (out) *out = dup_string(summary.dump());
}

qt_magnitude to_c(evalstat::Magnitude m) {
  return static_cast<qt_magnitude>(static_cast<int>(m));
}

}  // namespace

extern "C" {

const char* qt_version(void) { return "0.1.0"; }
const char* qt_last_error(void) { return g_last_error.c_str(); }
void qt_string_free(char* s) { std::free(s); }

const char* qt_quality_name(int index) {
  if (index < 0 || index >= static_cast<int>(kQualityCount)) return nullptr;
  return to_string(kAllQualities[static_cast<std::size_t>(index)]).data();
}

qt_status qt_quality_parse(const char* name, int* out_index) {
  return guarded([&] {
    need(out_index, "out_index");
    *out_index = static_cast<int>(index_of(quality_arg(name)));
  });
}

qt_status qt_match_quality_labels(const char* const* labels, size_t n, uint8_t* out_bits) {
  return guarded([&] {
    need(out_bits, "out_bits");
    if (n > 0) need(labels, "labels");
    std::vector<std::string> v;
    for (size_t i = 0; i < n; ++i) v.push_back(str(labels[i], "label"));
    *out_bits = ingest::match_quality_labels(v).bits();
  });
}

qt_status qt_clean_text(const char* raw, size_t min_len, char** out) {
  return guarded([&] {
    need(out, "out");
    auto cleaned = corpus::clean_text(str(raw, "raw"), min_len);
    *out = cleaned ? dup_string(*cleaned) : nullptr;
  });
}

int qt_is_english(const char* text) { return text && corpus::is_english(text) ? 1 : 0; }

qt_status qt_evaluate_binary(const double* scores, const int* truths, size_t n, double threshold,
                             qt_binary_report* out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) {
      need(scores, "scores");
      need(truths, "truths");
    }
    const auto r = evalstat::evaluate_binary(std::span<const double>(scores, n),
                                             std::span<const int>(truths, n), threshold);
    *out = {r.precision, r.recall, r.accuracy, r.f1, r.mcc, r.auc,
            r.counts.tp, r.counts.fp, r.counts.tn, r.counts.fn, r.n};
  });
}

qt_status qt_mcnemar_exact(uint64_t b, uint64_t c, double* out_p) {
  return guarded([&] {
    need(out_p, "out_p");
    *out_p = evalstat::mcnemar_exact(b, c);
  });
}

qt_status qt_cliffs_delta(const double* xs, size_t nx, const double* ys, size_t ny,
                          double* out_delta, qt_magnitude* out_magnitude) {
  return guarded([&] {
    need(out_delta, "out_delta");
    if (nx > 0) need(xs, "xs");
    if (ny > 0) need(ys, "ys");
    const auto d = evalstat::cliffs_delta(std::span<const double>(xs, nx),
                                          std::span<const double>(ys, ny));
    *out_delta = d.delta;
    if (out_magnitude) *out_magnitude = to_c(d.magnitude);
  });
}

qt_magnitude qt_delta_magnitude(double delta) { return to_c(evalstat::magnitude(delta)); }

char qt_magnitude_letter(qt_magnitude m) {
  return evalstat::letter(static_cast<evalstat::Magnitude>(static_cast<int>(m)));
}

qt_status qt_model_load(const char* path, qt_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = new qt_model{classify::load_binary_model(str(path, "path"))};
  });
}

qt_status qt_model_score(const qt_model* model, const char* text, double* out_score) {
  return guarded([&] {
    need(model, "model");
    need(out_score, "out_score");
    *out_score = classify::predict_score(model->model, str(text, "text"));
  });
}

int qt_model_quality(const qt_model* model) {
  return model ? static_cast<int>(index_of(model->model.quality)) : -1;
}

void qt_model_free(qt_model* model) { delete model; }

qt_status qt_backend_connect(const char* url, const char* model_name, qt_backend** out) {
  return guarded([&] {
    need(out, "out");
    *out = new qt_backend{classify::RemoteBackend(classify::Endpoint::parse(str(url, "url")),
                                                  str(model_name, "model_name"))};
  });
}

qt_status qt_backend_score(const qt_backend* backend, const char* const* texts, size_t n,
                           double* out_scores) {
  return guarded([&] {
    need(backend, "backend");
    if (n == 0) return;
    need(texts, "texts");
    need(out_scores, "out_scores");
    std::vector<std::string> v;
    for (size_t i = 0; i < n; ++i) v.push_back(str(texts[i], "text"));
    const auto scores = backend->backend.score(v);
    std::copy(scores.begin(), scores.end(), out_scores);
  });
}

qt_status qt_backend_health(const char* url, char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    const auto h = classify::remote_health(classify::Endpoint::parse(str(url, "url")));
    *out_json = dup_string(nlohmann::json{{"status", h.status}, {"models", h.models}}.dump());
  });
}

void qt_backend_free(qt_backend* backend) { delete backend; }

qt_status qt_ensemble_load(const char* model_dir, double threshold, qt_ensemble** out) {
  return guarded([&] {
    need(out, "out");
    *out = new qt_ensemble{classify::load_ensemble(str(model_dir, "model_dir"), threshold)};
  });
}

qt_status qt_ensemble_connect(const char* url, double threshold, qt_ensemble** out) {
  return guarded([&] {
    need(out, "out");
    *out = new qt_ensemble{
        classify::remote_ensemble(classify::Endpoint::parse(str(url, "url")), threshold)};
  });
}

qt_status qt_ensemble_tag(const qt_ensemble* ensemble, const char* issue_json, char** out_json) {
  return guarded([&] {
    need(ensemble, "ensemble");
    need(out_json, "out_json");
    ingest::IssueRecord record;
    try {
      record = ingest::issue_from_json(nlohmann::json::parse(str(issue_json, "issue_json")));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("issue record: ") + e.what());
    }
    const auto tags = classify::tag_issue(ensemble->ensemble, record, {});
    *out_json = dup_string(classify::to_json(tags).dump());
  });
}

void qt_ensemble_free(qt_ensemble* ensemble) { delete ensemble; }

qt_status qt_stub_server_start(const char* model_dir, const char* host, int port,
                               qt_stub_server** out, int* out_port) {
  return guarded([&] {
    need(out, "out");
    auto server = std::make_unique<classify::StubServer>(
        classify::load_model_service(str(model_dir, "model_dir")));
    const int bound = server->bind(host ? host : "127.0.0.1", port);
    server->start();
    if (out_port) *out_port = bound;
    *out = new qt_stub_server{std::move(server)};
  });
}

void qt_stub_server_free(qt_stub_server* server) {
  if (!server) return;
  server->server->stop();
  delete server;
}

void qt_clean_options_init(qt_clean_options* o) {
  *o = {nullptr, nullptr, corpus::kDefaultMinLen};
}

void qt_build_dataset_options_init(qt_build_dataset_options* o) {
  *o = {nullptr, nullptr, nullptr, 0, 0, 0};
}

void qt_split_options_init(qt_split_options* o) {
  *o = {nullptr, nullptr, 0, 0, 5, 0.2, 0};
}

void qt_train_options_init(qt_train_options* o) {
  const classify::TrainConfig d;
  *o = {nullptr, nullptr, 0, 0, nullptr, 0, 0, 5, nullptr, classify::kDefaultThreshold,
        d.learning_rate, d.epochs, d.weight_decay, d.batch_size, classify::kDefaultFeatureDim};
}

void qt_tag_options_init(qt_tag_options* o) {
  *o = {nullptr, nullptr, nullptr, nullptr, nullptr, classify::kDefaultThreshold};
}

void qt_evaluate_options_init(qt_evaluate_options* o) {
  *o = {nullptr, nullptr, nullptr, nullptr, classify::kDefaultThreshold, "json"};
}

void qt_compare_options_init(qt_compare_options* o) {
  *o = {nullptr, nullptr, nullptr, nullptr, nullptr, classify::kDefaultThreshold,
        evalstat::kDefaultBootstrapIterations, 0, 0, "json"};
}

void qt_analyze_options_init(qt_analyze_options* o) {
  *o = {nullptr, nullptr, 0, 0, nullptr, "json"};
}

void qt_serve_options_init(qt_serve_options* o) {
  *o = {nullptr, "127.0.0.1", 8080, 0, nullptr};
}

qt_status qt_run_mine(const qt_mine_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    pipeline::MineOptions m;
    if (o->input_count > 0) need(o->inputs, "inputs");
    for (size_t i = 0; i < o->input_count; ++i) m.inputs.emplace_back(str(o->inputs[i], "input"));
    m.out = str(o->out, "out");
    give_summary(pipeline::mine(m), out_summary);
  });
}

qt_status qt_run_clean(const qt_clean_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    give_summary(pipeline::clean({str(o->input, "input"), str(o->out, "out"), o->min_len}),
                 out_summary);
  });
}

qt_status qt_run_build_dataset(const qt_build_dataset_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    pipeline::BuildDatasetOptions b;
    b.input = str(o->input, "input");
    b.out = str(o->out, "out");
    b.quality = quality_arg(o->quality);
    b.seed = seed_arg(o->has_seed, o->seed);
    b.min_len = o->min_len;
    give_summary(pipeline::build_dataset(b), out_summary);
  });
}

qt_status qt_run_split(const qt_split_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    pipeline::SplitOptions s;
    s.input = str(o->input, "input");
    s.out = str(o->out, "out");
    s.seed = seed_arg(o->has_seed, o->seed);
    s.k = o->k;
    s.test_fraction = o->test_fraction;
    s.leave_one_out = o->leave_one_out != 0;
    give_summary(pipeline::split(s), out_summary);
  });
}

qt_status qt_run_train(const qt_train_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    pipeline::TrainOptions t;
    t.input = str(o->input, "input");
    t.out = str(o->out, "out");
    t.seed = seed_arg(o->has_seed, o->seed);
    if (auto m = opt(o->manifest)) t.manifest = *m;
    t.multiclass = o->multiclass != 0;
    t.cross_validate = o->cross_validate != 0;
    t.k = o->k;
    if (auto r = opt(o->cv_report)) t.cv_report = *r;
    t.threshold = o->threshold;
    t.config.learning_rate = o->learning_rate;
    t.config.epochs = o->epochs;
    t.config.weight_decay = o->weight_decay;
    t.config.batch_size = o->batch_size;
    t.feature_dim = o->feature_dim;
    give_summary(pipeline::train(t), out_summary);
  });
}

qt_status qt_run_tag(const qt_tag_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    pipeline::TagOptions t;
    t.input = str(o->input, "input");
    t.out = str(o->out, "out");
    if (auto d = opt(o->model_dir)) t.model_dir = *d;
    t.backend_url = opt(o->backend_url);
    if (auto r = opt(o->rules)) t.rules = *r;
    t.threshold = o->threshold;
    give_summary(pipeline::tag(t), out_summary);
  });
}

qt_status qt_run_evaluate(const qt_evaluate_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    pipeline::EvaluateOptions e;
    e.preds = str(o->preds, "preds");
    if (auto t = opt(o->truth)) e.truth = *t;
    e.out = str(o->out, "out");
    if (o->quality) e.quality = quality_arg(o->quality);
    e.threshold = o->threshold;
    e.format = format_arg(o->format);
    give_summary(pipeline::evaluate(e), out_summary);
  });
}

qt_status qt_run_compare(const qt_compare_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    pipeline::CompareOptions c;
    c.preds_a = str(o->preds_a, "preds_a");
    c.preds_b = str(o->preds_b, "preds_b");
    if (auto t = opt(o->truth)) c.truth = *t;
    c.out = str(o->out, "out");
    if (o->quality) c.quality = quality_arg(o->quality);
    c.threshold = o->threshold;
    c.iterations = o->iterations;
    c.seed = seed_arg(o->has_seed, o->seed);
    c.format = format_arg(o->format);
    give_summary(pipeline::compare(c), out_summary);
  });
}

qt_status qt_run_analyze(const qt_analyze_options* o, char** out_summary) {
  return guarded([&] {
    need(o, "options");
    pipeline::AnalyzeOptions a;
    a.input = str(o->input, "input");
    a.out = str(o->out, "out");
    if (o->has_total) a.total_issues = o->total_issues;
    a.repo = opt(o->repo);
    a.format = format_arg(o->format);
    give_summary(pipeline::analyze(a), out_summary);
  });
}

qt_status qt_run_serve(const qt_serve_options* o) {
  return guarded([&] {
    need(o, "options");
    pipeline::ServeOptions s;
    s.model_dir = str(o->model_dir, "model_dir");
    s.host = o->host ? o->host : "127.0.0.1";
    s.port = o->port;
    s.stdio = o->stdio != 0;
    if (auto p = opt(o->port_file)) s.port_file = *p;
    pipeline::serve_stub(s);
  });
}

}  // extern "C"
