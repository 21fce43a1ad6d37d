#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qualitagger/qualitagger.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

int exit_code(qt_status s) {
  switch (s) {
    case QT_OK: return 0;
    case QT_ERR_USAGE: return kExitUsage;
    default: return kExitData;
  }
}

int finish(qt_status s, char** summary_slot, bool quiet) {
  char* summary = summary_slot ? *summary_slot : nullptr;
  if (s != QT_OK) {
    std::cerr << "error: " << qt_last_error() << "\n";
    return exit_code(s);
  }
  if (summary && !quiet) std::cerr << summary << "\n";
  qt_string_free(summary);
  return 0;
}

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct SeedFlag {
  std::optional<std::uint64_t> value;
  void add(CLI::App* app) {
    app->add_option("--seed", value, "Random seed (required)");
  }
  int has() const { return value ? 1 : 0; }
  std::uint64_t get() const { return value.value_or(0); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qualitagger: software-quality tagging for issue-tracker text"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Do not print the run summary");
  app.set_version_flag("--version", std::string(qt_version()));

  // mine
  std::vector<std::string> mine_inputs;
  std::string mine_out;
  auto* mine = app.add_subcommand("mine", "Extract issue records from event archives");
  mine->add_option("--input,inputs", mine_inputs, "Event archives (gzip or plain JSONL)")
      ->required();
  mine->add_option("--out", mine_out, "Issues JSONL output")->required();

  // clean
  qt_clean_options clean_o;
  qt_clean_options_init(&clean_o);
  std::string clean_in, clean_out;
  auto* clean = app.add_subcommand("clean", "Normalize, filter, and deduplicate issues");
  clean->add_option("--input", clean_in, "Issues JSONL")->required();
  clean->add_option("--out", clean_out, "Cleaned issues JSONL")->required();
  clean->add_option("--min-len", clean_o.min_len, "Minimum cleaned text length")
      ->capture_default_str();

  // build-dataset
  qt_build_dataset_options bd_o;
  qt_build_dataset_options_init(&bd_o);
  std::string bd_in, bd_out, bd_quality;
  SeedFlag bd_seed;
  auto* bd = app.add_subcommand("build-dataset", "Build a balanced binary dataset for one quality");
  bd->add_option("--input", bd_in, "Cleaned issues JSONL")->required();
  bd->add_option("--out", bd_out, "Dataset JSONL")->required();
  bd->add_option("--quality", bd_quality, "Target quality")->required();
  bd->add_option("--min-len", bd_o.min_len, "Minimum text length (0 keeps all)")
      ->capture_default_str();
  bd_seed.add(bd);

  // split
  qt_split_options sp_o;
  qt_split_options_init(&sp_o);
  std::string sp_in, sp_out;
  SeedFlag sp_seed;
  bool sp_loo = false;
  auto* sp = app.add_subcommand("split", "Write a train/test split manifest with stratified folds");
  sp->add_option("--input", sp_in, "Dataset JSONL")->required();
  sp->add_option("--out", sp_out, "Manifest JSON")->required();
  sp->add_option("--k", sp_o.k, "Folds over the training part (0 for none)")
      ->capture_default_str();
  sp->add_option("--test-fraction", sp_o.test_fraction, "Held-out share")->capture_default_str();
  sp->add_flag("--leave-one-out", sp_loo,
               "Hold out the repository with the most positives instead");
  sp_seed.add(sp);

  // train
  qt_train_options tr_o;
  qt_train_options_init(&tr_o);
  std::string tr_in, tr_out, tr_manifest, tr_cv_report;
  SeedFlag tr_seed;
  bool tr_multi = false, tr_cv = false;
  auto* tr = app.add_subcommand("train", "Train a binary or multiclass model");
  tr->add_option("--input", tr_in, "Dataset JSONL (issues JSONL with --multiclass)")->required();
  tr->add_option("--out", tr_out, "Model file")->required();
  tr->add_option("--manifest", tr_manifest, "Split manifest; trains on its train ids");
  tr->add_flag("--multiclass", tr_multi, "Train the seven-way softmax model");
  tr->add_flag("--cv", tr_cv, "Also run stratified k-fold cross-validation");
  tr->add_option("--k", tr_o.k, "Cross-validation folds")->capture_default_str();
  tr->add_option("--cv-report", tr_cv_report, "Cross-validation report (default <out>.cv.json)");
  tr->add_option("--threshold", tr_o.threshold, "Decision threshold for fold metrics")
      ->capture_default_str();
  tr->add_option("--lr", tr_o.learning_rate, "Learning rate")->capture_default_str();
  tr->add_option("--epochs", tr_o.epochs, "Epochs")->capture_default_str();
  tr->add_option("--weight-decay", tr_o.weight_decay, "L2 weight decay")->capture_default_str();
  tr->add_option("--batch-size", tr_o.batch_size, "Mini-batch size")->capture_default_str();
  tr->add_option("--feature-dim", tr_o.feature_dim, "Hashed feature dimension (power of two)")
      ->capture_default_str();
  tr_seed.add(tr);

  // tag
  qt_tag_options tg_o;
  qt_tag_options_init(&tg_o);
  std::string tg_in, tg_out, tg_models, tg_url, tg_rules;
  auto* tg = app.add_subcommand("tag", "Tag issues with the seven-model ensemble");
  tg->add_option("--input", tg_in, "Issues JSONL")->required();
  tg->add_option("--out", tg_out, "TagSet JSONL")->required();
  tg->add_option("--model-dir", tg_models, "Directory of <quality>.qtag models");
  tg->add_option("--backend-url", tg_url,
                 "Scoring backend URL (default $QUALITAGGER_BACKEND_URL)");
  tg->add_option("--rules", tg_rules, "Label rules JSONL");
  tg->add_option("--threshold", tg_o.threshold, "Confidence threshold")->capture_default_str();

  // evaluate
  qt_evaluate_options ev_o;
  qt_evaluate_options_init(&ev_o);
  std::string ev_preds, ev_truth, ev_out = "-", ev_quality, ev_format = "json";
  auto* ev = app.add_subcommand("evaluate", "Score predictions against ground truth");
  ev->add_option("--preds", ev_preds, "Predictions JSONL")->required();
  ev->add_option("--truth", ev_truth, "Truth JSONL (default: truth fields in --preds)");
  ev->add_option("--out", ev_out, "Report output")->capture_default_str();
  ev->add_option("--quality", ev_quality, "Evaluate one quality as a binary task");
  ev->add_option("--threshold", ev_o.threshold, "Decision threshold")->capture_default_str();
  ev->add_option("--format", ev_format, "json, text or csv")
      ->check(CLI::IsMember({"json", "text", "csv"}))
      ->capture_default_str();

  // compare
  qt_compare_options cp_o;
  qt_compare_options_init(&cp_o);
  std::string cp_a, cp_b, cp_truth, cp_out = "-", cp_quality, cp_format = "json";
  SeedFlag cp_seed;
  auto* cp = app.add_subcommand("compare", "Paired statistical comparison of two models");
  cp->add_option("--preds-a", cp_a, "Model A predictions JSONL")->required();
  cp->add_option("--preds-b", cp_b, "Model B predictions JSONL")->required();
  cp->add_option("--truth", cp_truth, "Truth JSONL (default: truth fields in --preds-a)");
  cp->add_option("--out", cp_out, "Report output")->capture_default_str();
  cp->add_option("--quality", cp_quality, "Compare on one quality (default: all seven)");
  cp->add_option("--threshold", cp_o.threshold, "Decision threshold")->capture_default_str();
  cp->add_option("--iterations", cp_o.iterations, "Bootstrap resamples")->capture_default_str();
  cp->add_option("--format", cp_format, "json, text or csv")
      ->check(CLI::IsMember({"json", "text", "csv"}))
      ->capture_default_str();
  cp_seed.add(cp);

  // analyze
  qt_analyze_options an_o;
  qt_analyze_options_init(&an_o);
  std::string an_in, an_out = "-", an_repo, an_format = "json";
  std::optional<std::size_t> an_total;
  auto* an = app.add_subcommand("analyze", "Frequency, overlap, and trend analysis of tags");
  an->add_option("--input", an_in, "TagSet JSONL")->required();
  an->add_option("--out", an_out, "Report output (a directory with --format csv)")
      ->capture_default_str();
  an->add_option("--total-issues", an_total, "Issues scanned (default: tagged line count)");
  an->add_option("--repo", an_repo, "Restrict to one repository");
  an->add_option("--format", an_format, "json, text or csv")
      ->check(CLI::IsMember({"json", "text", "csv"}))
      ->capture_default_str();

  // serve-stub
  qt_serve_options sv_o;
  qt_serve_options_init(&sv_o);
  std::string sv_models, sv_host = "127.0.0.1", sv_port_file;
  bool sv_stdio = false;
  auto* sv = app.add_subcommand("serve-stub", "Serve built-in models over the scoring protocol");
  sv->add_option("--model-dir", sv_models, "Directory of <quality>.qtag models")->required();
  sv->add_option("--host", sv_host, "Bind address")->capture_default_str();
  sv->add_option("--port", sv_o.port, "Port (0 picks a free one)")->capture_default_str();
  sv->add_flag("--stdio", sv_stdio, "Answer JSON lines on stdin/stdout instead of HTTP");
  sv->add_option("--port-file", sv_port_file, "Write the bound port here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  char* summary = nullptr;
  if (*mine) {
    std::vector<const char*> inputs;
    for (const auto& s : mine_inputs) inputs.push_back(s.c_str());
    qt_mine_options o{inputs.data(), inputs.size(), mine_out.c_str()};
    return finish(qt_run_mine(&o, &summary), &summary, quiet);
  }
  if (*clean) {
    clean_o.input = clean_in.c_str();
    clean_o.out = clean_out.c_str();
    return finish(qt_run_clean(&clean_o, &summary), &summary, quiet);
  }
  if (*bd) {
    bd_o.input = bd_in.c_str();
    bd_o.out = bd_out.c_str();
    bd_o.quality = bd_quality.c_str();
    bd_o.has_seed = bd_seed.has();
    bd_o.seed = bd_seed.get();
    return finish(qt_run_build_dataset(&bd_o, &summary), &summary, quiet);
  }
  if (*sp) {
    sp_o.input = sp_in.c_str();
    sp_o.out = sp_out.c_str();
    sp_o.leave_one_out = sp_loo ? 1 : 0;
    sp_o.has_seed = sp_seed.has();
    sp_o.seed = sp_seed.get();
    return finish(qt_run_split(&sp_o, &summary), &summary, quiet);
  }
  if (*tr) {
    tr_o.input = tr_in.c_str();
    tr_o.out = tr_out.c_str();
    tr_o.manifest = c_or_null(tr_manifest);
    tr_o.multiclass = tr_multi ? 1 : 0;
    tr_o.cross_validate = tr_cv ? 1 : 0;
    tr_o.cv_report = c_or_null(tr_cv_report);
    tr_o.has_seed = tr_seed.has();
    tr_o.seed = tr_seed.get();
    return finish(qt_run_train(&tr_o, &summary), &summary, quiet);
  }
  if (*tg) {
    tg_o.input = tg_in.c_str();
    tg_o.out = tg_out.c_str();
    tg_o.model_dir = c_or_null(tg_models);
    tg_o.backend_url = c_or_null(tg_url);
    tg_o.rules = c_or_null(tg_rules);
    return finish(qt_run_tag(&tg_o, &summary), &summary, quiet);
  }
  if (*ev) {
    ev_o.preds = ev_preds.c_str();
    ev_o.truth = c_or_null(ev_truth);
    ev_o.out = ev_out.c_str();
    ev_o.quality = c_or_null(ev_quality);
    ev_o.format = ev_format.c_str();
    return finish(qt_run_evaluate(&ev_o, &summary), &summary, quiet);
  }
  if (*cp) {
    cp_o.preds_a = cp_a.c_str();
    cp_o.preds_b = cp_b.c_str();
    cp_o.truth = c_or_null(cp_truth);
    cp_o.out = cp_out.c_str();
    cp_o.quality = c_or_null(cp_quality);
    cp_o.format = cp_format.c_str();
    cp_o.has_seed = cp_seed.has();
    cp_o.seed = cp_seed.get();
    return finish(qt_run_compare(&cp_o, &summary), &summary, quiet);
  }
  if (*an) {
    an_o.input = an_in.c_str();
    an_o.out = an_out.c_str();
    an_o.has_total = an_total ? 1 : 0;
    an_o.total_issues = an_total.value_or(0);
    an_o.repo = c_or_null(an_repo);
    an_o.format = an_format.c_str();
    return finish(qt_run_analyze(&an_o, &summary), &summary, quiet);
  }
  if (*sv) {
    sv_o.model_dir = sv_models.c_str();
    sv_o.host = sv_host.c_str();
    sv_o.stdio = sv_stdio ? 1 : 0;
    sv_o.port_file = c_or_null(sv_port_file);
    return finish(qt_run_serve(&sv_o), nullptr, quiet);
  }
  return kExitUsage;
}
