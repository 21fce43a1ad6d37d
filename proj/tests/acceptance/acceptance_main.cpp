// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Usage: qtag_acceptance <path-to-qualitagger-cli>

#include <sys/wait.h>
#include <signal.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qualitagger/analyze.hpp"
#include "qualitagger/backend.hpp"
#include "qualitagger/binary_model.hpp"
#include "qualitagger/compare.hpp"
#include "qualitagger/corpus.hpp"
#include "qualitagger/ensemble.hpp"
#include "qualitagger/error.hpp"
#include "qualitagger/metrics.hpp"
#include "support/fixtures.hpp"

using namespace qtag;
namespace es = qtag::evalstat;

namespace {

std::string g_cli;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

// ---- metric oracles -------------------------------------------------------

struct OracleBinary {
  double precision, recall, accuracy, f1, mcc, auc;
};

OracleBinary oracle_binary(const std::vector<double>& s, const std::vector<int>& t, double thr) {
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int p = s[i] >= thr ? 1 : 0;
    if (p == 1 && t[i] == 1) tp += 1;
    if (p == 1 && t[i] == 0) fp += 1;
    if (p == 0 && t[i] == 0) tn += 1;
    if (p == 0 && t[i] == 1) fn += 1;
  }
  OracleBinary o{};
  o.precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
  o.recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
  o.accuracy = (tp + tn) / static_cast<double>(s.size());
  o.f1 = (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
  // MCC as the Pearson correlation of the prediction and truth indicators.
  const double n = static_cast<double>(s.size());
  double mp = 0, mt = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    mp += (s[i] >= thr ? 1.0 : 0.0) / n;
    mt += t[i] / n;
  }
  double cov = 0, vp = 0, vt = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double dp = (s[i] >= thr ? 1.0 : 0.0) - mp;
    const double dt = t[i] - mt;
    cov += dp * dt;
    vp += dp * dp;
    vt += dt * dt;
  }
  o.mcc = (vp > 0 && vt > 0) ? cov / std::sqrt(vp * vt) : 0.0;
  // AUC over every positive/negative pair.
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (t[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (t[j] != 0) continue;
      pairs += 1;
      if (s[i] > s[j]) wins += 1;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  o.auc = wins / pairs;
  return o;
}

Outcome metric_oracle() {
  const auto t0 = Clock::now();
  SeededRng rng(20240601);
  double worst = 0.0;
  std::string worst_name;
  auto check = [&](const char* name, double got, double want) {
    const double d = std::abs(got - want);
    if (d > worst) {
      worst = d;
      worst_name = name;
    }
  };
  for (int set = 0; set < 1000; ++set) {
    const std::size_t n = 5 + rng.below(496);
    std::vector<double> scores(n);
    std::vector<int> truths(n);
    std::vector<QualitySet> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so ties occur.
      scores[i] = static_cast<double>(rng.below(21)) / 20.0;
      truths[i] = static_cast<int>(rng.below(2));
      pred[i] = QualitySet::from_bits(static_cast<std::uint8_t>(rng.below(128)));
      truth[i] = QualitySet::from_bits(static_cast<std::uint8_t>(rng.below(128)));
    }
    truths[0] = 1;
    truths[1] = 0;
    truth[0] = QualitySet{Quality::Security};
    const double thr = static_cast<double>(rng.below(21)) / 20.0;

    const auto r = es::evaluate_binary(scores, truths, thr);
    const auto o = oracle_binary(scores, truths, thr);
    check("precision", r.precision, o.precision);
    check("recall", r.recall, o.recall);
    check("accuracy", r.accuracy, o.accuracy);
    check("f1", r.f1, o.f1);
    check("mcc", r.mcc, o.mcc);
    check("auc", r.auc, o.auc);

    double wrong = 0, tp = 0, fp = 0, fn = 0, eligible = 0, hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool overlap = false;
      for (Quality q : kAllQualities) {
        const bool p = pred[i].contains(q);
        const bool t = truth[i].contains(q);
        wrong += p != t;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
        overlap = overlap || (p && t);
      }
      if (!truth[i].empty()) {
        eligible += 1;
        hits += overlap;
      }
    }
    const auto ml = es::evaluate_multilabel(pred, truth);
    check("hamming", ml.hamming_loss, wrong / (static_cast<double>(n) * kQualityCount));
    const double mp = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double mr = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    check("micro_precision", ml.micro_precision, mp);
    check("micro_recall", ml.micro_recall, mr);
    check("micro_f1", ml.micro_f1, (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0);
    check("at_least_one_match", ml.at_least_one_match, hits / eligible);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 30.0,
          "max deviation " + std::to_string(worst) + (worst_name.empty() ? "" : " (" + worst_name + ")") +
              ", " + fmt(secs, 2) + " s"};
}

// ---- paired statistics ----------------------------------------------------

Outcome mcnemar_criterion() {
  const double p = es::mcnemar_exact(2, 4);
  bool symmetric = true;
  SeededRng rng(99);
  for (int i = 0; i < 100; ++i) {
    const auto b = rng.below(60);
    const auto c = rng.below(60);
    symmetric = symmetric && es::mcnemar_exact(b, c) == es::mcnemar_exact(c, b);
  }
  return {p == 0.6875 && symmetric,
          "mcnemar(2,4) = " + fmt(p, 10) + ", symmetric on 100 pairs: " + (symmetric ? "yes" : "no")};
}

Outcome cliffs_criterion() {
  const std::vector<double> deltas = {-0.3536, -0.2316, -0.9384, 0.2552, -0.8232, -0.9984, 0.6928};
  const std::string want = "MSLSLLL";
  std::string got;
  for (double d : deltas) got += es::letter(es::magnitude(d));
  return {got == want, "letters " + got + " (expected " + want + ")"};
}

Outcome bootstrap_criterion() {
  SeededRng rng(7);
  const std::size_t n = 200;
  std::vector<int> truth(n), model(n), perfect(n), coin(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = static_cast<int>(rng.below(2));
    model[i] = rng.below(10) < 8 ? truth[i] : 1 - truth[i];
    perfect[i] = truth[i];
    coin[i] = static_cast<int>(rng.below(2));
  }
  const auto self = es::bootstrap_f1(model, model, truth, 10000, 11);
  const auto diff = es::bootstrap_f1(perfect, coin, truth, 10000, 11);
  const bool ok = self.ci_diff.contains(0.0) && !self.significant && diff.significant;
  return {ok, "self diff CI [" + fmt(self.ci_diff.low, 4) + ", " + fmt(self.ci_diff.high, 4) +
                  "] significant=" + (self.significant ? "true" : "false") +
                  "; perfect vs coin-flip diff CI [" + fmt(diff.ci_diff.low, 4) + ", " +
                  fmt(diff.ci_diff.high, 4) + "] significant=" +
                  (diff.significant ? "true" : "false")};
}

// ---- analysis arithmetic --------------------------------------------------

std::vector<analyze::TaggedIssue> repeat_tags(const std::vector<std::pair<Quality, std::size_t>>& counts) {
  std::vector<analyze::TaggedIssue> out;
  std::size_t id = 0;
  for (const auto& [q, c] : counts) {
    for (std::size_t i = 0; i < c; ++i) {
      analyze::TaggedIssue t;
      t.issue_id = "i" + std::to_string(id++);
      t.repo = "r/x";
      t.predicted.insert(q);
      out.push_back(std::move(t));
    }
  }
  return out;
}

Outcome td_impact_criterion() {
  const std::vector<std::pair<Quality, std::size_t>> counts = {
      {Quality::Maintainability, 13581}, {Quality::Reliability, 13555},
      {Quality::Performance, 10550},     {Quality::Usability, 10531},
      {Quality::Compatibility, 9249},    {Quality::Security, 5568},
      {Quality::Portability, 2251}};
  const std::map<Quality, double> published = {
      {Quality::Maintainability, 20.80}, {Quality::Reliability, 20.76},
      {Quality::Performance, 16.16},     {Quality::Usability, 16.13},
      {Quality::Compatibility, 14.17},   {Quality::Security, 8.53},
      {Quality::Portability, 3.45}};
  const auto rows = analyze::td_impact(repeat_tags(counts));
  double sum = 0.0, worst = 0.0;
  for (const auto& r : rows) {
    sum += r.percentage;
    worst = std::max(worst, std::abs(r.percentage - published.at(r.quality)));
  }
  return {worst <= 0.01 && std::abs(sum - 100.0) <= 0.02,
          "max deviation " + fmt(worst, 4) + " points, sum " + fmt(sum, 4)};
}

Outcome frequency_criterion() {
  auto share = [](Quality q, std::size_t count, std::size_t total) {
    const auto rows = analyze::quality_frequency(repeat_tags({{q, count}}), total);
    return rows[index_of(q)].relative_frequency;
  };
  const double a = share(Quality::Security, 2219, 11701);
  const double b = share(Quality::Usability, 366, 2698);
  return {std::abs(a - 18.9642) <= 0.0001 && std::abs(b - 13.5656) <= 0.001,
          "2219/11701 -> " + fmt(a, 4) + "%, 366/2698 -> " + fmt(b, 4) + "%"};
}

// ---- corpus ---------------------------------------------------------------

Outcome balanced_criterion() {
  SeededRng meta(314);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 20 + meta.below(200);
    std::vector<ingest::IssueRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
      ingest::IssueRecord r;
      r.repo = "o/r" + std::to_string(meta.below(4));
      r.id = r.repo + "#" + std::to_string(i);
      r.title = "issue number " + std::to_string(i);
      r.body = "the text of issue " + std::to_string(i) + " with some words";
      const auto bits = meta.below(128);
      for (Quality q : QualitySet::from_bits(static_cast<std::uint8_t>(bits)).members()) {
        r.labels.emplace_back(to_string(q));
      }
      r.created_at = Timestamp(std::chrono::seconds(1600000000));
      records.push_back(std::move(r));
    }
    records[0].labels = {"security"};
    records[1].labels = {"usability"};
    const std::uint64_t seed = meta.below(1u << 30);
    const auto a = corpus::build_binary_dataset(records, Quality::Security, seed);
    const auto b = corpus::build_binary_dataset(records, Quality::Security, seed);
    std::size_t pos = 0;
    for (const auto& ex : a) pos += ex.label;
    if (pos * 2 != a.size()) {
      return {false, "corpus " + std::to_string(c) + ": " + std::to_string(pos) + " positives of " +
                         std::to_string(a.size())};
    }
    if (corpus::write_dataset_jsonl(a) != corpus::write_dataset_jsonl(b)) {
      return {false, "corpus " + std::to_string(c) + ": output differs between runs"};
    }
  }
  return {true, "200 corpora balanced and byte-identical across runs"};
}

Outcome leave_one_out_criterion() {
  std::vector<ingest::IssueRecord> records;
  const std::vector<std::pair<std::string, int>> plan = {
      {"alpha/core", 3}, {"big/repo", 9}, {"zeta/tools", 5}};
  int id = 0;
  for (const auto& [repo, positives] : plan) {
    for (int i = 0; i < positives + 4; ++i) {
      ingest::IssueRecord r;
      r.repo = repo;
      r.id = repo + "#" + std::to_string(++id);
      r.title = "title " + std::to_string(id);
      r.body = "body";
      r.labels = {i < positives ? "performance" : "bug-security"};
      r.created_at = Timestamp(std::chrono::seconds(1600000000));
      records.push_back(r);
    }
  }
  const auto split = corpus::leave_one_out_split(records, Quality::Performance);
  std::size_t r_total = 0;
  for (const auto& r : records) r_total += r.repo == "big/repo";
  bool all_held = split.held_out.size() == r_total;
  for (const auto& r : split.held_out) all_held = all_held && r.repo == "big/repo";
  bool none_train = true;
  for (const auto& r : split.train) none_train = none_train && r.repo != "big/repo";
  return {split.held_out_repo == "big/repo" && all_held && none_train &&
              split.train.size() + split.held_out.size() == records.size(),
          "held out " + split.held_out_repo + " (" + std::to_string(split.held_out.size()) +
              " records), train " + std::to_string(split.train.size())};
}

// ---- baseline end to end ----------------------------------------------------

Outcome baseline_criterion() {
  const auto t0 = Clock::now();
  const auto issues = testing::synthetic_issues(500, 2024, 5, 0);
  // 20% of issues held out for the ensemble check; binary datasets are built
  // from the remaining 80% and split again 80/20 for the per-model metrics.
  std::vector<ingest::IssueRecord> train_records, test_records;
  std::vector<QualitySet> test_truth;
  SeededRng rng(5);
  for (const auto& s : issues) {
    if (rng.below(5) == 0) {
      test_records.push_back(s.record);
      test_truth.push_back(s.truth);
    } else {
      train_records.push_back(s.record);
    }
  }
  const auto cleaned = corpus::clean_corpus(train_records, corpus::kDefaultMinLen).records;

  classify::TrainConfig config;
  config.seed = 17;
  config.learning_rate = 0.2;
  config.epochs = 200;
  double min_f1 = 1.0, min_mcc = 1.0;
  std::string worst;
  classify::EnsembleModel ensemble;
  for (Quality q : kAllQualities) {
    const auto dataset = corpus::build_binary_dataset(cleaned, q, 100 + index_of(q));
    const auto manifest = corpus::holdout_split(dataset, 0.2, 0, 3);
    const std::set<std::string> test_ids(manifest.test_ids.begin(), manifest.test_ids.end());
    std::vector<corpus::LabeledExample> tr, te;
    for (const auto& ex : dataset) (test_ids.count(ex.source_id) ? te : tr).push_back(ex);
    const auto model = classify::train_binary(tr, config);
    std::vector<double> scores;
    std::vector<int> truths;
    for (const auto& ex : te) {
      scores.push_back(classify::predict_score(model, ex.text));
      truths.push_back(ex.label);
    }
    const auto report = es::evaluate_binary(scores, truths, classify::kDefaultThreshold);
    if (worst.empty() || report.f1 < min_f1) worst = std::string(to_string(q));
    min_f1 = std::min(min_f1, report.f1);
    min_mcc = std::min(min_mcc, report.mcc);

    auto full = classify::train_binary(dataset, config);
    full.quality = q;
    ensemble.members[index_of(q)] =
        std::make_shared<classify::LocalBackend>(std::make_shared<classify::BinaryModel>(std::move(full)));
  }
  ensemble.threshold = classify::kDefaultThreshold;
  const auto tags = classify::tag_issues(ensemble, test_records, {});
  std::vector<QualitySet> predicted;
  for (const auto& t : tags) predicted.push_back(t.predicted);
  const double match = es::at_least_one_match(predicted, test_truth);
  const double secs = seconds_since(t0);
  return {min_f1 >= 0.95 && min_mcc >= 0.90 && match >= 0.95 && secs < 60.0,
          "min F1 " + fmt(min_f1, 4) + " (" + worst + "), min MCC " + fmt(min_mcc, 4) +
              ", ensemble at-least-one-match " + fmt(match, 4) + " on " +
              std::to_string(test_records.size()) + " issues, " + fmt(secs, 2) + " s"};
}

// ---- protocol round trip ----------------------------------------------------

Outcome protocol_criterion() {
  testing::TempDir dir("acceptance_protocol");
  const auto model_dir = dir / "models";
  std::filesystem::create_directories(model_dir);
  const auto issues = testing::synthetic_issues(140, 8);
  const auto records = testing::records_of(issues);
  classify::TrainConfig config;
  config.seed = 1;
  for (Quality q : {Quality::Security, Quality::Performance}) {
    auto model = classify::train_binary(corpus::build_binary_dataset(records, q, 4), config, 1u << 12);
    model.quality = q;
    classify::save(model, model_dir / (std::string(to_string(q)) + ".qtag"));
  }
  const auto port_file = dir / "port";
  const pid_t pid = fork();
  if (pid == 0) {
    const std::string md = model_dir.string();
    const std::string pf = port_file.string();
    execl(g_cli.c_str(), g_cli.c_str(), "-q", "serve-stub", "--model-dir", md.c_str(), "--port",
          "0", "--port-file", pf.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  auto stop = [&] {
    kill(pid, SIGTERM);
    int status = 0;
    waitpid(pid, &status, 0);
  };
  int port = 0;
  for (int i = 0; i < 200 && port == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
    std::ifstream in(port_file);
    in >> port;
  }
  if (port == 0) {
    stop();
    return {false, "serve-stub did not report a port"};
  }
  classify::Endpoint ep;
  ep.host = "127.0.0.1";
  ep.port = port;
  std::string detail;
  bool ok = true;
  try {
    std::vector<std::string> texts;
    for (int i = 0; i < 37; ++i) texts.push_back(issues[static_cast<std::size_t>(i)].record.text());
    const auto first = classify::remote_predict(ep, "security", texts);
    const auto second = classify::remote_predict(ep, "security", texts);
    bool in_range = true;
    for (double s : first) in_range = in_range && s >= 0.0 && s <= 1.0;
    const bool length = first.size() == texts.size();
    const bool same = first == second;
    const bool empty = classify::remote_predict(ep, "security", {}).empty();
    bool unknown_rejected = false;
    try {
      classify::remote_predict(ep, "no-such-model", texts);
    } catch (const BackendError& e) {
      unknown_rejected = e.kind() == BackendErrorKind::HttpStatus;
    }
    const auto health = classify::remote_health(ep);
    ok = length && in_range && same && empty && unknown_rejected && health.status == "ok";
    detail = std::string("length ") + (length ? "ok" : "bad") + ", range " +
             (in_range ? "ok" : "bad") + ", determinism " + (same ? "ok" : "bad") +
             ", empty batch " + (empty ? "ok" : "bad") + ", unknown model " +
             (unknown_rejected ? "rejected" : "accepted") + ", health models " +
             std::to_string(health.models.size());
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  stop();
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: " << argv[0] << " <qualitagger-cli>\n";
    return 2;
  }
  g_cli = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracle equivalence", metric_oracle},
      {"mcnemar exact branch", mcnemar_criterion},
      {"cliffs delta magnitude letters", cliffs_criterion},
      {"td impact percentages", td_impact_criterion},
      {"relative frequency arithmetic", frequency_criterion},
      {"balanced dataset invariant", balanced_criterion},
      {"leave one out split", leave_one_out_criterion},
      {"baseline end to end", baseline_criterion},
      {"protocol round trip", protocol_criterion},
      {"bootstrap sanity", bootstrap_criterion},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
