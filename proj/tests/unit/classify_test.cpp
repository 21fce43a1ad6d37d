#include <cmath>
#include <memory>

#include "doctest.h"
#include "qualitagger/binary_model.hpp"
#include "qualitagger/ensemble.hpp"
#include "qualitagger/error.hpp"
#include "qualitagger/features.hpp"
#include "qualitagger/multiclass.hpp"
#include "support/fixtures.hpp"

using namespace qtag;
using namespace qtag::classify;
using corpus::LabeledExample;

namespace {

// 200 docs; positives always contain "vuln".
std::vector<LabeledExample> vuln_corpus() {
  const std::vector<std::string> pos_ctx = {"found in parser", "reported by scanner",
                                            "in login form", "allows remote access"};
  const std::vector<std::string> neg_ctx = {"button misaligned", "slow startup", "typo in docs",
                                            "crash on exit"};
  std::vector<LabeledExample> out;
  SeededRng rng(3);
  for (int i = 0; i < 200; ++i) {
    LabeledExample ex;
    ex.quality = Quality::Security;
    ex.label = i % 2;
    const auto& ctx = ex.label ? pos_ctx : neg_ctx;
    ex.text = ctx[rng.below(ctx.size())] + " " + ctx[rng.below(ctx.size())];
    if (ex.label) ex.text = "vuln " + ex.text;
    ex.source_repo = "a/b";
    ex.source_id = std::to_string(i);
    out.push_back(std::move(ex));
  }
  return out;
}

class FixedBackend final : public ScoringBackend {
 public:
  explicit FixedBackend(double score) : score_(score) {}
  std::vector<double> score(std::span<const std::string> texts) const override {
    return std::vector<double>(texts.size(), score_);
  }
  std::string describe() const override { return "fixed"; }

 private:
  double score_;
};

class FailingBackend final : public ScoringBackend {
 public:
  std::vector<double> score(std::span<const std::string>) const override {
    throw BackendError(BackendErrorKind::Unreachable, "down");
  }
  std::string describe() const override { return "failing"; }
};

EnsembleModel fixed_ensemble(const std::array<double, kQualityCount>& scores) {
  EnsembleModel e;
  for (Quality q : kAllQualities) e.members[index_of(q)] = std::make_shared<FixedBackend>(scores[index_of(q)]);
  return e;
}

ingest::IssueRecord record(const std::string& body) {
  ingest::IssueRecord r;
  r.id = "a/b#1";
  r.repo = "a/b";
  r.title = "title";
  r.body = body;
  r.created_at = parse_timestamp("2022-01-01T00:00:00Z");
  return r;
}

}  // namespace

TEST_CASE("tokenize: unigrams then bigrams") {
  CHECK(tokenize("null pointer crash") ==
        std::vector<std::string>{"null", "pointer", "crash", "null_pointer", "pointer_crash"});
  CHECK(tokenize("a b").empty());
  CHECK(tokenize("xss") == std::vector<std::string>{"xss"});
  CHECK(tokenize("fix: x/y, ok") == std::vector<std::string>{"fix", "ok", "fix_ok"});
}

TEST_CASE("featurize: normalization") {
  CHECK(featurize({}, 1024).empty());
  const std::vector<std::string> same = {"t", "t"};
  const auto one = featurize(same, 1024);
  REQUIRE(one.size() == 1);
  CHECK(one[0].second == doctest::Approx(1.0));
  const std::vector<std::string> two = {"alpha", "beta"};
  REQUIRE(feature_index("alpha", 1024) != feature_index("beta", 1024));
  const auto v = featurize(two, 1024);
  REQUIRE(v.size() == 2);
  CHECK(v[0].second == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(v[1].second == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(v[0].first < v[1].first);
  CHECK(feature_index("alpha", 1024) == fnv1a64("alpha") % 1024);
}

TEST_CASE("predict_score: zero model and sigmoid arithmetic") {
  CHECK(predict_score(zero_model(Quality::Security, 1024), "anything at all") == 0.5);
  CHECK(sigmoid(6.9) == doctest::Approx(0.999).epsilon(1e-3));
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) <= 1.0);
  auto m = zero_model(Quality::Security, 1024);
  m.weights[feature_index("vuln", 1024)] = 3.0f;
  const double s1 = predict_score(m, "vuln here");
  CHECK(s1 == predict_score(m, "vuln here"));
  CHECK(s1 > 0.5);
}

TEST_CASE("train_binary: separable corpus with a planted token") {
  TrainConfig config;
  config.seed = 7;
  const auto model = train_binary(vuln_corpus(), config);
  CHECK(predict_score(model, "vuln found in parser") >= 0.9);
  CHECK(predict_score(model, "button misaligned") <= 0.1);
}

TEST_CASE("train_binary: same seed gives identical weights") {
  TrainConfig config;
  config.seed = 7;
  const auto ds = vuln_corpus();
  const auto a = train_binary(ds, config, 1u << 12);
  const auto b = train_binary(ds, config, 1u << 12);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
  config.seed = 8;
  CHECK(train_binary(ds, config, 1u << 12).weights != a.weights);
}

TEST_CASE("train_binary: precondition errors") {
  auto ds = vuln_corpus();
  std::vector<LabeledExample> negatives;
  for (const auto& ex : ds) {
    if (ex.label == 0) negatives.push_back(ex);
  }
  TrainConfig config;
  CHECK_THROWS_AS(train_binary(negatives, config), DataError);
  CHECK_THROWS_AS(train_binary(std::vector<LabeledExample>{}, config), DataError);
  ds[0].quality = Quality::Usability;
  CHECK_THROWS_AS(train_binary(ds, config), DataError);
  config.learning_rate = 0.0;
  CHECK_THROWS_AS(train_binary(vuln_corpus(), config), UsageError);
  config = {};
  config.epochs = 0;
  CHECK_THROWS_AS(validate(config), UsageError);
  config = {};
  config.weight_decay = -1.0;
  CHECK_THROWS_AS(validate(config), UsageError);
  CHECK_THROWS_AS(train_binary(vuln_corpus(), TrainConfig{}, 1000), UsageError);
}

TEST_CASE("train_binary: objective non-increasing at a small learning rate") {
  const auto issues = testing::records_of(testing::synthetic_issues(300, 21));
  for (Quality q : {Quality::Security, Quality::Portability}) {
    const auto ds = corpus::build_binary_dataset(issues, q, 5);
    TrainConfig config;
    config.learning_rate = 0.01;
    config.epochs = 15;
    config.seed = 2;
    std::vector<double> objective;
    train_binary(ds, config, kDefaultFeatureDim, &objective);
    REQUIRE(objective.size() == 15);
    for (std::size_t i = 1; i < objective.size(); ++i) CHECK(objective[i] <= objective[i - 1]);
  }
}

TEST_CASE("binary model serialization round-trips bit-exactly") {
  TrainConfig config;
  config.seed = 11;
  auto model = train_binary(vuln_corpus(), config, 1u << 10);
  const std::string bytes = serialize(model);
  CHECK(bytes.rfind("QTAG1\n", 0) == 0);
  const auto back = deserialize_binary_model(bytes);
  CHECK(back == model);
  CHECK(serialize(back) == bytes);

  testing::TempDir dir("model");
  save(model, dir / "security.qtag");
  CHECK(load_binary_model(dir / "security.qtag") == model);
}

TEST_CASE("binary model loading rejects corrupt files") {
  CHECK_THROWS_AS(deserialize_binary_model("QTAG2\n{}"), DataError);
  CHECK_THROWS_AS(deserialize_binary_model("QTAG1\nnot json"), DataError);
  auto m = zero_model(Quality::Security, 16);
  auto j = parse_model_container(serialize(m));
  j["feature_dim"] = 32;
  CHECK_THROWS_AS(deserialize_binary_model("QTAG1\n" + j.dump()), DataError);
  m.weights[0] = std::nanf("");
  CHECK_THROWS_AS(deserialize_binary_model(serialize(m)), DataError);
  CHECK(decode_floats(encode_floats(std::vector<float>{1.5f, -2.0f})) ==
        std::vector<float>{1.5f, -2.0f});
}

TEST_CASE("class_weights") {
  auto w = class_weights({{Quality::Maintainability, 100}, {Quality::Security, 50}});
  CHECK(w[0] == doctest::Approx(0.75));
  CHECK(w[1] == doctest::Approx(1.5));
  CHECK(w[2] == 1.0);
  w = class_weights({{Quality::Usability, 40}, {Quality::Reliability, 40}, {Quality::Security, 40}});
  CHECK(w[index_of(Quality::Usability)] == doctest::Approx(1.0));
  w = class_weights({{Quality::Maintainability, 1}, {Quality::Security, 999}});
  CHECK(w[0] == doctest::Approx(500.0));
  CHECK(w[1] == doctest::Approx(0.5005).epsilon(1e-4));
  CHECK_THROWS_AS(class_weights({{Quality::Security, 0}, {Quality::Usability, 3}}), DataError);
  CHECK_THROWS_AS(class_weights({}), DataError);
}

TEST_CASE("class_weights: weighted counts sum to N") {
  SeededRng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<Quality, std::size_t> counts;
    std::size_t n = 0;
    for (Quality q : kAllQualities) {
      if (rng.below(3) == 0 && counts.size() > 1) continue;
      counts[q] = 1 + rng.below(1000);
      n += counts[q];
    }
    const auto w = class_weights(counts);
    double sum = 0.0;
    for (const auto& [q, c] : counts) sum += w[index_of(q)] * static_cast<double>(c);
    CHECK(sum == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("multiclass_label picks the canonical first quality") {
  CHECK(multiclass_label({Quality::Portability, Quality::Security}) == Quality::Security);
  CHECK_FALSE(multiclass_label({}).has_value());
}

TEST_CASE("predict_multiclass: zero model and softmax arithmetic") {
  const auto p = predict_multiclass(zero_multiclass_model(64), "text");
  CHECK(p.quality == Quality::Maintainability);
  for (double x : p.probabilities) CHECK(x == doctest::Approx(1.0 / 7.0));
  std::array<double, kQualityCount> logits{};
  logits[index_of(Quality::Security)] = 5.0;
  const auto probs = softmax(logits);
  CHECK(probs[1] == doctest::Approx(std::exp(5.0) / (std::exp(5.0) + 6.0)));
  CHECK(probs[1] == doctest::Approx(0.961).epsilon(1e-3));
  SeededRng rng(8);
  for (int i = 0; i < 200; ++i) {
    for (double& l : logits) l = (rng.unit() - 0.5) * 200.0;
    const auto s = softmax(logits);
    double sum = 0.0;
    for (double x : s) sum += x;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("train_multiclass: 3-class separable set") {
  std::vector<MulticlassExample> examples;
  const std::array<Quality, 3> classes = {Quality::Security, Quality::Performance,
                                          Quality::Usability};
  const auto& kw = testing::planted_keywords();
  SeededRng rng(6);
  for (int i = 0; i < 150; ++i) {
    const Quality q = classes[i % 3];
    const auto& words = kw[index_of(q)];
    examples.push_back({"the " + words[rng.below(6)] + " " + words[rng.below(6)] +
                            " was reported by users",
                        q});
  }
  TrainConfig config;
  config.seed = 4;
  const auto model = train_multiclass(examples, config, 1u << 14);
  std::size_t correct = 0;
  for (const auto& ex : examples) correct += predict_multiclass(model, ex.text).quality == ex.quality;
  CHECK(static_cast<double>(correct) / static_cast<double>(examples.size()) >= 0.95);

  const auto again = train_multiclass(examples, config, 1u << 14);
  CHECK(again.weights == model.weights);
  CHECK(again.bias == model.bias);

  CHECK_THROWS_AS(train_multiclass(examples, config, 1u << 14, true), DataError);
  std::vector<MulticlassExample> single = {{"one text", Quality::Security},
                                           {"two text", Quality::Security}};
  CHECK_THROWS_AS(train_multiclass(single, config, 1u << 14), DataError);

  CHECK(deserialize_multiclass_model(serialize(model)) == model);
  CHECK_THROWS_AS(deserialize_multiclass_model(serialize(zero_model(Quality::Security, 16))),
                  DataError);
}

TEST_CASE("threshold_set: inclusive comparison on arbitrary score maps") {
  SeededRng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    ScoreMap scores;
    for (auto& s : scores) {
      if (rng.below(8) != 0) s = rng.unit();
    }
    const double t = 0.01 + 0.98 * rng.unit();
    const QualitySet got = threshold_set(scores, t);
    for (Quality q : kAllQualities) {
      const auto& s = scores[index_of(q)];
      CHECK(got.contains(q) == (s.has_value() && *s >= t));
    }
  }
  ScoreMap exact;
  exact[0] = 0.9;
  CHECK(threshold_set(exact, 0.9) == QualitySet{Quality::Maintainability});
}

TEST_CASE("tag_issue: threshold and forced tags") {
  const std::vector<ingest::LabelRule> none;
  auto e = fixed_ensemble({0.3, 0.95, 0.1, 0.2, 0.3, 0.1, 0.0});
  CHECK(tag_issue(e, record("body"), none).predicted == QualitySet{Quality::Security});

  e = fixed_ensemble({0.89, 0.89, 0.89, 0.89, 0.89, 0.89, 0.89});
  const auto t = tag_issue(e, record("body"), none);
  CHECK(t.predicted.empty());
  CHECK(t.ok());

  e = fixed_ensemble({0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
  const std::vector<ingest::LabelRule> rules = {
      ingest::LabelRule::force("snyk", Quality::Security)};
  const auto forced = tag_issue(e, record("Snyk flagged a dependency"), rules);
  CHECK(forced.predicted == QualitySet{Quality::Security});
  CHECK(forced.forced == QualitySet{Quality::Security});
}

TEST_CASE("tag_issue: failing member is reported, not thrown") {
  auto e = fixed_ensemble({0.95, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
  e.members[index_of(Quality::Usability)] = std::make_shared<FailingBackend>();
  const auto t = tag_issue(e, record("body"), {});
  CHECK_FALSE(t.ok());
  CHECK(t.failed == QualitySet{Quality::Usability});
  CHECK_FALSE(t.scores[index_of(Quality::Usability)].has_value());
  CHECK(t.predicted == QualitySet{Quality::Maintainability});
  CHECK(to_json(t)["failed"] == nlohmann::json::array({"usability"}));
}

TEST_CASE("ensemble loading needs all seven models") {
  testing::TempDir dir("ensemble");
  for (Quality q : kAllQualities) {
    if (q == Quality::Portability) continue;
    save(zero_model(q, 16), dir / (std::string(to_string(q)) + ".qtag"));
  }
  CHECK_THROWS_AS(load_ensemble(dir.path()), DataError);
  save(zero_model(Quality::Security, 16), dir / "portability.qtag");
  CHECK_THROWS_AS(load_ensemble(dir.path()), DataError);
  save(zero_model(Quality::Portability, 16), dir / "portability.qtag");
  const auto e = load_ensemble(dir.path(), 0.5);
  const auto t = tag_issue(e, record("some text"), {});
  CHECK(t.predicted == QualitySet::all());
  CHECK_THROWS_AS(validate_threshold(1.0), UsageError);
  CHECK_THROWS_AS(validate_threshold(0.0), UsageError);
}
