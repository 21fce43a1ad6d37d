#include "qualitagger/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qualitagger/error.hpp"

namespace qtag::evalstat {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DataError("length mismatch: " + std::to_string(a) + " predictions vs " +
                    std::to_string(b) + " truths");
  }
  if (a == 0) throw DataError("no instances to evaluate");
}

Ratio safe_div(double num, double den) {
  if (den == 0.0) return {0.0, true};
  return {num / den, false};
}

}  // namespace

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> truths,
                          double threshold) {
  check_lengths(scores.size(), truths.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = truths[i] != 0;
    if (pred && truth) {
      ++c.tp;
    } else if (pred) {
      ++c.fp;
    } else if (truth) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

ConfusionCounts confusion_from_predictions(std::span<const int> predictions,
                                           std::span<const int> truths) {
  check_lengths(predictions.size(), truths.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred = predictions[i] != 0;
    const bool truth = truths[i] != 0;
    c.tp += pred && truth;
    c.fp += pred && !truth;
    c.fn += !pred && truth;
    c.tn += !pred && !truth;
  }
  return c;
}

Ratio precision(const ConfusionCounts& c) {
  return safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
}

Ratio recall(const ConfusionCounts& c) {
  return safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
}

Ratio accuracy(const ConfusionCounts& c) {
  return safe_div(static_cast<double>(c.tp + c.tn), static_cast<double>(c.total()));
}

Ratio f1(const ConfusionCounts& c) {
  const Ratio p = precision(c);
  const Ratio r = recall(c);
  Ratio out = safe_div(2.0 * p.value * r.value, p.value + r.value);
  out.degenerate = out.degenerate || p.degenerate || r.degenerate;
  return out;
}

Ratio mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  const double radicand = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (radicand == 0.0) return {0.0, true};
  const double v = (tp * tn - fp * fn) / std::sqrt(radicand);
  return {std::clamp(v, -1.0, 1.0), false};
}

double auc_roc(std::span<const double> scores, std::span<const int> truths) {
  check_lengths(scores.size(), truths.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Sum of positive mid-ranks (1-based) -> Mann-Whitney U.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (truths[order[k]] != 0) {
        rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("AUC is undefined unless both classes are present");
  }
  const double p = static_cast<double>(positives);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

EvalReport evaluate_binary(std::span<const double> scores, std::span<const int> truths,
                           double threshold) {
  EvalReport r;
  r.counts = confusion(scores, truths, threshold);
  r.n = scores.size();
  r.threshold = threshold;
  auto take = [&](const char* name, Ratio v) {
    if (v.degenerate) r.degenerate.emplace_back(name);
    return v.value;
  };
  r.precision = take("precision", precision(r.counts));
  r.recall = take("recall", recall(r.counts));
  r.accuracy = take("accuracy", accuracy(r.counts));
  r.f1 = take("f1", f1(r.counts));
  r.mcc = take("mcc", mcc(r.counts));
  try {
    r.auc = auc_roc(scores, truths);
  } catch (const DataError&) {
    r.auc = 0.0;
    r.degenerate.emplace_back("auc");
  }
  return r;
}

double hamming_loss(std::span<const QualitySet> predicted, std::span<const QualitySet> truth) {
  check_lengths(predicted.size(), truth.size());
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    wrong += static_cast<std::size_t>((predicted[i] ^ truth[i]).size());
  }
  return static_cast<double>(wrong) / static_cast<double>(predicted.size() * kQualityCount);
}

MicroPRF micro_prf(std::span<const QualitySet> predicted, std::span<const QualitySet> truth) {
  check_lengths(predicted.size(), truth.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    c.tp += static_cast<std::uint64_t>((predicted[i] & truth[i]).size());
    c.fp += static_cast<std::uint64_t>(predicted[i].size() - (predicted[i] & truth[i]).size());
    c.fn += static_cast<std::uint64_t>(truth[i].size() - (predicted[i] & truth[i]).size());
  }
  return {precision(c), recall(c), f1(c)};
}

double at_least_one_match(std::span<const QualitySet> predicted,
                          std::span<const QualitySet> truth) {
  check_lengths(predicted.size(), truth.size());
  std::size_t eligible = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (truth[i].empty()) continue;
    ++eligible;
    hits += (predicted[i] & truth[i]).empty() ? 0 : 1;
  }
  if (eligible == 0) throw DataError("at-least-one-match is undefined: every truth set is empty");
  return static_cast<double>(hits) / static_cast<double>(eligible);
}

MultiLabelReport evaluate_multilabel(std::span<const QualitySet> predicted,
                                     std::span<const QualitySet> truth) {
  MultiLabelReport r;
  r.n = predicted.size();
  r.hamming_loss = hamming_loss(predicted, truth);
  const MicroPRF prf = micro_prf(predicted, truth);
  auto take = [&](const char* name, Ratio v) {
    if (v.degenerate) r.degenerate.emplace_back(name);
    return v.value;
  };
  r.micro_precision = take("micro_precision", prf.precision);
  r.micro_recall = take("micro_recall", prf.recall);
  r.micro_f1 = take("micro_f1", prf.f1);
  try {
    r.at_least_one_match = at_least_one_match(predicted, truth);
  } catch (const DataError&) {
    r.degenerate.emplace_back("at_least_one_match");
  }
  return r;
}

}  // namespace qtag::evalstat
