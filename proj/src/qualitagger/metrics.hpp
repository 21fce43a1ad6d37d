#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qualitagger/quality.hpp"

namespace qtag::evalstat {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// prediction = score >= threshold. Lengths must match and be non-empty.
ConfusionCounts confusion(std::span<const double> scores, std::span<const int> truths,
                          double threshold);
ConfusionCounts confusion_from_predictions(std::span<const int> predictions,
                                           std::span<const int> truths);

// A metric whose denominator may vanish: then value is 0 and degenerate set.
struct Ratio {
  double value = 0.0;
  bool degenerate = false;
};

Ratio precision(const ConfusionCounts& c);
Ratio recall(const ConfusionCounts& c);
Ratio accuracy(const ConfusionCounts& c);
// Harmonic mean of precision and recall.
Ratio f1(const ConfusionCounts& c);
// Zero whenever a factor under the square root is zero.
Ratio mcc(const ConfusionCounts& c);

// P(score+ > score-) + 0.5 P(tie) over all positive/negative pairs, computed
// from mid-ranks. Throws DataError unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const int> truths);

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  double auc = 0.0;
  ConfusionCounts counts;
  std::size_t n = 0;
  double threshold = 0.0;
  std::vector<std::string> degenerate;  // metrics that hit the zero-denominator rule
};

EvalReport evaluate_binary(std::span<const double> scores, std::span<const int> truths,
                           double threshold);

// Symmetric-difference size summed over instances, over n * 7.
double hamming_loss(std::span<const QualitySet> predicted, std::span<const QualitySet> truth);

struct MicroPRF {
  Ratio precision;
  Ratio recall;
  Ratio f1;
};

// TP/FP/FN pooled over every (instance, quality) pair.
MicroPRF micro_prf(std::span<const QualitySet> predicted, std::span<const QualitySet> truth);

// Share of instances with a non-empty truth whose prediction overlaps it.
// Throws DataError when every truth set is empty.
double at_least_one_match(std::span<const QualitySet> predicted,
                          std::span<const QualitySet> truth);

struct MultiLabelReport {
  double hamming_loss = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double at_least_one_match = 0.0;
  std::size_t n = 0;
  std::size_t label_universe = kQualityCount;
  std::vector<std::string> degenerate;
};

MultiLabelReport evaluate_multilabel(std::span<const QualitySet> predicted,
                                     std::span<const QualitySet> truth);

}  // namespace qtag::evalstat
