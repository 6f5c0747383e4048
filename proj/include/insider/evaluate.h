#ifndef INSIDER_EVALUATE_H_
#define INSIDER_EVALUATE_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "insider/detect.h"

namespace insider {

struct ScoredItem {
  double score = 0.0;
  bool positive = false;
};

// X = true positives, Y = false negatives, Z = false positives,
// W = true negatives.
struct ConfusionMatrix {
  std::uint64_t true_positive = 0;
  std::uint64_t false_negative = 0;
  std::uint64_t false_positive = 0;
  std::uint64_t true_negative = 0;

  std::uint64_t total() const {
    return true_positive + false_negative + false_positive + true_negative;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

// An item is predicted positive iff its score >= threshold.
ConfusionMatrix confusion(std::span<const ScoredItem> items, double threshold);

// X / (X + Y); nullopt when there are no positives.
std::optional<double> sensitivity(const ConfusionMatrix& cm);
// W / (Z + W); nullopt when there are no negatives.
std::optional<double> specificity(const ConfusionMatrix& cm);

struct RocPoint {
  double threshold = 0.0;  // +inf for the (0, 0) origin
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// Sweeps every distinct score from high to low, one point per score (tied
// scores move together), starting at (0, 0); the lowest score always lands
// on (1, 1). AUC is the trapezoidal area, accumulated in integer counts so
// it is exact. Throws DataError unless both classes are present.
RocCurve roc(std::span<const ScoredItem> items);

struct EvaluationSummary {
  std::size_t predictions = 0;
  std::size_t red_team = 0;
  double top1_accuracy = 0.0;
  std::optional<double> auc;
  std::optional<RocCurve> curve;
  bool threat_in_top_k = false;
  std::size_t k = 10;
  QuadrantCounts counts;
  std::string note;
};

// Red-team detection quality of a user's predictions: anomaly_score against
// the ground-truth label, plus next-event top-1 accuracy and whether any
// red-team event is among the k lowest-probability incorrect predictions.
EvaluationSummary evaluate_user(std::span<const PredictionRecord> predictions, std::size_t k = 10,
                                double threshold = 0.5);

// threshold,fpr,tpr
void write_roc_csv(std::ostream& out, const RocCurve& curve);
std::string summary_json(const EvaluationSummary& summary);

}  // namespace insider

#endif  // INSIDER_EVALUATE_H_
