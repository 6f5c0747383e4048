#include "insider/evaluate.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "insider/error.h"

namespace insider {

ConfusionMatrix confusion(std::span<const ScoredItem> items, double threshold) {
  ConfusionMatrix cm;
  for (const auto& item : items) {
    const bool predicted = item.score >= threshold;
    if (item.positive) {
      ++(predicted ? cm.true_positive : cm.false_negative);
    } else {
      ++(predicted ? cm.false_positive : cm.true_negative);
    }
  }
  return cm;
}

std::optional<double> sensitivity(const ConfusionMatrix& cm) {
  const auto denom = cm.true_positive + cm.false_negative;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(cm.true_positive) / static_cast<double>(denom);
}

std::optional<double> specificity(const ConfusionMatrix& cm) {
  const auto denom = cm.false_positive + cm.true_negative;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(cm.true_negative) / static_cast<double>(denom);
}

RocCurve roc(std::span<const ScoredItem> items) {
  std::vector<ScoredItem> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredItem& a, const ScoredItem& b) { return a.score > b.score; });
  std::uint64_t positives = 0;
  for (const auto& item : sorted) positives += item.positive ? 1 : 0;
  const std::uint64_t negatives = sorted.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("ROC undefined: scores need both positive and negative labels");
  }

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  // Twice the area, in units of one (positive, negative) cell.
  std::uint64_t doubled_area = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double score = sorted[i].score;
    const std::uint64_t prev_tp = tp, prev_fp = fp;
    for (; i < sorted.size() && sorted[i].score == score; ++i) {
      ++(sorted[i].positive ? tp : fp);
    }
    doubled_area += (fp - prev_fp) * (tp + prev_tp);
    curve.points.push_back({score, static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  curve.auc = static_cast<double>(doubled_area) /
              (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return curve;
}

EvaluationSummary evaluate_user(std::span<const PredictionRecord> predictions, std::size_t k,
                                double threshold) {
  EvaluationSummary summary;
  summary.k = k;
  summary.predictions = predictions.size();
  std::vector<ScoredItem> items;
  items.reserve(predictions.size());
  std::size_t correct = 0;
  for (const auto& r : predictions) {
    items.push_back({r.anomaly_score, r.is_red_team});
    summary.red_team += r.is_red_team ? 1 : 0;
    correct += r.correct ? 1 : 0;
  }
  if (!predictions.empty()) {
    summary.top1_accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
  }
  const QuadrantReport report = segment_quadrants(predictions, threshold, k);
  summary.counts = report.counts;
  summary.threat_in_top_k =
      std::any_of(report.ranked_low_incorrect.begin(), report.ranked_low_incorrect.end(),
                  [](const PredictionRecord& r) { return r.is_red_team; });
  if (summary.red_team == 0 || summary.red_team == predictions.size()) {
    summary.note = summary.red_team == 0 ? "ROC unavailable: no red-team labels in predictions"
                                         : "ROC unavailable: every prediction is red-team";
  } else {
    summary.curve = roc(items);
    summary.auc = summary.curve->auc;
  }
  return summary;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "threshold,fpr,tpr\n";
  char buf[96];
  for (const auto& p : curve.points) {
    if (std::isinf(p.threshold)) {
      std::snprintf(buf, sizeof buf, "inf,%.17g,%.17g\n", p.fpr, p.tpr);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
    }
    out << buf;
  }
}

std::string summary_json(const EvaluationSummary& s) {
  nlohmann::json doc;
  doc["auc"] = s.auc ? nlohmann::json(*s.auc) : nlohmann::json(nullptr);
  doc["top1_accuracy"] = s.top1_accuracy;
  doc["threat_in_top_k"] = s.threat_in_top_k;
  doc["k"] = s.k;
  doc["counts"] = {{"predictions", s.predictions},
                   {"red_team", s.red_team},
                   {"high_correct", s.counts.high_correct},
                   {"high_incorrect", s.counts.high_incorrect},
                   {"low_correct", s.counts.low_correct},
                   {"low_incorrect", s.counts.low_incorrect}};
  if (!s.note.empty()) doc["note"] = s.note;
  return doc.dump(2) + "\n";
}

}  // namespace insider
