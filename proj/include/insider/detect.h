#ifndef INSIDER_DETECT_H_
#define INSIDER_DETECT_H_

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "insider/dataset.h"
#include "insider/encode.h"
#include "insider/nn.h"

namespace insider {

struct PredictionRecord {
  std::size_t window_position = 0;
  Timestamp timestamp;
  EventIndex predicted_index = 0;
  double predicted_probability = 0.0;  // max of the softmax output
  EventIndex actual_index = 0;
  double actual_probability = 0.0;  // softmax entry of the event that happened
  bool correct = false;
  double anomaly_score = 0.0;  // 1 - actual_probability
  bool is_red_team = false;    // evaluation only
  bool operator==(const PredictionRecord&) const = default;
};

// Scores every window in infer mode, in order. Timestamps come from `seq`,
// the sequence the windows were cut from.
std::vector<PredictionRecord> predict_all(const LstmModel<double>& model,
                                          std::span<const Window> windows,
                                          const EncodedSequence& seq);

enum class Quadrant { kHighCorrect = 0, kHighIncorrect = 1, kLowCorrect = 2, kLowIncorrect = 3 };

inline Quadrant quadrant_of(const PredictionRecord& r, double threshold) {
  const bool high = r.predicted_probability >= threshold;
  if (high) return r.correct ? Quadrant::kHighCorrect : Quadrant::kHighIncorrect;
  return r.correct ? Quadrant::kLowCorrect : Quadrant::kLowIncorrect;
}

struct QuadrantCounts {
  std::size_t high_correct = 0;
  std::size_t high_incorrect = 0;
  std::size_t low_correct = 0;
  std::size_t low_incorrect = 0;

  std::size_t total() const { return high_correct + high_incorrect + low_correct + low_incorrect; }
};

struct QuadrantReport {
  double threshold = 0.5;
  std::size_t k = 10;
  QuadrantCounts counts;
  // The k incorrect predictions the model was least sure of, ascending by
  // predicted probability.
  std::vector<PredictionRecord> ranked_low_incorrect;
  // The k incorrect predictions the model was most sure of, descending.
  std::vector<PredictionRecord> ranked_high_incorrect;
};

// The threshold only splits the summary counts; both ranked lists draw from
// every incorrect prediction. Ties order by window position.
QuadrantReport segment_quadrants(std::span<const PredictionRecord> records, double threshold,
                                 std::size_t k);

// Analyst report of both ranked lists with decoded events. The ground-truth
// column is written only when `with_ground_truth` is set.
void write_report(std::ostream& out, const QuadrantReport& report, const EventDictionary& dict,
                  bool with_ground_truth);

// <user>.predictions.csv
void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions_csv(std::istream& in);

}  // namespace insider

#endif  // INSIDER_DETECT_H_
