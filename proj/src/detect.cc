#include "insider/detect.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "insider/error.h"
#include "insider/train.h"

namespace insider {

std::vector<PredictionRecord> predict_all(const LstmModel<double>& model,
                                          std::span<const Window> windows,
                                          const EncodedSequence& seq) {
  std::vector<PredictionRecord> records;
  if (windows.empty()) return records;
  const WindowBatch batch = make_batch(windows, model.vocabulary_size);
  const BatchMatrix<double> p = infer_probabilities(model, batch);
  records.reserve(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const Window& w = windows[k];
    if (w.target_position >= seq.size()) {
      throw DataError("window position " + std::to_string(w.target_position) +
                      " is outside the sequence");
    }
    const auto col = p.col(static_cast<Eigen::Index>(k));
    Eigen::Index best = 0;
    PredictionRecord r;
    r.window_position = w.target_position;
    r.timestamp = seq.timestamps[w.target_position];
    r.predicted_probability = col.maxCoeff(&best);
    r.predicted_index = static_cast<EventIndex>(best);
    r.actual_index = w.target;
    r.actual_probability = col[w.target];
    r.correct = r.predicted_index == r.actual_index;
    r.anomaly_score = 1.0 - r.actual_probability;
    r.is_red_team = w.target_label;
    records.push_back(r);
  }
  return records;
}

QuadrantReport segment_quadrants(std::span<const PredictionRecord> records, double threshold,
                                 std::size_t k) {
  QuadrantReport report;
  report.threshold = threshold;
  report.k = k;
  std::vector<const PredictionRecord*> incorrect;
  for (const auto& r : records) {
    switch (quadrant_of(r, threshold)) {
      case Quadrant::kHighCorrect: ++report.counts.high_correct; break;
      case Quadrant::kHighIncorrect: ++report.counts.high_incorrect; break;
      case Quadrant::kLowCorrect: ++report.counts.low_correct; break;
      case Quadrant::kLowIncorrect: ++report.counts.low_incorrect; break;
    }
    if (!r.correct) incorrect.push_back(&r);
  }
  const std::size_t take = std::min(k, incorrect.size());
  auto ascending = [](const PredictionRecord* a, const PredictionRecord* b) {
    if (a->predicted_probability != b->predicted_probability) {
      return a->predicted_probability < b->predicted_probability;
    }
    return a->window_position < b->window_position;
  };
  auto descending = [](const PredictionRecord* a, const PredictionRecord* b) {
    if (a->predicted_probability != b->predicted_probability) {
      return a->predicted_probability > b->predicted_probability;
    }
    return a->window_position < b->window_position;
  };
  auto top = [&](auto order, std::vector<PredictionRecord>& out) {
    std::vector<const PredictionRecord*> sorted = incorrect;
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take),
                      sorted.end(), order);
    for (std::size_t i = 0; i < take; ++i) out.push_back(*sorted[i]);
  };
  top(ascending, report.ranked_low_incorrect);
  top(descending, report.ranked_high_incorrect);
  return report;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_key(std::ostream& out, const EventKey& key) {
  out << to_string(key.user) << ',' << to_string(key.src) << ',' << to_string(key.dst);
}

}  // namespace

void write_report(std::ostream& out, const QuadrantReport& report, const EventDictionary& dict,
                  bool with_ground_truth) {
  out << "list,rank,window_position,timestamp,predicted_user,predicted_src,predicted_dst,"
         "probability,actual_user,actual_src,actual_dst,actual_probability";
  if (with_ground_truth) out << ",is_red_team";
  out << '\n';
  auto rows = [&](std::string_view name, const std::vector<PredictionRecord>& list) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& r = list[i];
      out << name << ',' << i + 1 << ',' << r.window_position << ',' << format_iso8601(r.timestamp)
          << ',';
      write_key(out, dict.key_of(r.predicted_index));
      out << ',' << format_double(r.predicted_probability) << ',';
      write_key(out, dict.key_of(r.actual_index));
      out << ',' << format_double(r.actual_probability);
      if (with_ground_truth) out << ',' << (r.is_red_team ? 1 : 0);
      out << '\n';
    }
  };
  rows("low_probability_incorrect", report.ranked_low_incorrect);
  rows("high_probability_incorrect", report.ranked_high_incorrect);
}

void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> records) {
  out << "window_position,timestamp,predicted_index,predicted_prob,actual_index,actual_prob,"
         "anomaly_score,correct,is_red_team\n";
  for (const auto& r : records) {
    out << r.window_position << ',' << format_iso8601(r.timestamp) << ',' << r.predicted_index
        << ',' << format_double(r.predicted_probability) << ',' << r.actual_index << ','
        << format_double(r.actual_probability) << ',' << format_double(r.anomaly_score) << ','
        << (r.correct ? 1 : 0) << ',' << (r.is_red_team ? 1 : 0) << '\n';
  }
}

std::vector<PredictionRecord> read_predictions_csv(std::istream& in) {
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;
    std::string_view f[9];
    std::size_t n = 0;
    std::size_t start = 0;
    std::string_view view(line);
    while (n < 9) {
      const std::size_t comma = view.find(',', start);
      f[n++] = view.substr(start, comma == std::string_view::npos ? comma : comma - start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    auto fail = [&] {
      return FormatError("predictions line " + std::to_string(line_no) + ": malformed");
    };
    if (n != 9 || start > view.size()) throw fail();
    auto num = [&](std::string_view s, auto& v) {
      if (std::from_chars(s.data(), s.data() + s.size(), v).ptr != s.data() + s.size()) {
        throw fail();
      }
    };
    PredictionRecord r;
    num(f[0], r.window_position);
    r.timestamp = parse_iso8601(f[1]);
    num(f[2], r.predicted_index);
    r.predicted_probability = std::stod(std::string(f[3]));
    num(f[4], r.actual_index);
    r.actual_probability = std::stod(std::string(f[5]));
    r.anomaly_score = std::stod(std::string(f[6]));
    r.correct = f[7] == "1";
    r.is_red_team = f[8] == "1";
    records.push_back(r);
  }
  if (in.bad()) throw IoError("read error while loading predictions");
  return records;
}

}  // namespace insider
