#include "insider/dataset.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "insider/log.h"
#include "insider/random.h"

namespace insider {

std::vector<Window> make_windows(const EncodedSequence& seq, std::size_t window_size) {
  if (window_size < 1) throw DataError("window size must be at least 1");
  std::vector<Window> windows;
  if (seq.size() <= window_size) {
    log_warning("user " + to_string(seq.user) + " has " + std::to_string(seq.size()) +
                " events, too few for windows of " + std::to_string(window_size));
    return windows;
  }
  windows.reserve(seq.size() - window_size);
  for (std::size_t pos = window_size; pos < seq.size(); ++pos) {
    Window w;
    w.inputs.assign(seq.indices.begin() + static_cast<std::ptrdiff_t>(pos - window_size),
                    seq.indices.begin() + static_cast<std::ptrdiff_t>(pos));
    w.target = seq.indices[pos];
    w.target_label = seq.labels[pos];
    w.target_position = pos;
    windows.push_back(std::move(w));
  }
  return windows;
}

SplitDataset stratified_split(std::span<const Window> windows, double train_fraction,
                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DataError("train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < windows.size(); ++i) {
    strata[windows[i].target_label ? 1 : 0].push_back(i);
  }
  // Visit strata by earliest member rather than by label value.
  const bool normal_first =
      strata[1].empty() || (!strata[0].empty() && strata[0].front() < strata[1].front());
  const int order[2] = {normal_first ? 0 : 1, normal_first ? 1 : 0};

  Rng rng(seed);
  std::vector<char> in_test(windows.size(), 0);
  for (int s : order) {
    auto& members = strata[s];
    if (members.empty()) continue;
    if (members.size() < 2) {
      log_warning("stratum with " + std::to_string(members.size()) +
                  " window(s) kept entirely in training");
      continue;
    }
    const auto test_count = static_cast<std::size_t>(
        std::llround((1.0 - train_fraction) * static_cast<double>(members.size())));
    rng.shuffle(std::span(members));
    for (std::size_t k = 0; k < test_count; ++k) in_test[members[k]] = 1;
  }

  SplitDataset split;
  split.seed = seed;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    (in_test[i] ? split.test : split.train).push_back(windows[i]);
  }
  return split;
}

WindowBatch make_batch(std::span<const Window> windows, std::size_t vocabulary_size) {
  WindowBatch batch;
  batch.vocabulary_size = vocabulary_size;
  const std::size_t length = windows.empty() ? 0 : windows.front().inputs.size();
  batch.inputs.resize(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(windows.size()));
  batch.targets.reserve(windows.size());
  batch.labels.reserve(windows.size());
  batch.positions.reserve(windows.size());
  auto check = [&](EventIndex idx) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= vocabulary_size) {
      throw DimensionError("event index " + std::to_string(idx) + " outside vocabulary of size " +
                           std::to_string(vocabulary_size));
    }
  };
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const Window& w = windows[b];
    if (w.inputs.size() != length) throw DimensionError("windows in a batch must share a length");
    for (std::size_t t = 0; t < length; ++t) {
      check(w.inputs[t]);
      batch.inputs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) = w.inputs[t];
    }
    check(w.target);
    batch.targets.push_back(w.target);
    batch.labels.push_back(w.target_label);
    batch.positions.push_back(w.target_position);
  }
  return batch;
}

std::vector<WindowBatch> batch_windows(std::span<const Window> windows, std::size_t batch_size,
                                       std::size_t vocabulary_size) {
  if (batch_size < 1) throw DataError("batch size must be at least 1");
  std::vector<WindowBatch> batches;
  batches.reserve(batch_count_for(windows.size(), batch_size));
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, windows.size() - start);
    batches.push_back(make_batch(windows.subspan(start, n), vocabulary_size));
  }
  return batches;
}

}  // namespace insider
