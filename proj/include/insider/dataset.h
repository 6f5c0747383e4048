#ifndef INSIDER_DATASET_H_
#define INSIDER_DATASET_H_

#include <cstdint>
#include <span>
#include <vector>

#include "insider/encode.h"
#include "insider/error.h"
#include "insider/numerics.h"

namespace insider {

// Many-to-one training example: `inputs` are the events immediately before
// the event at `target_position`.
struct Window {
  std::vector<EventIndex> inputs;
  EventIndex target = 0;
  bool target_label = false;
  std::size_t target_position = 0;
  bool operator==(const Window&) const = default;
};

// Stride-1 windows; the first `window_size` events are never targets. A
// sequence no longer than the window yields nothing (with a warning).
std::vector<Window> make_windows(const EncodedSequence& seq, std::size_t window_size);

template <typename Scalar = double>
Vector<Scalar> one_hot(EventIndex index, std::size_t vocabulary_size) {
  if (index < 0 || static_cast<std::size_t>(index) >= vocabulary_size) {
    throw DimensionError("one_hot: index " + std::to_string(index) +
                         " outside vocabulary of size " + std::to_string(vocabulary_size));
  }
  Vector<Scalar> v = Vector<Scalar>::Zero(static_cast<Eigen::Index>(vocabulary_size));
  v[index] = Scalar(1);
  return v;
}

struct SplitDataset {
  std::vector<Window> train;
  std::vector<Window> test;
  std::uint64_t seed = 0;
};

// Splits within each stratum (windows grouped by target label). Each
// stratum sends round((1 - train_fraction) * size) members to test, chosen by
// a seeded shuffle. Strata are visited in order of their earliest window, so
// swapping every label leaves the partition unchanged. Both halves come back
// ordered by target_position.
SplitDataset stratified_split(std::span<const Window> windows, double train_fraction,
                              std::uint64_t seed);

// A group of windows ready for the network. Inputs are kept as event
// indices, one column per window; the one-hot tensor of shape
// window_size x vocabulary_size x batch_count is exposed slice by slice so a
// batch of 5000 windows over a large vocabulary never has to be materialized
// densely.
struct WindowBatch {
  Eigen::Matrix<EventIndex, Eigen::Dynamic, Eigen::Dynamic> inputs;  // window_size x batch_count
  std::vector<EventIndex> targets;
  std::vector<bool> labels;
  std::vector<std::size_t> positions;
  std::size_t vocabulary_size = 0;

  std::size_t window_size() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t batch_count() const { return targets.size(); }

  // One-hot slice for time step `step`: vocabulary_size x batch_count.
  template <typename Scalar = double>
  BatchMatrix<Scalar> one_hot_step(std::size_t step) const {
    BatchMatrix<Scalar> slice =
        BatchMatrix<Scalar>::Zero(static_cast<Eigen::Index>(vocabulary_size), inputs.cols());
    for (Eigen::Index b = 0; b < inputs.cols(); ++b) {
      slice(inputs(static_cast<Eigen::Index>(step), b), b) = Scalar(1);
    }
    return slice;
  }

  // Window `b` as a dense window_size x vocabulary_size one-hot matrix.
  template <typename Scalar = double>
  Matrix<Scalar> one_hot_window(std::size_t b) const {
    Matrix<Scalar> m = Matrix<Scalar>::Zero(inputs.rows(), static_cast<Eigen::Index>(vocabulary_size));
    for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
      m(t, inputs(t, static_cast<Eigen::Index>(b))) = Scalar(1);
    }
    return m;
  }
};

// All windows must share one length and index into `vocabulary_size`.
WindowBatch make_batch(std::span<const Window> windows, std::size_t vocabulary_size);

// ceil(n / batch_size) consecutive batches; the last one may be short.
std::vector<WindowBatch> batch_windows(std::span<const Window> windows, std::size_t batch_size,
                                       std::size_t vocabulary_size);

inline std::size_t batch_count_for(std::size_t windows, std::size_t batch_size) {
  return (windows + batch_size - 1) / batch_size;
}

}  // namespace insider

#endif  // INSIDER_DATASET_H_
