#ifndef INSIDER_NN_H_
#define INSIDER_NN_H_

// Two stacked LSTM cells, inverted dropout and a dense softmax head over the
// user's event vocabulary, with exact backpropagation through time.
//
// Batched computation keeps one column per window. The first cell never
// multiplies by its one-hot input: the input half of each gate matrix is
// gathered by event index (and scattered on the way back), which is the
// same product without the zeros.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "insider/dataset.h"
#include "insider/error.h"
#include "insider/numerics.h"
#include "insider/random.h"

namespace insider {

// Gate weights act on the concatenation [h_{t-1}; x_t], so each matrix is
// hidden x (hidden + input); the first `hidden` columns are recurrent.
template <typename Scalar>
struct LstmCellParams {
  Matrix<Scalar> w_forget, w_input, w_candidate, w_output;
  Vector<Scalar> b_forget, b_input, b_candidate, b_output;

  Eigen::Index hidden_size() const { return w_forget.rows(); }
  Eigen::Index input_size() const { return w_forget.cols() - w_forget.rows(); }

  static LstmCellParams zeros(Eigen::Index hidden, Eigen::Index input) {
    LstmCellParams p;
    for (auto* w : {&p.w_forget, &p.w_input, &p.w_candidate, &p.w_output}) {
      w->setZero(hidden, hidden + input);
    }
    for (auto* b : {&p.b_forget, &p.b_input, &p.b_candidate, &p.b_output}) b->setZero(hidden);
    return p;
  }
};

template <typename Scalar>
struct LstmState {
  Vector<Scalar> h;
  Vector<Scalar> c;

  static LstmState zeros(Eigen::Index hidden) {
    return {Vector<Scalar>::Zero(hidden), Vector<Scalar>::Zero(hidden)};
  }
};

// Every trainable array of the model. Gradients share the layout.
template <typename Scalar>
struct ModelParams {
  LstmCellParams<Scalar> cell1;  // input = vocabulary
  LstmCellParams<Scalar> cell2;  // input = cell1 hidden state
  Matrix<Scalar> dense_w;        // vocabulary x hidden
  Vector<Scalar> dense_b;        // vocabulary

  static ModelParams zeros_like(const ModelParams& other) {
    ModelParams p;
    p.cell1 = LstmCellParams<Scalar>::zeros(other.cell1.hidden_size(), other.cell1.input_size());
    p.cell2 = LstmCellParams<Scalar>::zeros(other.cell2.hidden_size(), other.cell2.input_size());
    p.dense_w.setZero(other.dense_w.rows(), other.dense_w.cols());
    p.dense_b.setZero(other.dense_b.size());
    return p;
  }
};

template <typename Scalar>
using GradientSet = ModelParams<Scalar>;

// Calls fn(name, array) for each parameter array in a fixed order.
template <typename Params, typename Fn>
void for_each_parameter(Params& p, Fn&& fn) {
  auto cell = [&fn](auto& c, std::string_view prefix) {
    const std::string s(prefix);
    fn(s + ".w_forget", c.w_forget);
    fn(s + ".w_input", c.w_input);
    fn(s + ".w_candidate", c.w_candidate);
    fn(s + ".w_output", c.w_output);
    fn(s + ".b_forget", c.b_forget);
    fn(s + ".b_input", c.b_input);
    fn(s + ".b_candidate", c.b_candidate);
    fn(s + ".b_output", c.b_output);
  };
  cell(p.cell1, "cell1");
  cell(p.cell2, "cell2");
  fn(std::string("dense_w"), p.dense_w);
  fn(std::string("dense_b"), p.dense_b);
}

template <typename Scalar>
struct LstmModel {
  ModelParams<Scalar> params;
  double dropout_rate = 0.0;
  std::size_t hidden_size = 0;
  std::size_t vocabulary_size = 0;
  std::size_t window_size = 0;
  std::uint64_t seed = 0;
};

enum class Mode { kTrain, kInfer };

template <typename Scalar>
LstmModel<Scalar> init_model(std::size_t vocabulary_size, std::size_t hidden_size,
                             std::size_t window_size, double dropout_rate, std::uint64_t seed) {
  if (vocabulary_size < 2) throw DataError("model needs a vocabulary of at least 2 events");
  if (hidden_size < 1) throw DataError("hidden size must be at least 1");
  if (window_size < 1) throw DataError("window size must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw DataError("dropout rate must lie in [0, 1)");
  }
  const auto hidden = static_cast<Eigen::Index>(hidden_size);
  const auto vocab = static_cast<Eigen::Index>(vocabulary_size);

  LstmModel<Scalar> model;
  model.dropout_rate = dropout_rate;
  model.hidden_size = hidden_size;
  model.vocabulary_size = vocabulary_size;
  model.window_size = window_size;
  model.seed = seed;
  model.params.cell1 = LstmCellParams<Scalar>::zeros(hidden, vocab);
  model.params.cell2 = LstmCellParams<Scalar>::zeros(hidden, hidden);
  model.params.dense_w.setZero(vocab, hidden);
  model.params.dense_b.setZero(vocab);

  // Glorot-uniform weights, drawn row-major in parameter order.
  Rng rng(seed);
  for_each_parameter(model.params, [&rng](const std::string&, auto& array) {
    if (array.cols() == 1) return;
    const double limit = std::sqrt(6.0 / static_cast<double>(array.rows() + array.cols()));
    for (Eigen::Index r = 0; r < array.rows(); ++r) {
      for (Eigen::Index c = 0; c < array.cols(); ++c) {
        array(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
      }
    }
  });
  model.params.cell1.b_forget.setOnes();
  model.params.cell2.b_forget.setOnes();
  return model;
}

// One LSTM time step on a single input vector:
//   f = sigmoid(W_f [h; x] + b_f)      i = sigmoid(W_i [h; x] + b_i)
//   g = tanh(W_c [h; x] + b_c)         o = sigmoid(W_o [h; x] + b_o)
//   c' = f * c + i * g                 h' = o * tanh(c')
template <typename Scalar, typename DerivedX>
LstmState<Scalar> lstm_step(const LstmCellParams<Scalar>& p, const Eigen::MatrixBase<DerivedX>& x,
                            const LstmState<Scalar>& prev) {
  if (x.size() != p.input_size() || prev.h.size() != p.hidden_size() ||
      prev.c.size() != p.hidden_size()) {
    throw DimensionError("lstm_step: input " + std::to_string(x.size()) + " / state " +
                         std::to_string(prev.h.size()) + " do not fit a cell of input " +
                         std::to_string(p.input_size()) + ", hidden " +
                         std::to_string(p.hidden_size()));
  }
  const Vector<Scalar> hx = concat(prev.h, x);
  const Vector<Scalar> f = sigmoid(matvec(p.w_forget, hx) + p.b_forget);
  const Vector<Scalar> i = sigmoid(matvec(p.w_input, hx) + p.b_input);
  const Vector<Scalar> g = tanh_act(matvec(p.w_candidate, hx) + p.b_candidate);
  const Vector<Scalar> o = sigmoid(matvec(p.w_output, hx) + p.b_output);
  LstmState<Scalar> next;
  next.c = elementwise(elementwise(f, prev.c, ElementwiseOp::kMul),
                       elementwise(i, g, ElementwiseOp::kMul), ElementwiseOp::kAdd);
  next.h = elementwise(o, tanh_act(next.c), ElementwiseOp::kMul);
  return next;
}

template <typename Scalar>
Scalar loss(const Eigen::Ref<const Vector<Scalar>>& probabilities, EventIndex target) {
  if (target < 0 || target >= probabilities.size()) {
    throw DimensionError("loss: target " + std::to_string(target) + " outside " +
                         std::to_string(probabilities.size()) + " classes");
  }
  return -std::log(std::max(probabilities[target], Scalar(1e-15)));
}

namespace detail {

// The four gate matrices of a cell stacked as [f; i; g; o], split into
// recurrent and input columns.
template <typename Scalar>
struct StackedCell {
  BatchMatrix<Scalar> w_h;  // 4H x H
  BatchMatrix<Scalar> w_x;  // 4H x input
  Vector<Scalar> b;         // 4H

  explicit StackedCell(const LstmCellParams<Scalar>& p) {
    const Eigen::Index h = p.hidden_size();
    const Eigen::Index in = p.input_size();
    w_h.resize(4 * h, h);
    w_x.resize(4 * h, in);
    b.resize(4 * h);
    const Matrix<Scalar>* ws[4] = {&p.w_forget, &p.w_input, &p.w_candidate, &p.w_output};
    const Vector<Scalar>* bs[4] = {&p.b_forget, &p.b_input, &p.b_candidate, &p.b_output};
    for (int k = 0; k < 4; ++k) {
      w_h.middleRows(k * h, h) = ws[k]->leftCols(h);
      w_x.middleRows(k * h, h) = ws[k]->rightCols(in);
      b.segment(k * h, h) = *bs[k];
    }
  }

  static void unstack(const BatchMatrix<Scalar>& d_h, const BatchMatrix<Scalar>& d_x,
                      const Vector<Scalar>& d_b, LstmCellParams<Scalar>& out) {
    const Eigen::Index h = d_h.cols();
    const Eigen::Index in = d_x.cols();
    Matrix<Scalar>* ws[4] = {&out.w_forget, &out.w_input, &out.w_candidate, &out.w_output};
    Vector<Scalar>* bs[4] = {&out.b_forget, &out.b_input, &out.b_candidate, &out.b_output};
    for (int k = 0; k < 4; ++k) {
      ws[k]->resize(h, h + in);
      ws[k]->leftCols(h) = d_h.middleRows(k * h, h);
      ws[k]->rightCols(in) = d_x.middleRows(k * h, h);
      *bs[k] = d_b.segment(k * h, h);
    }
  }
};

// Activations of one cell over a window, one entry per time step.
template <typename Scalar>
struct CellTrace {
  std::vector<BatchMatrix<Scalar>> gates;  // 4H x B, post-activation [f; i; g; o]
  std::vector<BatchMatrix<Scalar>> c;      // H x B
  std::vector<BatchMatrix<Scalar>> h;      // H x B
};

// Runs a stacked cell over all steps from a zero state. `add_input(t, pre)`
// adds the input contribution W_x x_t to the pre-activations.
template <typename Scalar, typename AddInput>
CellTrace<Scalar> run_cell(const StackedCell<Scalar>& cell, Eigen::Index steps,
                           Eigen::Index batch, AddInput&& add_input) {
  const Eigen::Index h = cell.w_h.cols();
  CellTrace<Scalar> trace;
  trace.gates.reserve(steps);
  trace.c.reserve(steps);
  trace.h.reserve(steps);
  BatchMatrix<Scalar> pre(4 * h, batch);
  for (Eigen::Index t = 0; t < steps; ++t) {
    pre.colwise() = cell.b;
    if (t > 0) pre.noalias() += cell.w_h * trace.h.back();
    add_input(t, pre);
    BatchMatrix<Scalar> act(4 * h, batch);
    act.topRows(2 * h) = sigmoid(pre.topRows(2 * h));
    act.middleRows(2 * h, h) = tanh_act(pre.middleRows(2 * h, h));
    act.bottomRows(h) = sigmoid(pre.bottomRows(h));
    BatchMatrix<Scalar> c = act.middleRows(h, h).cwiseProduct(act.middleRows(2 * h, h));
    if (t > 0) c += act.topRows(h).cwiseProduct(trace.c.back());
    trace.h.push_back(act.bottomRows(h).cwiseProduct(tanh_act(c)));
    trace.c.push_back(std::move(c));
    trace.gates.push_back(std::move(act));
  }
  return trace;
}

// Backpropagates through one cell. `dh_external(t)` is the gradient arriving
// on h_t from above; `on_input(t, d_pre)` receives the pre-activation
// gradient at each step so the caller can form the input-weight gradient
// and (for a stacked cell) the gradient flowing into its input.
template <typename Scalar, typename ExternalGrad, typename OnInput>
void backprop_cell(const StackedCell<Scalar>& cell, const CellTrace<Scalar>& trace,
                   ExternalGrad&& dh_external, OnInput&& on_input, BatchMatrix<Scalar>& d_wh,
                   Vector<Scalar>& d_b) {
  const Eigen::Index h = cell.w_h.cols();
  const auto steps = static_cast<Eigen::Index>(trace.h.size());
  const Eigen::Index batch = steps > 0 ? trace.h.front().cols() : 0;
  BatchMatrix<Scalar> dh_next = BatchMatrix<Scalar>::Zero(h, batch);
  BatchMatrix<Scalar> dc_next = BatchMatrix<Scalar>::Zero(h, batch);
  BatchMatrix<Scalar> d_pre(4 * h, batch);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto& act = trace.gates[t];
    const auto f = act.topRows(h).array();
    const auto i = act.middleRows(h, h).array();
    const auto g = act.middleRows(2 * h, h).array();
    const auto o = act.bottomRows(h).array();
    const BatchMatrix<Scalar> tanh_c = tanh_act(trace.c[t]);

    BatchMatrix<Scalar> dh = dh_next;
    dh_external(t, dh);
    const auto dh_a = dh.array();
    BatchMatrix<Scalar> dc =
        (dh_a * o * (Scalar(1) - tanh_c.array().square())).matrix() + dc_next;
    const auto dc_a = dc.array();

    if (t > 0) {
      d_pre.topRows(h) = (dc_a * trace.c[t - 1].array() * f * (Scalar(1) - f)).matrix();
    } else {
      d_pre.topRows(h).setZero();
    }
    d_pre.middleRows(h, h) = (dc_a * g * i * (Scalar(1) - i)).matrix();
    d_pre.middleRows(2 * h, h) = (dc_a * i * (Scalar(1) - g.square())).matrix();
    d_pre.bottomRows(h) = (dh_a * tanh_c.array() * o * (Scalar(1) - o)).matrix();
    dc_next = (dc_a * f).matrix();

    d_b += d_pre.rowwise().sum();
    if (t > 0) {
      d_wh.noalias() += d_pre * trace.h[t - 1].transpose();
      dh_next.noalias() = cell.w_h.transpose() * d_pre;
    }
    on_input(t, d_pre);
  }
}

}  // namespace detail

// Everything backward() needs from a forward pass over one batch.
template <typename Scalar>
struct ForwardCache {
  detail::CellTrace<Scalar> layer1;
  detail::CellTrace<Scalar> layer2;
  BatchMatrix<Scalar> dropout_mask;   // H x B, 0 or 1/(1-rate)
  BatchMatrix<Scalar> head_input;     // H x B, final h of cell2 after dropout
  BatchMatrix<Scalar> probabilities;  // V x B
  Eigen::Matrix<EventIndex, Eigen::Dynamic, Eigen::Dynamic> inputs;
  std::vector<EventIndex> targets;
  bool valid = false;
};

template <typename Scalar>
ForwardCache<Scalar> forward_batch(const LstmModel<Scalar>& model, const WindowBatch& batch,
                                   Mode mode, Rng& rng) {
  if (batch.window_size() != model.window_size ||
      batch.vocabulary_size != model.vocabulary_size) {
    throw DimensionError("batch of windows " + std::to_string(batch.window_size()) + " x vocab " +
                         std::to_string(batch.vocabulary_size) + " does not fit model of window " +
                         std::to_string(model.window_size) + " x vocab " +
                         std::to_string(model.vocabulary_size));
  }
  const auto steps = static_cast<Eigen::Index>(model.window_size);
  const auto b = static_cast<Eigen::Index>(batch.batch_count());
  const auto h = static_cast<Eigen::Index>(model.hidden_size);

  ForwardCache<Scalar> cache;
  cache.inputs = batch.inputs;
  cache.targets = batch.targets;
  if (b == 0) return cache;

  const detail::StackedCell<Scalar> cell1(model.params.cell1);
  const detail::StackedCell<Scalar> cell2(model.params.cell2);
  cache.layer1 = detail::run_cell(cell1, steps, b, [&](Eigen::Index t, BatchMatrix<Scalar>& pre) {
    for (Eigen::Index k = 0; k < b; ++k) pre.col(k) += cell1.w_x.col(batch.inputs(t, k));
  });
  cache.layer2 = detail::run_cell(cell2, steps, b, [&](Eigen::Index t, BatchMatrix<Scalar>& pre) {
    pre.noalias() += cell2.w_x * cache.layer1.h[t];
  });

  cache.dropout_mask = BatchMatrix<Scalar>::Ones(h, b);
  if (mode == Mode::kTrain && model.dropout_rate > 0.0) {
    const Scalar keep_scale = Scalar(1) / Scalar(1.0 - model.dropout_rate);
    for (Eigen::Index k = 0; k < b; ++k) {
      for (Eigen::Index j = 0; j < h; ++j) {
        cache.dropout_mask(j, k) = rng.bernoulli(model.dropout_rate) ? Scalar(0) : keep_scale;
      }
    }
  }
  cache.head_input = cache.layer2.h.back().cwiseProduct(cache.dropout_mask);
  BatchMatrix<Scalar> logits = model.params.dense_w * cache.head_input;
  logits.colwise() += model.params.dense_b;
  cache.probabilities = softmax(logits);
  cache.valid = true;
  return cache;
}

// Single window given as a window_size x vocabulary_size one-hot matrix.
template <typename Scalar>
std::pair<Vector<Scalar>, ForwardCache<Scalar>> forward(const LstmModel<Scalar>& model,
                                                        const Matrix<Scalar>& window, Mode mode,
                                                        Rng& rng) {
  if (window.rows() != static_cast<Eigen::Index>(model.window_size) ||
      window.cols() != static_cast<Eigen::Index>(model.vocabulary_size)) {
    throw DimensionError("forward: window " + shape_string(window.rows(), window.cols()) +
                         " does not match model " +
                         shape_string(static_cast<Eigen::Index>(model.window_size),
                                      static_cast<Eigen::Index>(model.vocabulary_size)));
  }
  WindowBatch batch;
  batch.vocabulary_size = model.vocabulary_size;
  batch.inputs.resize(window.rows(), 1);
  for (Eigen::Index t = 0; t < window.rows(); ++t) {
    Eigen::Index hot = 0;
    const Scalar peak = window.row(t).maxCoeff(&hot);
    if (peak != Scalar(1) || window.row(t).sum() != Scalar(1)) {
      throw DimensionError("forward: row " + std::to_string(t) + " is not one-hot");
    }
    batch.inputs(t, 0) = static_cast<EventIndex>(hot);
  }
  batch.targets = {0};
  batch.labels = {false};
  batch.positions = {0};
  auto cache = forward_batch(model, batch, mode, rng);
  Vector<Scalar> p = cache.probabilities.col(0);
  return {std::move(p), std::move(cache)};
}

template <typename Scalar>
Scalar cost_from_cache(const ForwardCache<Scalar>& cache) {
  if (!cache.valid || cache.targets.empty()) throw DataError("cost of an empty batch");
  Scalar total = 0;
  for (std::size_t k = 0; k < cache.targets.size(); ++k) {
    total += loss<Scalar>(cache.probabilities.col(static_cast<Eigen::Index>(k)), cache.targets[k]);
  }
  return total / static_cast<Scalar>(cache.targets.size());
}

// Mean cross-entropy of the batch.
template <typename Scalar>
Scalar cost(const LstmModel<Scalar>& model, const WindowBatch& batch, Rng& rng,
            Mode mode = Mode::kTrain) {
  if (batch.batch_count() == 0) throw DataError("cost of an empty batch");
  return cost_from_cache(forward_batch(model, batch, mode, rng));
}

// Exact gradient of the mean batch cost with respect to every parameter,
// reusing the activations and dropout mask of the forward pass in `cache`.
template <typename Scalar>
GradientSet<Scalar> backward(const LstmModel<Scalar>& model, const WindowBatch& batch,
                             const ForwardCache<Scalar>& cache) {
  if (!cache.valid || cache.targets != batch.targets || cache.inputs.rows() != batch.inputs.rows() ||
      cache.inputs.cols() != batch.inputs.cols() || cache.inputs != batch.inputs) {
    throw DataError("backward: forward cache is missing or belongs to another batch");
  }
  const auto b = static_cast<Eigen::Index>(batch.batch_count());
  const auto h = static_cast<Eigen::Index>(model.hidden_size);
  const auto vocab = static_cast<Eigen::Index>(model.vocabulary_size);
  const auto steps = static_cast<Eigen::Index>(model.window_size);

  GradientSet<Scalar> grads;
  // Softmax + cross-entropy: d cost / d logits = (p - onehot(target)) / B.
  BatchMatrix<Scalar> d_logits = cache.probabilities;
  for (Eigen::Index k = 0; k < b; ++k) d_logits(batch.targets[k], k) -= Scalar(1);
  d_logits /= static_cast<Scalar>(b);

  grads.dense_w = d_logits * cache.head_input.transpose();
  grads.dense_b = d_logits.rowwise().sum();
  const BatchMatrix<Scalar> d_top =
      (model.params.dense_w.transpose() * d_logits).cwiseProduct(cache.dropout_mask);

  const detail::StackedCell<Scalar> cell1(model.params.cell1);
  const detail::StackedCell<Scalar> cell2(model.params.cell2);

  // Cell 2: gradient enters at the last step only; its input gradient is
  // the gradient on cell 1's hidden state at the same step.
  std::vector<BatchMatrix<Scalar>> d_h1(steps);
  BatchMatrix<Scalar> d2_wh = BatchMatrix<Scalar>::Zero(4 * h, h);
  BatchMatrix<Scalar> d2_wx = BatchMatrix<Scalar>::Zero(4 * h, h);
  Vector<Scalar> d2_b = Vector<Scalar>::Zero(4 * h);
  detail::backprop_cell(
      cell2, cache.layer2,
      [&](Eigen::Index t, BatchMatrix<Scalar>& dh) {
        if (t == steps - 1) dh += d_top;
      },
      [&](Eigen::Index t, const BatchMatrix<Scalar>& d_pre) {
        d2_wx.noalias() += d_pre * cache.layer1.h[t].transpose();
        d_h1[t].noalias() = cell2.w_x.transpose() * d_pre;
      },
      d2_wh, d2_b);

  BatchMatrix<Scalar> d1_wh = BatchMatrix<Scalar>::Zero(4 * h, h);
  BatchMatrix<Scalar> d1_wx = BatchMatrix<Scalar>::Zero(4 * h, vocab);
  Vector<Scalar> d1_b = Vector<Scalar>::Zero(4 * h);
  detail::backprop_cell(
      cell1, cache.layer1, [&](Eigen::Index t, BatchMatrix<Scalar>& dh) { dh += d_h1[t]; },
      [&](Eigen::Index t, const BatchMatrix<Scalar>& d_pre) {
        for (Eigen::Index k = 0; k < b; ++k) d1_wx.col(batch.inputs(t, k)) += d_pre.col(k);
      },
      d1_wh, d1_b);

  detail::StackedCell<Scalar>::unstack(d1_wh, d1_wx, d1_b, grads.cell1);
  detail::StackedCell<Scalar>::unstack(d2_wh, d2_wx, d2_b, grads.cell2);
  return grads;
}

template <typename Scalar>
Scalar gradient_norm(const GradientSet<Scalar>& grads) {
  Scalar sum = 0;
  for_each_parameter(grads, [&sum](const std::string&, const auto& g) { sum += g.squaredNorm(); });
  return std::sqrt(sum);
}

// p := p - learning_rate * g, after rescaling g to `clip_norm` when its
// global L2 norm exceeds it. Returns the norm before clipping. Throws
// DivergenceError on non-finite gradients.
template <typename Scalar>
Scalar sgd_step(LstmModel<Scalar>& model, const GradientSet<Scalar>& grads, Scalar learning_rate,
                Scalar clip_norm) {
  if (!(learning_rate > Scalar(0))) throw DataError("learning rate must be positive");
  const Scalar norm = gradient_norm(grads);
  if (!std::isfinite(static_cast<double>(norm))) {
    throw DivergenceError("non-finite gradient; training diverged");
  }
  Scalar step = learning_rate;
  if (clip_norm > Scalar(0) && norm > clip_norm) step *= clip_norm / norm;

  std::vector<Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> flat;
  for_each_parameter(grads, [&flat](const std::string&, const auto& g) {
    flat.emplace_back(g.data(), g.size());
  });
  std::size_t k = 0;
  for_each_parameter(model.params, [&](const std::string&, auto& p) {
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> view(p.data(), p.size());
    if (view.size() != flat[k].size()) throw DimensionError("gradient layout does not match model");
    view -= step * flat[k];
    ++k;
  });
  return norm;
}

}  // namespace insider

#endif  // INSIDER_NN_H_
