#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "insider/nn.h"

using insider::LstmModel;
using insider::Mode;
using insider::Rng;
using insider::VectorXd;
using insider::Window;
using insider::WindowBatch;

namespace {

WindowBatch random_batch(Rng& rng, std::size_t count, std::size_t window, std::size_t vocab) {
  std::vector<Window> windows;
  for (std::size_t b = 0; b < count; ++b) {
    Window w;
    for (std::size_t t = 0; t < window; ++t) {
      w.inputs.push_back(static_cast<insider::EventIndex>(rng.below(vocab)));
    }
    w.target = static_cast<insider::EventIndex>(rng.below(vocab));
    w.target_position = window + b;
    windows.push_back(w);
  }
  return insider::make_batch(windows, vocab);
}

struct TensorError {
  std::string name;
  double relative = 0.0;
};

// Central differences of the mean batch cost against backward(), reported per
// parameter tensor as |analytic - numeric| / max(|analytic|, |numeric|).
std::vector<TensorError> gradient_check(LstmModel<double> model, const WindowBatch& batch,
                                        double eps) {
  Rng unused(0);
  const auto cache = insider::forward_batch(model, batch, Mode::kInfer, unused);
  const auto grads = insider::backward(model, batch, cache);

  std::vector<TensorError> errors;
  std::vector<std::pair<std::string, std::vector<double>>> analytic;
  insider::for_each_parameter(grads, [&](const std::string& name, const auto& g) {
    analytic.push_back({name, std::vector<double>(g.data(), g.data() + g.size())});
  });

  std::size_t tensor = 0;
  insider::for_each_parameter(model.params, [&](const std::string& name, auto& p) {
    double diff = 0.0;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + eps;
      const double up = insider::cost(model, batch, unused, Mode::kInfer);
      p.data()[i] = saved - eps;
      const double down = insider::cost(model, batch, unused, Mode::kInfer);
      p.data()[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[tensor].second[static_cast<std::size_t>(i)];
      diff = std::max(diff, std::abs(a - numeric));
      scale = std::max({scale, std::abs(a), std::abs(numeric)});
    }
    errors.push_back({name, scale == 0.0 ? diff : diff / scale});
    ++tensor;
  });
  return errors;
}

}  // namespace

TEST_CASE("init_model shapes and determinism") {
  const auto a = insider::init_model<double>(182, 64, 30, 0.2, 9);
  const auto b = insider::init_model<double>(182, 64, 30, 0.2, 9);
  CHECK(a.params.dense_w.rows() == 182);
  CHECK(a.params.dense_w.cols() == 64);
  CHECK(a.params.cell1.w_forget.cols() == 64 + 182);
  CHECK(a.params.cell2.w_forget.cols() == 128);
  CHECK(a.params.dense_w == b.params.dense_w);
  CHECK(a.params.cell1.w_candidate == b.params.cell1.w_candidate);
  CHECK(a.params.cell1.b_forget == VectorXd::Ones(64));
  const auto c = insider::init_model<double>(182, 64, 30, 0.2, 10);
  CHECK(c.params.dense_w != a.params.dense_w);

  CHECK_THROWS_AS(insider::init_model<double>(1, 4, 3, 0.0, 0), insider::DataError);
  CHECK_THROWS_AS(insider::init_model<double>(5, 0, 3, 0.0, 0), insider::DataError);
  CHECK_THROWS_AS(insider::init_model<double>(5, 4, 3, 1.0, 0), insider::DataError);
}

TEST_CASE("lstm_step with zero parameters matches hand values") {
  const auto p = insider::LstmCellParams<double>::zeros(3, 2);
  insider::LstmState<double> prev{VectorXd::Zero(3), VectorXd(3)};
  prev.c << 0.7, -2.0, 5.5;
  const auto next = insider::lstm_step(p, VectorXd::Ones(2), prev);
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(std::abs(next.c[j] - 0.5 * prev.c[j]) <= 1e-12);
    CHECK(std::abs(next.h[j] - 0.5 * std::tanh(0.5 * prev.c[j])) <= 1e-12);
  }
  const auto fixed = insider::lstm_step(p, VectorXd::Zero(2), insider::LstmState<double>::zeros(3));
  CHECK(fixed.h == VectorXd::Zero(3));
  CHECK(fixed.c == VectorXd::Zero(3));
  CHECK_THROWS_AS(insider::lstm_step(p, VectorXd::Zero(4), prev), insider::DimensionError);
}

TEST_CASE("batched forward agrees with the dense single-step route") {
  Rng rng(4);
  auto model = insider::init_model<double>(7, 5, 4, 0.0, 21);
  // Non-trivial biases so every term contributes.
  insider::for_each_parameter(model.params, [&rng](const std::string&, auto& a) {
    if (a.cols() == 1) {
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-0.5, 0.5);
    }
  });
  const WindowBatch batch = random_batch(rng, 6, 4, 7);
  Rng unused(0);
  const auto cache = insider::forward_batch(model, batch, Mode::kInfer, unused);

  for (std::size_t b = 0; b < batch.batch_count(); ++b) {
    auto s1 = insider::LstmState<double>::zeros(5);
    auto s2 = insider::LstmState<double>::zeros(5);
    for (Eigen::Index t = 0; t < 4; ++t) {
      const VectorXd x = insider::one_hot(batch.inputs(t, static_cast<Eigen::Index>(b)), 7);
      s1 = insider::lstm_step(model.params.cell1, x, s1);
      s2 = insider::lstm_step(model.params.cell2, s1.h, s2);
    }
    const VectorXd p =
        insider::softmax(insider::matvec(model.params.dense_w, s2.h) + model.params.dense_b);
    const VectorXd q = cache.probabilities.col(static_cast<Eigen::Index>(b));
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-14);

    const auto [single, single_cache] =
        insider::forward(model, batch.one_hot_window(b), Mode::kInfer, unused);
    CHECK((single - q).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("forward output contract") {
  Rng rng(8);
  const auto model = insider::init_model<double>(6, 4, 3, 0.3, 2);
  const WindowBatch batch = random_batch(rng, 1, 3, 6);
  const auto window = batch.one_hot_window(0);
  Rng r1(1);
  const auto [p1, c1] = insider::forward(model, window, Mode::kInfer, r1);
  const auto [p2, c2] = insider::forward(model, window, Mode::kInfer, r1);
  CHECK(p1.size() == 6);
  CHECK(std::abs(p1.sum() - 1.0) < 1e-12);
  CHECK(p1.minCoeff() > 0.0);
  CHECK(p1 == p2);

  Rng a(5);
  Rng b(5);
  CHECK(insider::forward(model, window, Mode::kTrain, a).first ==
        insider::forward(model, window, Mode::kTrain, b).first);

  auto plain = model;
  plain.dropout_rate = 0.0;
  CHECK(insider::forward(plain, window, Mode::kTrain, a).first ==
        insider::forward(plain, window, Mode::kInfer, a).first);

  insider::Matrix<double> bad = window;
  bad(0, 0) += 1.0;
  CHECK_THROWS_AS(insider::forward(model, bad, Mode::kInfer, a), insider::DimensionError);
  CHECK_THROWS_AS(insider::forward(model, insider::Matrix<double>(insider::Matrix<double>::Zero(2, 6)), Mode::kInfer, a),
                  insider::DimensionError);
}

TEST_CASE("hidden state stays bounded") {
  Rng rng(13);
  auto model = insider::init_model<double>(5, 4, 20, 0.0, 3);
  insider::for_each_parameter(model.params, [&rng](const std::string&, auto& a) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-20, 20);
  });
  const WindowBatch batch = random_batch(rng, 30, 20, 5);
  const auto cache = insider::forward_batch(model, batch, Mode::kInfer, rng);
  for (const auto& h : cache.layer2.h) CHECK(h.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(insider::all_finite(cache.probabilities));
}

TEST_CASE("loss values") {
  VectorXd p(4);
  p << 0.25, 0.25, 0.25, 0.25;
  CHECK(std::abs(insider::loss<double>(p, 2) - std::log(4.0)) < 1e-12);
  p << 0.5, 0.5, 0.0, 0.0;
  CHECK(std::abs(insider::loss<double>(p, 1) - std::log(2.0)) < 1e-12);
  p << 0.0, 1.0, 0.0, 0.0;
  CHECK(insider::loss<double>(p, 1) == 0.0);
  CHECK(std::isfinite(insider::loss<double>(p, 0)));

  for (int n = 2; n < 200; n += 7) {
    const VectorXd u = insider::softmax(VectorXd::Zero(n));
    CHECK(std::abs(insider::loss<double>(u, 0) - std::log(static_cast<double>(n))) < 1e-12);
  }
}

TEST_CASE("batch cost") {
  Rng rng(6);
  const auto model = insider::init_model<double>(5, 4, 3, 0.0, 1);
  WindowBatch one = random_batch(rng, 1, 3, 5);
  std::vector<Window> same(4);
  for (auto& w : same) {
    w.inputs = {one.inputs(0, 0), one.inputs(1, 0), one.inputs(2, 0)};
    w.target = one.targets[0];
  }
  const WindowBatch repeated = insider::make_batch(same, 5);
  CHECK(insider::cost(model, repeated, rng) == doctest::Approx(insider::cost(model, one, rng)));

  WindowBatch empty;
  empty.vocabulary_size = 5;
  empty.inputs.resize(3, 0);
  CHECK_THROWS_AS(insider::cost(model, empty, rng), insider::DataError);
}

TEST_CASE("analytic gradients match central differences") {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  const auto model = insider::init_model<double>(5, 4, 3, 0.0, 77);
  const WindowBatch batch = random_batch(rng, 2, 3, 5);
  double worst = 0.0;
  for (const auto& e : gradient_check(model, batch, 1e-5)) {
    INFO(e.name << " relative error " << e.relative);
    CHECK(e.relative < 1e-6);
    worst = std::max(worst, e.relative);
  }
  MESSAGE("worst relative gradient error " << worst);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}

TEST_CASE("gradients stay exact with dropout, longer windows and larger batches") {
  Rng rng(99);
  auto model = insider::init_model<double>(6, 5, 7, 0.0, 5);
  const WindowBatch batch = random_batch(rng, 9, 7, 6);
  for (const auto& e : gradient_check(model, batch, 1e-5)) {
    INFO(e.name);
    CHECK(e.relative < 1e-6);
  }

  // A fixed dropout mask is part of the function being differentiated.
  model.dropout_rate = 0.4;
  Rng mask_rng(3);
  const auto cache = insider::forward_batch(model, batch, Mode::kTrain, mask_rng);
  const auto grads = insider::backward(model, batch, cache);
  const double eps = 1e-5;
  auto perturbed = model;
  double max_err = 0.0;
  for (Eigen::Index i = 0; i < perturbed.params.dense_w.size(); ++i) {
    double& w = perturbed.params.dense_w.data()[i];
    const double saved = w;
    w = saved + eps;
    Rng up_rng(3);
    const double up = insider::cost(perturbed, batch, up_rng);
    w = saved - eps;
    Rng down_rng(3);
    const double down = insider::cost(perturbed, batch, down_rng);
    w = saved;
    max_err = std::max(max_err, std::abs((up - down) / (2 * eps) - grads.dense_w.data()[i]));
  }
  CHECK(max_err < 1e-8);
}

TEST_CASE("dense bias gradient is the mean of p minus the one-hot target") {
  Rng rng(12);
  const auto model = insider::init_model<double>(5, 4, 3, 0.0, 8);
  const WindowBatch batch = random_batch(rng, 4, 3, 5);
  const auto cache = insider::forward_batch(model, batch, Mode::kInfer, rng);
  const auto grads = insider::backward(model, batch, cache);
  VectorXd expected = VectorXd::Zero(5);
  for (std::size_t b = 0; b < 4; ++b) {
    expected += cache.probabilities.col(static_cast<Eigen::Index>(b)) -
                insider::one_hot(batch.targets[b], 5);
  }
  expected /= 4.0;
  CHECK((grads.dense_b - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gradients vanish at a confident correct prediction") {
  Rng rng(1);
  auto model = insider::init_model<double>(5, 4, 3, 0.0, 8);
  const WindowBatch batch = random_batch(rng, 1, 3, 5);
  model.params.dense_b.setConstant(-40.0);
  model.params.dense_b[batch.targets[0]] = 40.0;
  const auto cache = insider::forward_batch(model, batch, Mode::kInfer, rng);
  CHECK(insider::cost_from_cache(cache) < 1e-15);
  CHECK(insider::gradient_norm(insider::backward(model, batch, cache)) < 1e-15);
}

TEST_CASE("backward rejects a cache from another batch") {
  Rng rng(1);
  const auto model = insider::init_model<double>(5, 4, 3, 0.0, 8);
  const WindowBatch a = random_batch(rng, 3, 3, 5);
  const WindowBatch b = random_batch(rng, 3, 3, 5);
  const auto cache = insider::forward_batch(model, a, Mode::kInfer, rng);
  CHECK_THROWS_AS(insider::backward(model, b, cache), insider::Error);
  CHECK_THROWS_AS(insider::backward(model, a, insider::ForwardCache<double>{}), insider::Error);
}

TEST_CASE("sgd_step arithmetic and clipping") {
  auto model = insider::init_model<double>(2, 1, 1, 0.0, 0);
  auto grads = insider::GradientSet<double>::zeros_like(model.params);

  const auto before = model.params.dense_w;
  insider::sgd_step(model, grads, 1.0, 0.0);
  CHECK(model.params.dense_w == before);

  model.params.dense_b[0] = 2.0;
  grads.dense_b[0] = 0.5;
  insider::sgd_step(model, grads, 1.0, 0.0);
  CHECK(model.params.dense_b[0] == 1.5);

  // |g| = 10 with clip 5 moves by half the gradient.
  grads.dense_b << 6.0, 8.0;
  model.params.dense_b << 0.0, 0.0;
  const double norm = insider::sgd_step(model, grads, 1.0, 5.0);
  CHECK(norm == doctest::Approx(10.0));
  CHECK(model.params.dense_b[0] == doctest::Approx(-3.0));
  CHECK(model.params.dense_b[1] == doctest::Approx(-4.0));

  grads.dense_b[0] = std::nan("");
  CHECK_THROWS_AS(insider::sgd_step(model, grads, 1.0, 5.0), insider::DivergenceError);
}

TEST_CASE("a small SGD step never raises the batch cost") {
  Rng rng(31);
  int increases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto model = insider::init_model<double>(5, 4, 3, 0.0, 1000 + trial);
    const WindowBatch batch = random_batch(rng, 2, 3, 5);
    const auto cache = insider::forward_batch(model, batch, Mode::kInfer, rng);
    const double before = insider::cost_from_cache(cache);
    insider::sgd_step(model, insider::backward(model, batch, cache), 1e-3, 0.0);
    if (insider::cost(model, batch, rng, Mode::kInfer) > before) ++increases;
  }
  CHECK(increases == 0);
}

TEST_CASE("train-mode forward is reproducible from the seed") {
  Rng rng(41);
  const auto model = insider::init_model<double>(8, 6, 5, 0.5, 4);
  const WindowBatch batch = random_batch(rng, 10, 5, 8);
  Rng a(77);
  Rng b(77);
  const auto ca = insider::forward_batch(model, batch, Mode::kTrain, a);
  const auto cb = insider::forward_batch(model, batch, Mode::kTrain, b);
  CHECK(ca.probabilities == cb.probabilities);
  CHECK(ca.dropout_mask == cb.dropout_mask);
  // Roughly half the units dropped, survivors scaled by 2.
  const double kept = (ca.dropout_mask.array() > 0).cast<double>().mean();
  CHECK(kept > 0.3);
  CHECK(kept < 0.7);
  CHECK(ca.dropout_mask.maxCoeff() == 2.0);
}
