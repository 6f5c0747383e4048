#include "insider/train.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "insider/error.h"
#include "insider/io.h"

namespace insider {

void TrainingConfig::validate() const {
  if (epochs < 1) throw DataError("epochs must be at least 1");
  if (batch_size < 1) throw DataError("batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw DataError("learning rate must be positive");
  if (window_size < 1) throw DataError("window size must be at least 1");
  if (hidden_size < 1) throw DataError("hidden size must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw DataError("dropout must lie in [0, 1)");
  if (!(clip_norm > 0.0)) throw DataError("clip norm must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DataError("train fraction must lie strictly between 0 and 1");
  }
  if (chunk_size < 1) throw DataError("chunk size must be at least 1");
}

WindowBatch slice_batch(const WindowBatch& batch, std::size_t start, std::size_t count) {
  WindowBatch out;
  out.vocabulary_size = batch.vocabulary_size;
  out.inputs = batch.inputs.middleCols(static_cast<Eigen::Index>(start),
                                       static_cast<Eigen::Index>(count));
  const auto first = static_cast<std::ptrdiff_t>(start);
  const auto last = static_cast<std::ptrdiff_t>(start + count);
  out.targets.assign(batch.targets.begin() + first, batch.targets.begin() + last);
  out.labels.assign(batch.labels.begin() + first, batch.labels.begin() + last);
  out.positions.assign(batch.positions.begin() + first, batch.positions.begin() + last);
  return out;
}

namespace {

std::size_t infer_hits(const LstmModel<double>& model, const ForwardCache<double>& cache) {
  BatchMatrix<double> logits = model.params.dense_w * cache.layer2.h.back();
  logits.colwise() += model.params.dense_b;
  std::size_t hits = 0;
  for (Eigen::Index k = 0; k < logits.cols(); ++k) {
    Eigen::Index best = 0;
    logits.col(k).maxCoeff(&best);
    if (best == cache.targets[static_cast<std::size_t>(k)]) ++hits;
  }
  return hits;
}

}  // namespace

BatchGradient batch_gradient(const LstmModel<double>& model, const WindowBatch& batch, Rng& rng,
                             std::size_t chunk_size) {
  const std::size_t n = batch.batch_count();
  if (n == 0) throw DataError("gradient of an empty batch");
  if (n <= chunk_size) {
    auto cache = forward_batch(model, batch, Mode::kTrain, rng);
    const double accuracy = static_cast<double>(infer_hits(model, cache)) / static_cast<double>(n);
    return {cost_from_cache(cache), accuracy, backward(model, batch, cache)};
  }
  BatchGradient total{0.0, 0.0, GradientSet<double>::zeros_like(model.params)};
  std::vector<double*> dst;
  for_each_parameter(total.grads, [&dst](const std::string&, auto& g) { dst.push_back(g.data()); });
  std::size_t hits = 0;
  for (std::size_t start = 0; start < n; start += chunk_size) {
    const std::size_t count = std::min(chunk_size, n - start);
    const WindowBatch chunk = slice_batch(batch, start, count);
    auto cache = forward_batch(model, chunk, Mode::kTrain, rng);
    const double weight = static_cast<double>(count) / static_cast<double>(n);
    total.cost += weight * cost_from_cache(cache);
    hits += infer_hits(model, cache);
    const auto grads = backward(model, chunk, cache);
    std::size_t k = 0;
    for_each_parameter(grads, [&](const std::string&, const auto& g) {
      Eigen::Map<Eigen::VectorXd>(dst[k++], g.size()) +=
          weight * Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    });
  }
  total.accuracy = static_cast<double>(hits) / static_cast<double>(n);
  return total;
}

BatchMatrix<double> infer_probabilities(const LstmModel<double>& model, const WindowBatch& batch,
                                        std::size_t chunk_size) {
  const std::size_t n = batch.batch_count();
  BatchMatrix<double> out(static_cast<Eigen::Index>(model.vocabulary_size),
                          static_cast<Eigen::Index>(n));
  Rng unused(0);
  for (std::size_t start = 0; start < n; start += chunk_size) {
    const std::size_t count = std::min(chunk_size, n - start);
    auto cache = forward_batch(model, slice_batch(batch, start, count), Mode::kInfer, unused);
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) =
        cache.probabilities;
  }
  return out;
}

double batch_accuracy(const LstmModel<double>& model, const WindowBatch& batch) {
  if (batch.batch_count() == 0) throw DataError("accuracy of an empty batch");
  const BatchMatrix<double> p = infer_probabilities(model, batch);
  std::size_t hits = 0;
  for (Eigen::Index k = 0; k < p.cols(); ++k) {
    Eigen::Index best = 0;
    p.col(k).maxCoeff(&best);
    if (best == batch.targets[static_cast<std::size_t>(k)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(batch.batch_count());
}

TrainingResult train_user(const EncodedSequence& seq, const EventDictionary& dict,
                          const TrainingConfig& config, const TrainProgress& progress) {
  config.validate();
  const auto windows = make_windows(seq, config.window_size);
  if (windows.size() < 2) {
    throw DataError("user " + to_string(seq.user) + " has " + std::to_string(seq.size()) +
                    " events; too few to train a model with windows of " +
                    std::to_string(config.window_size));
  }

  TrainingResult result;
  result.split = stratified_split(windows, config.train_fraction, config.seed);
  result.model = init_model<double>(dict.size(), config.hidden_size, config.window_size,
                                    config.dropout_rate, config.seed);
  const auto& train = result.split.train;
  if (train.empty()) throw DataError("user " + to_string(seq.user) + " has no training windows");

  Rng shuffle_rng = Rng::stream(config.seed, 1);
  Rng dropout_rng = Rng::stream(config.seed, 2);
  std::vector<std::size_t> order(train.size());
  std::vector<Window> selected;
  selected.reserve(std::min(config.batch_size, train.size()));

  const auto started = std::chrono::steady_clock::now();
  auto elapsed_ms = [&started] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
        .count();
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(std::span(order));
    for (std::size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      selected.clear();
      for (std::size_t k = 0; k < count; ++k) selected.push_back(train[order[start + k]]);
      const WindowBatch batch = make_batch(selected, result.model.vocabulary_size);

      const BatchGradient g = batch_gradient(result.model, batch, dropout_rng, config.chunk_size);
      if (!std::isfinite(g.cost)) {
        throw DivergenceError("non-finite cost for user " + to_string(seq.user) + " at epoch " +
                              std::to_string(epoch + 1));
      }
      sgd_step(result.model, g.grads, config.learning_rate, config.clip_norm);

      TraceRecord record{epoch + 1, b + 1, g.cost, g.accuracy, elapsed_ms()};
      result.trace.records.push_back(record);
      if (progress) progress(record);
    }
  }
  result.trace.total_duration_ms = elapsed_ms();
  result.trace.last_batch_accuracy = result.trace.records.back().accuracy;
  return result;
}

void write_trace_csv(std::ostream& out, const TrainingTrace& trace) {
  out << "epoch,batch,cost,accuracy,elapsed_ms\n";
  char buf[160];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.3f\n", r.epoch, r.batch, r.cost,
                  r.accuracy, r.elapsed_ms);
    out << buf;
  }
}

namespace {

constexpr const char* kModelFormat = "insider-lstm-model";
constexpr int kModelVersion = 1;

}  // namespace

std::string serialize_model(const ModelFile& file) {
  using nlohmann::json;
  const auto& m = file.model;
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  doc["architecture"] = {{"layers", {"lstm", "lstm", "dropout", "dense_softmax"}},
                         {"vocabulary_size", m.vocabulary_size},
                         {"hidden_size", m.hidden_size},
                         {"window_size", m.window_size},
                         {"dropout_rate", m.dropout_rate},
                         {"seed", m.seed}};
  doc["dictionary_checksum"] = file.dictionary_checksum;
  doc["split"] = {{"train_fraction", file.train_fraction}, {"seed", file.split_seed}};
  json params = json::object();
  for_each_parameter(m.params, [&params](const std::string& name, const auto& array) {
    params[name] = {{"rows", array.rows()},
                    {"cols", array.cols()},
                    {"data", std::vector<double>(array.data(), array.data() + array.size())}};
  });
  doc["parameters"] = std::move(params);
  return doc.dump() + "\n";
}

ModelFile parse_model(std::string_view text) {
  using nlohmann::json;
  ModelFile file;
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kModelFormat ||
        doc.at("version").get<int>() != kModelVersion) {
      throw FormatError("unsupported model file format");
    }
    const auto& arch = doc.at("architecture");
    auto& m = file.model;
    m.vocabulary_size = arch.at("vocabulary_size").get<std::size_t>();
    m.hidden_size = arch.at("hidden_size").get<std::size_t>();
    m.window_size = arch.at("window_size").get<std::size_t>();
    m.dropout_rate = arch.at("dropout_rate").get<double>();
    m.seed = arch.at("seed").get<std::uint64_t>();
    file.dictionary_checksum = doc.at("dictionary_checksum").get<std::string>();
    file.train_fraction = doc.at("split").at("train_fraction").get<double>();
    file.split_seed = doc.at("split").at("seed").get<std::uint64_t>();

    const auto h = static_cast<Eigen::Index>(m.hidden_size);
    const auto v = static_cast<Eigen::Index>(m.vocabulary_size);
    m.params.cell1 = LstmCellParams<double>::zeros(h, v);
    m.params.cell2 = LstmCellParams<double>::zeros(h, h);
    m.params.dense_w.setZero(v, h);
    m.params.dense_b.setZero(v);
    const auto& params = doc.at("parameters");
    for_each_parameter(m.params, [&params](const std::string& name, auto& array) {
      const auto& entry = params.at(name);
      const auto data = entry.at("data").get<std::vector<double>>();
      if (entry.at("rows").get<Eigen::Index>() != array.rows() ||
          entry.at("cols").get<Eigen::Index>() != array.cols() ||
          static_cast<Eigen::Index>(data.size()) != array.size()) {
        throw FormatError("parameter " + name + " has the wrong shape");
      }
      std::copy(data.begin(), data.end(), array.data());
    });
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  return file;
}

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(file));
}

ModelFile load_model(const std::filesystem::path& path, const EventDictionary& dict) {
  ModelFile file = parse_model(read_file(path));
  if (file.dictionary_checksum != dict.checksum()) {
    throw DataError("model " + path.string() + " was trained against dictionary " +
                    file.dictionary_checksum + ", not " + dict.checksum());
  }
  if (file.model.vocabulary_size != dict.size()) {
    throw DataError("model vocabulary does not match dictionary size");
  }
  return file;
}

}  // namespace insider
