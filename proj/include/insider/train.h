#ifndef INSIDER_TRAIN_H_
#define INSIDER_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "insider/dataset.h"
#include "insider/encode.h"
#include "insider/nn.h"

namespace insider {

struct TrainingConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 5000;
  double learning_rate = 0.1;
  std::size_t window_size = 30;
  std::size_t hidden_size = 64;
  double dropout_rate = 0.2;
  double clip_norm = 5.0;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  // Windows per forward/backward pass inside one batch. Only bounds memory;
  // the gradient is the same mean over the whole batch.
  std::size_t chunk_size = 512;

  // Throws DataError on out-of-range values.
  void validate() const;
};

// Cost and accuracy describe the batch as the model saw it before the
// update; accuracy is measured with dropout off.
struct TraceRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double cost = 0.0;
  double accuracy = 0.0;
  double elapsed_ms = 0.0;
};

struct TrainingTrace {
  std::vector<TraceRecord> records;
  double total_duration_ms = 0.0;
  double last_batch_accuracy = 0.0;
};

struct TrainingResult {
  LstmModel<double> model;
  SplitDataset split;
  TrainingTrace trace;
};

struct BatchGradient {
  double cost = 0.0;
  // Infer-mode accuracy of the same forward pass. Dropout only masks the
  // head input, so the undropped logits come from the cached hidden state.
  double accuracy = 0.0;
  GradientSet<double> grads;
};

// Mean cost and gradient over `batch`, evaluated `chunk_size` windows at a
// time in train mode. Chunks are visited in order so the result is
// deterministic for a given rng state.
BatchGradient batch_gradient(const LstmModel<double>& model, const WindowBatch& batch, Rng& rng,
                             std::size_t chunk_size);

// Columns [start, start + count) of a batch.
WindowBatch slice_batch(const WindowBatch& batch, std::size_t start, std::size_t count);

// V x B probabilities in infer mode, computed chunk by chunk.
BatchMatrix<double> infer_probabilities(const LstmModel<double>& model, const WindowBatch& batch,
                                        std::size_t chunk_size = 512);

// Fraction of windows whose most probable event is the target (infer mode).
double batch_accuracy(const LstmModel<double>& model, const WindowBatch& batch);

using TrainProgress = std::function<void(const TraceRecord&)>;

// Windows the sequence, splits it, initializes a model and runs
// config.epochs passes of SGD over the training windows, reshuffled every
// epoch. Red-team labels only travel with the windows; no computation here
// reads them. Throws DataError if the user has fewer than two windows.
TrainingResult train_user(const EncodedSequence& seq, const EventDictionary& dict,
                          const TrainingConfig& config, const TrainProgress& progress = {});

// <user>.trace.csv: epoch,batch,cost,accuracy,elapsed_ms
void write_trace_csv(std::ostream& out, const TrainingTrace& trace);

// Model metadata persisted alongside the parameters.
struct ModelFile {
  LstmModel<double> model;
  std::string dictionary_checksum;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};

std::string serialize_model(const ModelFile& file);
// Throws FormatError on malformed or truncated input.
ModelFile parse_model(std::string_view text);

void save_model(const ModelFile& file, const std::filesystem::path& path);
// Throws DataError if the model was trained against a different dictionary.
ModelFile load_model(const std::filesystem::path& path, const EventDictionary& dict);

}  // namespace insider

#endif  // INSIDER_TRAIN_H_
