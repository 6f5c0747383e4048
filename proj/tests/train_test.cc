#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "insider/encode.h"
#include "insider/log.h"
#include "insider/train.h"

using insider::EncodedSequence;
using insider::EventDictionary;
using insider::TrainingConfig;

namespace {

// A user who cycles through `period` distinct events; `red` marks every
// event at positions p with p % 50 == 7.
struct Fixture {
  EventDictionary dict;
  EncodedSequence seq;
};

Fixture cyclic(std::size_t events, std::size_t period, bool invert_labels = false) {
  Fixture f;
  std::vector<insider::AuthEvent> raw;
  for (std::size_t i = 0; i < events; ++i) {
    const auto host = static_cast<std::uint32_t>(1 + i % period);
    const bool red = (i % 50 == 7) != invert_labels;
    raw.push_back(insider::assign_absolute_time(
        insider::RawRecord{static_cast<std::int64_t>(i), insider::UserId{1}, insider::HostId{host},
                           insider::HostId{host + 1}},
        insider::kDefaultBaseDate, red));
  }
  f.dict = insider::build_dictionary(raw);
  f.seq = insider::encode_sequence(raw, f.dict);
  return f;
}

TrainingConfig cyclic_config() {
  TrainingConfig c;
  c.window_size = 8;
  c.hidden_size = 16;
  c.learning_rate = 0.1;
  c.epochs = 200;
  c.seed = 3;
  return c;
}

bool same_parameters(const insider::LstmModel<double>& a, const insider::LstmModel<double>& b) {
  std::vector<std::vector<double>> left;
  insider::for_each_parameter(a.params, [&left](const std::string&, const auto& p) {
    left.emplace_back(p.data(), p.data() + p.size());
  });
  std::size_t k = 0;
  bool same = true;
  insider::for_each_parameter(b.params, [&](const std::string&, const auto& p) {
    same = same && left[k++] == std::vector<double>(p.data(), p.data() + p.size());
  });
  return same;
}

}  // namespace

TEST_CASE("the cyclic fixture is learned") {
  const Fixture f = cyclic(500, 4);
  REQUIRE(f.dict.size() == 4);
  const auto start = std::chrono::steady_clock::now();
  const auto result = insider::train_user(f.seq, f.dict, cyclic_config());
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::size_t first_hit = 0;
  for (const auto& r : result.trace.records) {
    if (r.accuracy >= 0.99) {
      first_hit = r.epoch;
      break;
    }
  }
  MESSAGE("accuracy >= 0.99 first at epoch " << first_hit << ", " << seconds << " s");
  CHECK(result.trace.last_batch_accuracy >= 0.99);
  CHECK(result.trace.last_batch_accuracy == result.trace.records.back().accuracy);
  CHECK(seconds < 60.0);

  // One batch per epoch here, so first and last records are the epoch means.
  CHECK(result.trace.records.size() == 200);
  CHECK(result.trace.records.back().cost < result.trace.records.front().cost);
}

TEST_CASE("trace length is epochs times batches per epoch") {
  const Fixture f = cyclic(300, 4);
  TrainingConfig c = cyclic_config();
  c.epochs = 3;
  c.batch_size = 50;
  const auto result = insider::train_user(f.seq, f.dict, c);
  const std::size_t train = result.split.train.size();
  CHECK(result.trace.records.size() == 3 * insider::batch_count_for(train, 50));
  CHECK(result.trace.records[0].batch == 1);
  CHECK(result.trace.records.back().epoch == 3);

  CHECK(3 * insider::batch_count_for(44439, 5000) == 27);
  CHECK(30 * insider::batch_count_for(44439, 5000) == 270);
}

TEST_CASE("training is reproducible and blind to labels") {
  const Fixture f = cyclic(300, 6);
  TrainingConfig c = cyclic_config();
  c.epochs = 4;
  c.batch_size = 64;
  c.chunk_size = 20;
  const auto a = insider::train_user(f.seq, f.dict, c);
  const auto b = insider::train_user(f.seq, f.dict, c);
  REQUIRE(a.trace.records.size() == b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    CHECK(a.trace.records[i].cost == b.trace.records[i].cost);
  }
  CHECK(same_parameters(a.model, b.model));

  const Fixture flipped = cyclic(300, 6, true);
  const auto inverted = insider::train_user(flipped.seq, flipped.dict, c);
  CHECK(same_parameters(a.model, inverted.model));

  c.seed = 4;
  CHECK_FALSE(same_parameters(a.model, insider::train_user(f.seq, f.dict, c).model));
}

TEST_CASE("chunking does not change the batch gradient") {
  const Fixture f = cyclic(200, 5);
  const auto windows = insider::make_windows(f.seq, 6);
  const auto batch = insider::make_batch(windows, f.dict.size());
  const auto model = insider::init_model<double>(f.dict.size(), 8, 6, 0.0, 1);
  insider::Rng r1(1);
  insider::Rng r2(1);
  const auto whole = insider::batch_gradient(model, batch, r1, 100000);
  const auto chunked = insider::batch_gradient(model, batch, r2, 17);
  CHECK(whole.cost == doctest::Approx(chunked.cost).epsilon(1e-12));
  CHECK((whole.grads.dense_w - chunked.grads.dense_w).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((whole.grads.cell1.w_input - chunked.grads.cell1.w_input).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batch accuracy") {
  const Fixture f = cyclic(400, 4);
  const auto windows = insider::make_windows(f.seq, 3);
  const auto batch = insider::make_batch(windows, 4);
  auto model = insider::init_model<double>(4, 4, 3, 0.0, 1);
  // Zero weights: a uniform model whose argmax is always event 0.
  insider::for_each_parameter(model.params, [](const std::string&, auto& p) { p.setZero(); });
  const double acc = insider::batch_accuracy(model, batch);
  CHECK(acc == doctest::Approx(0.25).epsilon(0.2));
  const auto one = insider::make_batch(std::span(windows).first(1), 4);
  const double single = insider::batch_accuracy(model, one);
  CHECK((single == 0.0 || single == 1.0));
  CHECK_THROWS_AS(insider::batch_accuracy(model, insider::make_batch({}, 4)), insider::DataError);
}

TEST_CASE("too few events is refused with the user named") {
  insider::warnings_enabled() = false;
  const Fixture f = cyclic(9, 4);
  try {
    insider::train_user(f.seq, f.dict, cyclic_config());
    FAIL("expected DataError");
  } catch (const insider::DataError& e) {
    CHECK(std::string(e.what()).find("U1") != std::string::npos);
  }
  insider::warnings_enabled() = true;
}

TEST_CASE("model files round trip and guard their dictionary") {
  const Fixture f = cyclic(120, 4);
  TrainingConfig c = cyclic_config();
  c.epochs = 2;
  const auto result = insider::train_user(f.seq, f.dict, c);
  const insider::ModelFile file{result.model, f.dict.checksum(), 0.8, c.seed};

  const auto dir = std::filesystem::temp_directory_path() / "insider_train_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "U1.model.json";
  insider::save_model(file, path);
  const auto loaded = insider::load_model(path, f.dict);
  CHECK(same_parameters(loaded.model, result.model));
  CHECK(loaded.model.window_size == 8);
  CHECK(loaded.model.hidden_size == 16);
  CHECK(loaded.split_seed == c.seed);
  CHECK(insider::serialize_model(loaded) == insider::serialize_model(file));

  const Fixture other = cyclic(120, 5);
  CHECK_THROWS_AS(insider::load_model(path, other.dict), insider::DataError);

  const std::string text = insider::serialize_model(file);
  CHECK_THROWS_AS(insider::parse_model(text.substr(0, text.size() / 2)), insider::FormatError);
  CHECK_THROWS_AS(insider::parse_model("{}"), insider::FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trace CSV") {
  insider::TrainingTrace trace;
  trace.records.push_back({1, 1, 0.5, 0.25, 12.0});
  std::ostringstream out;
  insider::write_trace_csv(out, trace);
  CHECK(out.str() == "epoch,batch,cost,accuracy,elapsed_ms\n1,1,0.5,0.25,12.000\n");
}
