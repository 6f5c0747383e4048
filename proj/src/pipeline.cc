#include "insider/pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "insider/detect.h"
#include "insider/error.h"
#include "insider/evaluate.h"
#include "insider/io.h"
#include "insider/log.h"

namespace insider {

namespace fs = std::filesystem;
using nlohmann::json;

bool PipelineConfig::operator==(const PipelineConfig& o) const {
  return config_to_json(*this) == config_to_json(o);
}

std::string config_to_json(const PipelineConfig& c) {
  const auto& t = c.training;
  json doc = {{"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"window_size", t.window_size},
              {"hidden_size", t.hidden_size},
              {"dropout_rate", t.dropout_rate},
              {"clip_norm", t.clip_norm},
              {"train_fraction", t.train_fraction},
              {"seed", t.seed},
              {"chunk_size", t.chunk_size},
              {"base_date", c.base_date},
              {"auth_path", c.auth_path},
              {"redteam_path", c.redteam_path},
              {"work_dir", c.work_dir},
              {"lanl_full", c.lanl_full},
              {"users", c.users},
              {"tau", c.tau},
              {"k", c.k},
              {"parallel", c.parallel},
              {"ground_truth_loaded", c.ground_truth_loaded}};
  return doc.dump(2) + "\n";
}

PipelineConfig config_from_json(std::string_view text, PipelineConfig c) {
  try {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw FormatError("config must be a JSON object");
    auto get = [&doc](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    auto& t = c.training;
    get("epochs", t.epochs);
    get("batch_size", t.batch_size);
    get("learning_rate", t.learning_rate);
    get("window_size", t.window_size);
    get("hidden_size", t.hidden_size);
    get("dropout_rate", t.dropout_rate);
    get("clip_norm", t.clip_norm);
    get("train_fraction", t.train_fraction);
    get("seed", t.seed);
    get("chunk_size", t.chunk_size);
    get("base_date", c.base_date);
    get("auth_path", c.auth_path);
    get("redteam_path", c.redteam_path);
    get("work_dir", c.work_dir);
    get("lanl_full", c.lanl_full);
    get("users", c.users);
    get("tau", c.tau);
    get("k", c.k);
    get("parallel", c.parallel);
    get("ground_truth_loaded", c.ground_truth_loaded);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig inherit_config(const fs::path& dir, PipelineConfig base) {
  const fs::path path = dir / files::kConfig;
  if (!fs::exists(path)) return base;
  return config_from_json(read_file(path), std::move(base));
}

namespace files {
std::filesystem::path events(const fs::path& d, const std::string& u) { return d / (u + ".events.csv"); }
std::filesystem::path dictionary(const fs::path& d, const std::string& u) { return d / (u + ".dict.json"); }
std::filesystem::path encoded(const fs::path& d, const std::string& u) { return d / (u + ".encoded.csv"); }
std::filesystem::path model(const fs::path& d, const std::string& u) { return d / (u + ".model.json"); }
std::filesystem::path trace(const fs::path& d, const std::string& u) { return d / (u + ".trace.csv"); }
std::filesystem::path predictions(const fs::path& d, const std::string& u) { return d / (u + ".predictions.csv"); }
std::filesystem::path report(const fs::path& d, const std::string& u) { return d / (u + ".report.csv"); }
std::filesystem::path roc(const fs::path& d, const std::string& u) { return d / (u + ".roc.csv"); }
std::filesystem::path summary(const fs::path& d, const std::string& u) { return d / (u + ".summary.json"); }
}  // namespace files

namespace {

UserId require_user(const std::string& text) {
  auto id = parse_user_id(text);
  if (!id) throw DataError("'" + text + "' is not a user id of the form U<digits>");
  return *id;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void require_file(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw DataError("missing " + path.string() + "; it is produced by `insider " + producer + "`");
  }
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

template <typename WriteFn>
void write_artifact(const fs::path& path, WriteFn&& write) {
  std::ostringstream out;
  write(out);
  write_file_atomic(path, out.str());
}

void copy_if_elsewhere(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  if (fs::exists(to) && fs::equivalent(from, to, ec)) return;
  write_file_atomic(to, read_file(from));
}

struct Target {
  std::string user;
  bool requested = false;  // named explicitly on the command line
};

// Users to process: the requested ones, or every user with `suffix`
// artifacts in `dir`, in numeric order.
std::vector<Target> targets(const PipelineConfig& config, const fs::path& dir,
                            std::string_view suffix) {
  std::vector<Target> out;
  if (!config.users.empty()) {
    std::vector<UserId> ids;
    for (const auto& u : config.users) ids.push_back(require_user(u));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (UserId id : ids) out.push_back({to_string(id), true});
    return out;
  }
  if (!fs::is_directory(dir)) throw IoError("input directory " + dir.string() + " does not exist");
  std::vector<UserId> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= suffix.size() || !name.ends_with(suffix)) continue;
    if (auto id = parse_user_id(std::string_view(name).substr(0, name.size() - suffix.size()))) {
      ids.push_back(*id);
    }
  }
  std::sort(ids.begin(), ids.end());
  for (UserId id : ids) out.push_back({to_string(id), false});
  return out;
}

void write_config(const PipelineConfig& config, const fs::path& out) {
  write_file_atomic(out / files::kConfig, config_to_json(config));
}

std::string fixed(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `parallel` threads. Log lines are
// emitted in index order and the first failure (by index) is rethrown.
template <typename Fn>
void fan_out(std::size_t n, std::size_t parallel, std::ostream& log, Fn&& fn) {
  std::vector<std::string> lines(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        lines[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallel, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    if (!lines[i].empty()) log << lines[i] << '\n';
  }
}

}  // namespace

void run_ingest(const PipelineConfig& config, const fs::path& out, std::ostream& log) {
  if (config.auth_path.empty()) throw DataError("no auth log given (--auth)");
  ensure_dir(out);
  IngestConfig ingest;
  ingest.lanl_full = config.lanl_full;
  ingest.base_date = parse_iso8601(config.base_date);
  std::optional<std::set<UserId>> filter;
  if (!config.users.empty()) {
    filter.emplace();
    for (const auto& u : config.users) filter->insert(require_user(u));
  }

  std::ifstream auth = open_in(config.auth_path);
  std::ifstream red;
  if (!config.redteam_path.empty()) red = open_in(config.redteam_path);
  const auto started = std::chrono::steady_clock::now();
  IngestResult result =
      ingest_auth_log(auth, config.redteam_path.empty() ? nullptr : &red, ingest, filter);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const auto bytes = fs::file_size(config.auth_path);

  for (const auto& [user, events] : result.users) {
    write_artifact(files::events(out, to_string(user)),
                   [&](std::ostream& os) { write_events_csv(os, events); });
    const auto red_count =
        std::count_if(events.begin(), events.end(), [](const AuthEvent& e) { return e.is_red_team; });
    log << to_string(user) << ": " << events.size() << " events, " << red_count
        << " red-team\n";
  }

  const auto& s = result.stats;
  json stats = {{"total_rows", s.total_rows},
                {"dropped_rows", s.dropped_rows},
                {"kept_rows", s.kept_rows()},
                {"users_seen", s.users_seen},
                {"red_team_rows", s.red_team_rows},
                {"red_team_dropped", result.red_team_dropped},
                {"bytes", bytes},
                {"seconds", seconds},
                {"rows_per_second", seconds > 0 ? static_cast<double>(s.total_rows) / seconds : 0.0}};
  write_file_atomic(out / files::kIngestStats, stats.dump(2) + "\n");

  PipelineConfig effective = config;
  effective.ground_truth_loaded = !config.redteam_path.empty();
  write_config(effective, out);
  log << "ingest: " << s.total_rows << " rows, " << s.dropped_rows << " dropped, "
      << s.users_seen << " users, " << s.red_team_rows << " red-team\n";
}

void run_encode(const PipelineConfig& config, const fs::path& in, const fs::path& out,
                std::ostream& log) {
  ensure_dir(out);
  for (const auto& target : targets(config, in, ".events.csv")) {
    const fs::path events_path = files::events(in, target.user);
    if (target.requested && !fs::exists(events_path)) {
      throw DataError("no events for user " + target.user + " (missing " + events_path.string() +
                      "; it is produced by `insider ingest`)");
    }
    auto stream = open_in(events_path);
    const auto events = read_events_csv(stream);
    const EventDictionary dict = build_dictionary(events);
    const EncodedSequence seq = encode_sequence(events, dict);
    write_artifact(files::dictionary(out, target.user),
                   [&](std::ostream& os) { write_dictionary_json(os, dict); });
    write_artifact(files::encoded(out, target.user),
                   [&](std::ostream& os) { write_encoded_csv(os, seq); });
    const auto report = vocab_report(dict);
    log << target.user << ": " << seq.size() << " events, vocabulary " << report.vocabulary_size
        << ", highest frequency " << report.highest_event_frequency << '\n';
  }
  write_config(config, out);
}

namespace {

struct UserData {
  EventDictionary dict;
  EncodedSequence seq;
};

UserData load_user(const fs::path& in, const Target& target) {
  const fs::path dict_path = files::dictionary(in, target.user);
  const fs::path encoded_path = files::encoded(in, target.user);
  if (!fs::exists(encoded_path) && target.requested) {
    throw DataError("no events for user " + target.user + " (missing " + encoded_path.string() +
                    "; it is produced by `insider encode`)");
  }
  require_file(dict_path, "encode");
  require_file(encoded_path, "encode");
  UserData data;
  auto d = open_in(dict_path);
  data.dict = read_dictionary_json(d);
  auto e = open_in(encoded_path);
  data.seq = read_encoded_csv(e, require_user(target.user));
  for (EventIndex idx : data.seq.indices) {
    if (static_cast<std::size_t>(idx) >= data.dict.size()) {
      throw DataError("encoded sequence of " + target.user + " does not match its dictionary");
    }
  }
  return data;
}

}  // namespace

void run_train(const PipelineConfig& config, const fs::path& in, const fs::path& out,
               std::ostream& log) {
  ensure_dir(out);
  config.training.validate();
  const auto users = targets(config, in, ".encoded.csv");
  fan_out(users.size(), config.parallel, log, [&](std::size_t i) -> std::string {
    const Target& target = users[i];
    UserData data = load_user(in, target);
    if (data.seq.size() == 0) throw DataError("no events for user " + target.user);
    if (data.seq.size() < config.training.window_size + 2 || data.dict.size() < 2) {
      const std::string why = "user " + target.user + " has " + std::to_string(data.seq.size()) +
                              " events and " + std::to_string(data.dict.size()) +
                              " distinct events; too few to train with windows of " +
                              std::to_string(config.training.window_size);
      if (target.requested) throw DataError(why);
      log_warning(why + ", skipped");
      return {};
    }
    // One progress line per finished epoch.
    std::optional<TraceRecord> last;
    auto report_epoch = [&] {
      log_progress(target.user + ": epoch " + std::to_string(last->epoch) + "/" +
                   std::to_string(config.training.epochs) + " cost " + fixed(last->cost) +
                   " accuracy " + fixed(last->accuracy));
    };
    TrainingResult result =
        train_user(data.seq, data.dict, config.training, [&](const TraceRecord& r) {
          if (last && last->epoch != r.epoch) report_epoch();
          last = r;
        });
    if (last) report_epoch();
    ModelFile file{std::move(result.model), data.dict.checksum(), config.training.train_fraction,
                   result.split.seed};
    save_model(file, files::model(out, target.user));
    write_artifact(files::trace(out, target.user),
                   [&](std::ostream& os) { write_trace_csv(os, result.trace); });
    copy_if_elsewhere(files::dictionary(in, target.user), files::dictionary(out, target.user));
    copy_if_elsewhere(files::encoded(in, target.user), files::encoded(out, target.user));
    return target.user + ": " + std::to_string(result.split.train.size()) + " training / " +
           std::to_string(result.split.test.size()) + " test windows, vocabulary " +
           std::to_string(data.dict.size()) + ", " + std::to_string(result.trace.records.size()) +
           " batches, last batch accuracy " + fixed(result.trace.last_batch_accuracy) + ", " +
           fixed(result.trace.total_duration_ms / 1000.0, 1) + " s";
  });
  write_config(config, out);
}

void run_detect(const PipelineConfig& config, const fs::path& in, const fs::path& out,
                std::ostream& log) {
  ensure_dir(out);
  for (const auto& target : targets(config, in, ".model.json")) {
    require_file(files::model(in, target.user), "train");
    const UserData data = load_user(in, target);
    const ModelFile file = load_model(files::model(in, target.user), data.dict);
    const auto windows = make_windows(data.seq, file.model.window_size);
    const SplitDataset split = stratified_split(windows, file.train_fraction, file.split_seed);
    const auto records = predict_all(file.model, split.test, data.seq);
    const QuadrantReport report = segment_quadrants(records, config.tau, config.k);
    write_artifact(files::predictions(out, target.user),
                   [&](std::ostream& os) { write_predictions_csv(os, records); });
    write_artifact(files::report(out, target.user), [&](std::ostream& os) {
      write_report(os, report, data.dict, config.ground_truth_loaded);
    });
    const auto& c = report.counts;
    log << target.user << ": " << records.size() << " predictions; high/correct "
        << c.high_correct << ", high/incorrect " << c.high_incorrect << ", low/correct "
        << c.low_correct << ", low/incorrect " << c.low_incorrect << '\n';
  }
  write_config(config, out);
}

void run_evaluate(const PipelineConfig& config, const fs::path& in, const fs::path& out,
                  std::ostream& log) {
  ensure_dir(out);
  for (const auto& target : targets(config, in, ".predictions.csv")) {
    const fs::path path = files::predictions(in, target.user);
    require_file(path, "detect");
    auto stream = open_in(path);
    const auto records = read_predictions_csv(stream);
    EvaluationSummary summary = evaluate_user(records, config.k, config.tau);
    if (!config.ground_truth_loaded) {
      summary.auc.reset();
      summary.curve.reset();
      summary.note = "ROC unavailable: no red-team file was loaded";
    }
    write_file_atomic(files::summary(out, target.user), summary_json(summary));
    if (summary.curve) {
      write_artifact(files::roc(out, target.user),
                     [&](std::ostream& os) { write_roc_csv(os, *summary.curve); });
    }
    log << target.user << ": " << records.size() << " predictions, top-1 accuracy "
        << fixed(summary.top1_accuracy) << ", ";
    if (summary.auc) {
      log << "AUC " << fixed(*summary.auc) << ", threat in " << summary.k
          << " lowest-probability incorrect: " << (summary.threat_in_top_k ? "yes" : "no");
    } else {
      log << summary.note;
    }
    log << '\n';
  }
  write_config(config, out);
}

void run_synth(const SynthSpec& spec, const fs::path& out, std::ostream& log) {
  ensure_dir(out);
  const fs::path auth_path = out / "auth.csv";
  const fs::path red_path = out / "redteam.csv";
  fs::path auth_tmp = auth_path, red_tmp = red_path;
  auth_tmp += ".tmp";
  red_tmp += ".tmp";
  SynthCounts counts;
  {
    std::ofstream auth(auth_tmp, std::ios::binary | std::ios::trunc);
    std::ofstream red(red_tmp, std::ios::binary | std::ios::trunc);
    if (!auth || !red) throw IoError("cannot write synthetic logs into " + out.string());
    counts = generate(spec, auth, red);
  }
  fs::rename(auth_tmp, auth_path);
  fs::rename(red_tmp, red_path);
  log << "synth: " << counts.auth_rows << " auth rows, " << counts.red_team_rows
      << " red-team rows, " << spec.users << " users -> " << auth_path.string() << '\n';
}

void run_all(const PipelineConfig& config, std::ostream& log) {
  if (config.work_dir.empty()) throw DataError("no work directory given (--out)");
  const fs::path dir = config.work_dir;
  run_ingest(config, dir, log);
  const PipelineConfig effective = inherit_config(dir, config);
  run_encode(effective, dir, dir, log);
  run_train(effective, dir, dir, log);
  run_detect(effective, dir, dir, log);
  run_evaluate(effective, dir, dir, log);
}

}  // namespace insider
