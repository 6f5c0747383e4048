// insider: per-user LSTM next-event models over authentication logs.
//
//   insider synth --out data --users 1 --events 20000 --vocab 50 --anomaly-rate 0.002 --seed 7
//   insider run-all --auth data/auth.csv --redteam data/redteam.csv --out work --user U0
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// divergence.

#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "insider/error.h"
#include "insider/io.h"
#include "insider/pipeline.h"

namespace {

using insider::PipelineConfig;
namespace fs = std::filesystem;

// Options whose values only apply when given explicitly, so that a config
// file or an inherited config.json is not clobbered by flag defaults.
class Overrides {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& flag, T PipelineConfig::*field,
           const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply_.push_back([opt, value, field](PipelineConfig& c) {
      if (opt->count() > 0) c.*field = *value;
    });
  }

  template <typename T>
  void add_training(CLI::App* app, const std::string& flag, T insider::TrainingConfig::*field,
                    const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply_.push_back([opt, value, field](PipelineConfig& c) {
      if (opt->count() > 0) c.training.*field = *value;
    });
  }

  void add_flag(CLI::App* app, const std::string& flag, bool PipelineConfig::*field,
                const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, help);
    apply_.push_back([opt, field](PipelineConfig& c) {
      if (opt->count() > 0) c.*field = true;
    });
  }

  void apply(PipelineConfig& c) const {
    for (const auto& fn : apply_) fn(c);
  }

 private:
  std::vector<std::function<void(PipelineConfig&)>> apply_;
};

void add_training_flags(CLI::App* app, Overrides& o) {
  using T = insider::TrainingConfig;
  o.add_training(app, "--epochs", &T::epochs, "Training epochs (default 30)");
  o.add_training(app, "--batch-size", &T::batch_size, "Windows per batch (default 5000)");
  o.add_training(app, "--window", &T::window_size, "Events per input window (default 30)");
  o.add_training(app, "--hidden", &T::hidden_size, "LSTM hidden units per layer (default 64)");
  o.add_training(app, "--dropout", &T::dropout_rate, "Dropout rate (default 0.2)");
  o.add_training(app, "--lr", &T::learning_rate, "SGD learning rate (default 0.1)");
  o.add_training(app, "--clip-norm", &T::clip_norm, "Global gradient norm clip (default 5)");
  o.add_training(app, "--train-fraction", &T::train_fraction, "Training share (default 0.8)");
  o.add_training(app, "--seed", &T::seed, "Random seed");
  o.add(app, "--parallel", &PipelineConfig::parallel, "Users trained concurrently");
}

void add_detect_flags(CLI::App* app, Overrides& o) {
  o.add(app, "--k", &PipelineConfig::k, "Ranked list length (default 10)");
  o.add(app, "--tau", &PipelineConfig::tau, "High/low probability threshold (default 0.5)");
}

void add_ingest_flags(CLI::App* app, Overrides& o) {
  o.add(app, "--auth", &PipelineConfig::auth_path, "Authentication log CSV");
  o.add(app, "--redteam", &PipelineConfig::redteam_path, "Red-team ground truth CSV");
  o.add_flag(app, "--lanl-full", &PipelineConfig::lanl_full, "Input uses the 9-field LANL schema");
  o.add(app, "--base-date", &PipelineConfig::base_date, "Absolute time of second 0 (ISO-8601)");
}

struct Stage {
  CLI::App* app = nullptr;
  Overrides overrides;
  std::string in;
  std::string out;
  std::string config_file;
  std::vector<std::string> users;

  PipelineConfig resolve(bool inherit_from_in) const {
    PipelineConfig c;
    if (inherit_from_in && !in.empty()) c = insider::inherit_config(in, c);
    if (!config_file.empty()) c = insider::config_from_json(insider::read_file(config_file), c);
    overrides.apply(c);
    if (!users.empty()) c.users = users;
    return c;
  }
};

Stage& make_stage(CLI::App& root, std::vector<std::unique_ptr<Stage>>& stages,
                  const std::string& name, const std::string& help, bool has_in) {
  auto stage = std::make_unique<Stage>();
  stage->app = root.add_subcommand(name, help);
  if (has_in) stage->app->add_option("--in", stage->in, "Input directory")->required();
  stage->app->add_option("--out", stage->out, "Output directory")->required();
  stage->app->add_option("--config", stage->config_file, "JSON config file; flags override it");
  stage->app->add_option("--user", stage->users, "Restrict to these users (repeatable)");
  stages.push_back(std::move(stage));
  return *stages.back();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Insider-threat detection over authentication logs with per-user LSTM models"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Stage>> stages;

  Stage& ingest = make_stage(app, stages, "ingest", "Parse, label and partition an auth log", false);
  add_ingest_flags(ingest.app, ingest.overrides);
  Stage& encode = make_stage(app, stages, "encode", "Build per-user event dictionaries", true);
  Stage& train = make_stage(app, stages, "train", "Train one model per user", true);
  add_training_flags(train.app, train.overrides);
  Stage& detect = make_stage(app, stages, "detect", "Score test windows and rank anomalies", true);
  add_detect_flags(detect.app, detect.overrides);
  Stage& evaluate = make_stage(app, stages, "evaluate", "ROC/AUC against the red team", true);
  add_detect_flags(evaluate.app, evaluate.overrides);
  Stage& all = make_stage(app, stages, "run-all", "ingest -> encode -> train -> detect -> evaluate",
                          false);
  add_ingest_flags(all.app, all.overrides);
  add_training_flags(all.app, all.overrides);
  add_detect_flags(all.app, all.overrides);

  insider::SynthSpec spec;
  std::string synth_out;
  std::string anomaly_mode = "off-support";
  CLI::App* synth = app.add_subcommand("synth", "Generate synthetic auth and red-team logs");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--users", spec.users, "Number of users")->required();
  synth->add_option("--events", spec.events_per_user, "Events per user")->required();
  synth->add_option("--vocab", spec.vocab_per_user, "Distinct normal events per user")->required();
  synth->add_option("--anomaly-rate", spec.anomaly_rate, "Share of anomalous events")->required();
  synth->add_option("--seed", spec.seed, "Random seed")->required();
  synth->add_option("--concentration", spec.transition_concentration,
                    "Peakedness of transitions (default 3)");
  synth->add_option("--branching", spec.branching, "Successors per state (default 4)");
  synth->add_option("--anomaly-vocab", spec.anomaly_vocab, "Distinct anomalous events (default 20)");
  synth->add_option("--burst", spec.anomaly_burst, "Mean anomalies per incident (default 1)");
  synth->add_option("--anomaly-mode", anomaly_mode, "off-support | rare-transition")
      ->check(CLI::IsMember({"off-support", "rare-transition"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      spec.mode = anomaly_mode == "rare-transition" ? insider::AnomalyMode::kRareTransition
                                                    : insider::AnomalyMode::kOffSupport;
      insider::run_synth(spec, synth_out, std::cout);
    } else if (ingest.app->parsed()) {
      insider::run_ingest(ingest.resolve(false), ingest.out, std::cout);
    } else if (encode.app->parsed()) {
      insider::run_encode(encode.resolve(true), encode.in, encode.out, std::cout);
    } else if (train.app->parsed()) {
      insider::run_train(train.resolve(true), train.in, train.out, std::cout);
    } else if (detect.app->parsed()) {
      insider::run_detect(detect.resolve(true), detect.in, detect.out, std::cout);
    } else if (evaluate.app->parsed()) {
      insider::run_evaluate(evaluate.resolve(true), evaluate.in, evaluate.out, std::cout);
    } else if (all.app->parsed()) {
      PipelineConfig c = all.resolve(false);
      c.work_dir = all.out;
      // Default to the files `synth` writes when the work directory holds them.
      if (c.auth_path.empty() && fs::exists(fs::path(all.out) / "auth.csv")) {
        c.auth_path = (fs::path(all.out) / "auth.csv").string();
        if (c.redteam_path.empty() && fs::exists(fs::path(all.out) / "redteam.csv")) {
          c.redteam_path = (fs::path(all.out) / "redteam.csv").string();
        }
      }
      insider::run_all(c, std::cout);
    }
  } catch (const insider::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const insider::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
