#ifndef INSIDER_PIPELINE_H_
#define INSIDER_PIPELINE_H_

// Stage drivers behind the command-line tool. Each stage reads the
// artifacts of the previous one from an input directory, writes its own
// into an output directory (both may be the same), and leaves the effective
// configuration there as config.json.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "insider/synth.h"
#include "insider/train.h"

namespace insider {

struct PipelineConfig {
  TrainingConfig training;
  std::string base_date = "2018-01-01T00:00:00Z";
  std::string auth_path;
  std::string redteam_path;
  std::string work_dir;
  bool lanl_full = false;
  std::vector<std::string> users;
  double tau = 0.5;
  std::size_t k = 10;
  std::size_t parallel = 1;
  // Set by ingest when a red-team file was joined; controls whether reports
  // carry the ground-truth column.
  bool ground_truth_loaded = false;

  bool operator==(const PipelineConfig&) const;
};

std::string config_to_json(const PipelineConfig& config);
// Keys absent from `json` keep their value in `base`. Throws FormatError.
PipelineConfig config_from_json(std::string_view json, PipelineConfig base = {});

// Loads <dir>/config.json over `base` if it exists.
PipelineConfig inherit_config(const std::filesystem::path& dir, PipelineConfig base);

namespace files {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kIngestStats = "ingest_stats.json";
std::filesystem::path events(const std::filesystem::path& dir, const std::string& user);
std::filesystem::path dictionary(const std::filesystem::path& dir, const std::string& user);
std::filesystem::path encoded(const std::filesystem::path& dir, const std::string& user);
std::filesystem::path model(const std::filesystem::path& dir, const std::string& user);
std::filesystem::path trace(const std::filesystem::path& dir, const std::string& user);
std::filesystem::path predictions(const std::filesystem::path& dir, const std::string& user);
std::filesystem::path report(const std::filesystem::path& dir, const std::string& user);
std::filesystem::path roc(const std::filesystem::path& dir, const std::string& user);
std::filesystem::path summary(const std::filesystem::path& dir, const std::string& user);
}  // namespace files

// Every stage prints one summary line per user to `log`.
void run_ingest(const PipelineConfig& config, const std::filesystem::path& out, std::ostream& log);
void run_encode(const PipelineConfig& config, const std::filesystem::path& in,
                const std::filesystem::path& out, std::ostream& log);
void run_train(const PipelineConfig& config, const std::filesystem::path& in,
               const std::filesystem::path& out, std::ostream& log);
void run_detect(const PipelineConfig& config, const std::filesystem::path& in,
                const std::filesystem::path& out, std::ostream& log);
void run_evaluate(const PipelineConfig& config, const std::filesystem::path& in,
                  const std::filesystem::path& out, std::ostream& log);
// Writes <out>/auth.csv and <out>/redteam.csv.
void run_synth(const SynthSpec& spec, const std::filesystem::path& out, std::ostream& log);
// ingest -> encode -> train -> detect -> evaluate inside config.work_dir.
void run_all(const PipelineConfig& config, std::ostream& log);

}  // namespace insider

#endif  // INSIDER_PIPELINE_H_
