#pragma once

// Config files for the tsdec command-line tool. Every section rejects unknown
// keys. Input paths inside a config file resolve relative to that file's
// directory; output directories resolve relative to the working directory and
// can be replaced wholesale with TSDEC_OUTPUT_DIR.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsdec/data.hpp"
#include "tsdec/eval.hpp"
#include "tsdec/model.hpp"
#include "tsdec/training.hpp"

namespace tsdec::cli {

inline constexpr const char* kOutputDirEnv = "TSDEC_OUTPUT_DIR";

// Either a CSV file or a synthetic corpus, given inline or as the path of a
// corpus JSON file. `family`/`role` filter synthetic series after generation.
struct DatasetSpec {
  std::string name;
  std::optional<std::filesystem::path> csv;
  std::optional<Granularity> granularity;
  bool log_transform = false;
  std::optional<SyntheticCorpusSpec> synthetic;
  std::uint64_t seed = 0;
  std::optional<std::string> family;
  std::optional<FamilyRole> role;
};

DatasetSpec dataset_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json dataset_to_json(const DatasetSpec& d);
// Prints skipped-series notices for CSV inputs to stderr.
std::vector<TimeSeries> load_dataset(const DatasetSpec& d);

// {"preset": "desk" | "full", ...ModelConfig overrides}
ModelConfig model_from_json(const nlohmann::json& j);

struct PretrainConfig {
  std::filesystem::path output_dir = "runs/pretrain";
  std::uint64_t seed = 0;
  std::vector<DatasetSpec> corpus;
  ModelConfig model;
  TrainConfig train;
  std::optional<std::filesystem::path> resume_from;
};

struct EvalTaskSpec {
  std::size_t context = 512;
  std::size_t horizon = 96;
  std::size_t stride = 1;
};

struct EvaluateConfig {
  std::filesystem::path output_dir = "runs/evaluate";
  std::optional<std::filesystem::path> checkpoint;
  std::optional<DatasetSpec> dataset;
  std::vector<EvalTaskSpec> tasks;
  std::optional<std::size_t> season;  // default per granularity
};

struct LabeledCheckpoint {
  std::string label;
  std::filesystem::path checkpoint;
};

struct AblateConfig {
  std::filesystem::path output_dir = "runs/ablate";
  std::string suite = "all";
  std::vector<DatasetSpec> datasets;
  std::optional<std::filesystem::path> context_checkpoint;
  std::vector<LabeledCheckpoint> input_patch_checkpoints;
  std::vector<LabeledCheckpoint> output_patch_checkpoints;
  AblationSettings settings;
};

nlohmann::json read_json_file(const std::filesystem::path& path);

PretrainConfig pretrain_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json pretrain_to_json(const PretrainConfig& c);
EvaluateConfig evaluate_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json evaluate_to_json(const EvaluateConfig& c);
AblateConfig ablate_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json ablate_to_json(const AblateConfig& c);

// TSDEC_OUTPUT_DIR when set, else `configured`.
std::filesystem::path resolve_output_dir(const std::filesystem::path& configured);
// Writes resolved_config.json under `dir`.
void write_snapshot(const std::filesystem::path& dir, const nlohmann::json& resolved);

// Typical seasonality in steps: 96, 24, 7, 52, 12.
std::size_t default_season(Granularity g);

}  // namespace tsdec::cli
