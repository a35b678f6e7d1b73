#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

namespace tsdec::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure (divergence, I/O, bad checkpoint)
inline constexpr int kExitUsage = 2;    // config or request rejected before any work

struct PretrainArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> resume_from;
};

struct ForecastArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::optional<std::size_t> horizon;  // default for records without one
  std::filesystem::path output_dir = "runs/forecast";
  std::string output_name = "forecasts.jsonl";
};

struct EvaluateArgs {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> dataset_csv;
  std::optional<std::string> granularity;
  std::optional<std::size_t> context;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> stride;
  std::optional<std::size_t> season;
  std::optional<std::filesystem::path> output_dir;
};

struct AblateArgs {
  std::filesystem::path config;
  std::optional<std::string> suite;
  std::optional<std::filesystem::path> output_dir;
};

int cmd_pretrain(const PretrainArgs& args);
int cmd_forecast(const ForecastArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_ablate(const AblateArgs& args);

// Defaults of every config section as JSON, for `tsdec defaults`.
std::string defaults_json();

}  // namespace tsdec::cli
