#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsdec/checkpoint.hpp"
#include "tsdec/data.hpp"
#include "tsdec/model.hpp"

namespace tsdec {

// ---------------------------------------------------------------------------
// Reversible per-window standardization.

enum class NormalizationMode { kNone, kPerWindow };

std::string_view to_string(NormalizationMode mode);
NormalizationMode parse_normalization(std::string_view name);  // "none" | "per-window"

inline constexpr double kScaleEpsilon = 1e-8;

struct ScaleRecord {
  double mean = 0.0;
  double stddev = 1.0;  // already epsilon-guarded

  double apply(double v) const { return (v - mean) / stddev; }
  double invert(double v) const { return v * stddev + mean; }
  bool operator==(const ScaleRecord&) const = default;
};

struct NormalizedContext {
  std::vector<double> values;
  ScaleRecord record;
};

// Per-window: subtract the mean, divide by max(population std, 1e-8).
// kNone returns the input with the identity record.
NormalizedContext normalize_window(std::span<const double> context, NormalizationMode mode);
std::vector<double> denormalize(std::span<const double> values, const ScaleRecord& record);

// ---------------------------------------------------------------------------

// Mean over active tokens of (1/h)||forecast_j - target_j||^2. Forecasts and
// targets are [N x h]; the mask has N entries. Throws DegenerateBatchError when
// no token is active.
Tensor train_loss(const Tensor& forecasts, const Tensor& targets, std::span<const std::uint8_t> mask);

// ---------------------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 1e-3;
  double warmup_fraction = 0.05;  // linear warmup over this fraction of steps
  bool cosine_decay = true;
  std::size_t batch_size = 16;
  std::size_t total_steps = 2000;
  double clip_norm = 1.0;         // 0 disables clipping
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  NormalizationMode normalization = NormalizationMode::kPerWindow;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::size_t eval_every = 100;      // validation cadence for the loss curve
  std::size_t val_windows = 64;      // fixed validation windows (one per series)
  std::optional<MixtureConfig> mixture;  // unset: uniform over corpus granularities

  void validate() const;  // throws ConfigError
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

double learning_rate_at(const TrainConfig& config, std::size_t step);

struct OptimizerState {
  std::size_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static OptimizerState for_parameters(std::span<const NamedTensor> params);
};

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // 0 disables
};

struct AdamStepReport {
  double grad_norm = 0.0;  // before clipping
  double clip_scale = 1.0;
};

// Bias-corrected Adam over the accumulated gradients of `params` (missing
// gradients count as zero). Clips by global norm first when configured. A
// non-finite gradient aborts the step untouched and raises NumericError naming
// the parameter.
AdamStepReport adam_step(std::span<const NamedTensor> params, OptimizerState& state, const AdamSettings& settings);

// ---------------------------------------------------------------------------

// Inputs and targets assembled for one training window.
struct WindowBatchItem {
  Tensor patch_matrix;  // [N x p(1+r)], N = tokens through the last active one
  Tensor targets;       // [N x h] (zeros where masked)
  std::vector<std::uint8_t> mask;
  ScaleRecord scale;
};

WindowBatchItem assemble_window(const TimeSeries& series, const TrainingWindow& window, const ModelConfig& config,
                                NormalizationMode mode);

// Mean of per-window losses over a batch, reduced in canonical window order so
// the value does not depend on how the batch was assembled.
Tensor batch_loss(const PatchedDecoder& model, const std::vector<TimeSeries>& corpus,
                  std::vector<TrainingWindow> windows, NormalizationMode mode, ForwardContext ctx = {});

// Deterministic validation windows: each ends at its series' validation
// boundary and spans at most the granularity's context cap plus h.
std::vector<TrainingWindow> validation_windows(const std::vector<TimeSeries>& corpus, const MixtureConfig& mixture,
                                               const ModelConfig& config, std::size_t limit);

double evaluate_loss(const PatchedDecoder& model, const std::vector<TimeSeries>& corpus,
                     const std::vector<TrainingWindow>& windows, NormalizationMode mode);

struct LossPoint {
  std::size_t step = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

std::string loss_curve_csv(std::span<const LossPoint> curve);

struct TrainOptions {
  std::optional<std::filesystem::path> output_dir;  // checkpoints + loss.csv
  std::optional<std::filesystem::path> resume_from;
  std::uint64_t init_seed = 0;  // weight initialization when not resuming
  // Stop after this many steps even if total_steps is larger (tests use it to
  // simulate an interrupted run).
  std::optional<std::size_t> stop_after;
  std::function<void(const LossPoint&)> on_step;
};

struct TrainResult {
  PatchedDecoder model;
  OptimizerState optimizer;
  std::vector<LossPoint> curve;
  std::vector<std::filesystem::path> checkpoints;
};

// Checkpoint metadata written by training: normalization, train config, step.
Checkpoint make_training_checkpoint(const PatchedDecoder& model, const TrainConfig& config,
                                    const OptimizerState& optimizer);
NormalizationMode checkpoint_normalization(const Checkpoint& checkpoint);

// Batches depend only on (seed, step), so resuming from a checkpoint written
// at step s reproduces the uninterrupted curve. A non-finite loss raises
// DivergenceError naming the last good checkpoint (one written by this run, or
// the one resumed from); checkpoints already on disk are left in place.
// Mixture context caps are clamped to the model capacity (max_positions x p).
TrainResult train(const std::vector<TimeSeries>& corpus, const ModelConfig& model_config,
                  const TrainConfig& train_config, const TrainOptions& options = {});

}  // namespace tsdec
