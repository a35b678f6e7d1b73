#pragma once

// Normalized forecast metrics, the rolling-window zero-shot protocol, naive
// baselines, and the ablation runners.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsdec/data.hpp"
#include "tsdec/inference.hpp"

namespace tsdec {

// (1/H) ||y - y_hat||^2.
double mse(std::span<const double> actual, std::span<const double> predicted);
// sqrt(mse) / mean|y|; nullopt when mean|y| == 0.
std::optional<double> nrmse(std::span<const double> actual, std::span<const double> predicted);
// mean|y - y_hat| / mean|y|; nullopt when mean|y| == 0.
std::optional<double> wape(std::span<const double> actual, std::span<const double> predicted);

struct MetricPair {
  double nrmse = 0.0;
  double wape = 0.0;
  std::size_t windows = 0;   // windows pooled
  std::size_t excluded = 0;  // zero-denominator windows left out
  std::string aggregation = "uniform-per-window";
};

struct EvalTask {
  std::string dataset;
  std::size_t context_len = 512;
  std::size_t horizon = 96;
  std::size_t stride = 1;
};

struct WindowRecord {
  std::string series_id;
  std::size_t window_start = 0;  // index of the first forecast step
  double nrmse = 0.0;
  double wape = 0.0;
};

struct SeriesMetrics {
  std::string series_id;
  MetricPair metrics;
};

struct EvalReport {
  std::string model;
  EvalTask task;
  MetricPair pooled;
  std::vector<SeriesMetrics> per_series;
  std::vector<WindowRecord> windows;  // ordered by (series, window start)

  nlohmann::json to_json() const;
  std::string summary_csv() const;  // pooled + per-series rows
  std::string windows_csv() const;  // series,window_start,nrmse,wape
};

// Uniform mean over the records.
MetricPair pool_windows(std::span<const WindowRecord> records);

// Forecast `horizon` values following values[context_begin, context_end).
using ForecastFn = std::function<std::vector<double>(const TimeSeries& series, std::size_t context_begin,
                                                     std::size_t context_end, std::size_t horizon)>;

// Every window whose horizon lies entirely inside the test split, advancing by
// `stride`. Contexts may reach back before the test boundary (clamped at the
// series start). Throws TaskError when a test split is shorter than the
// horizon.
EvalReport rolling_eval(const std::vector<TimeSeries>& series, const EvalTask& task, const ForecastFn& forecast,
                        std::string model_name);

std::vector<double> repeat_last(std::span<const double> context, std::size_t horizon);

struct SeasonalNaive {
  std::vector<double> predictions;
  bool fell_back = false;  // season longer than the context: repeat-last used
};
SeasonalNaive seasonal_naive(std::span<const double> context, std::size_t season, std::size_t horizon);

ForecastFn repeat_last_fn();
// Logs one warning to stderr the first time it falls back.
ForecastFn seasonal_naive_fn(std::size_t season);
// Derives date features from the series calendar when the model uses them.
ForecastFn model_forecast_fn(const Forecaster& forecaster);

// ---------------------------------------------------------------------------
// Ablations.

struct Table {
  std::string title;
  std::string row_header;
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  std::vector<std::string> notes;
};

std::string render_table(const Table& table);
std::string table_csv(const Table& table);

struct AblationDataset {
  std::string name;
  std::vector<TimeSeries> series;
};

struct ContextSweep {
  std::vector<std::size_t> contexts;
  std::vector<MetricPair> metrics;  // one per context
};

// NRMSE over rolling test windows for each context length at a fixed horizon.
// Throws TaskError when a series cannot supply the longest context before its
// test boundary.
ContextSweep variable_context_sweep(const Forecaster& forecaster, const std::vector<TimeSeries>& series,
                                    std::span<const std::size_t> contexts, std::size_t horizon,
                                    std::size_t stride = 1);

struct LabeledModel {
  std::string label;
  const Forecaster* forecaster = nullptr;
};

struct AblationSettings {
  std::vector<std::size_t> contexts{96, 192, 384, 512};
  std::size_t context_horizon = 96;
  std::size_t patch_context = 512;
  std::size_t patch_horizon = 96;
  std::size_t long_context = 512;
  std::size_t long_horizon = 512;
  std::size_t stride = 1;
};

// NRMSE vs context length, one row per dataset.
Table context_sweep_table(const Forecaster& forecaster, std::span<const AblationDataset> datasets,
                          const AblationSettings& settings, std::vector<ContextSweep>* curves = nullptr);
// NRMSE per model trained with a different input patch length.
Table input_patch_table(std::span<const LabeledModel> models, std::span<const AblationDataset> datasets,
                        const AblationSettings& settings);
// NRMSE per model trained with a different output patch length at a long
// horizon, with the autoregressive round count of each model and the
// full-scale reference counts (h = 32 vs 128 at H = 512).
Table output_patch_table(std::span<const LabeledModel> models, std::span<const AblationDataset> datasets,
                         const AblationSettings& settings);

}  // namespace tsdec
